"""Command-line front end.

One binary with subcommands for estimation (``estimate``), parameter-space
sweeps (``ncmap``, ``mucurve``), time-varying simulations and tracking
(``simulate``, ``track``), tail forecasting (``forecast``, ``backtest``)
and price discretization (``discretize``).  Outputs are plot-ready tables:
CSV with a ``#``-prefixed JSON metadata line, or a single JSON document
with ``--format json``.  Artifacts are reproducible from the metadata
record, which always carries the resolved seed.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .accuracy import critical_size_map, mu_curve
from .chains import ReducibleChainError, StateSpace, StochasticMatrix
from .estimators import frequency_estimate, maxent_estimate, sample_autocorrelation
from .forecast import backtest, step_distribution, symmetrized_centiles, tail_bins
from .ingest import (
    PriceDataError,
    discretize,
    load_prices,
    load_states,
    resample,
    to_returns,
)
from .nonstationary import generate_nonstationary, toy_matrix, tracking_experiment
from .solver import ConvergenceError, InfeasibleTargetError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

WORKERS_ENV = "MAXENT_MARKOV_WORKERS"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1 on bad flags, not argparse's 2
        raise _UsageError(message)


def _int_list(raw: str) -> list[int]:
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="maxent-markov", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, output: bool = True) -> None:
        if output:
            p.add_argument("--output", help="output file (default: stdout)")
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser(
        "estimate",
        help="estimate a transition matrix from a state CSV",
        description="Output columns: from_state,to_state,probability",
    )
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("maxent", "sampling", "naive"), default="maxent")
    p.add_argument("--k", type=int, choices=(2, 3), help="force the state-space size")
    common(p)

    p = sub.add_parser(
        "ncmap",
        help="weighted critical-sample-size map of 2-state matrices",
        description="Output columns: stay_down,stay_up,nc_weighted,nc_down_row,nc_up_row",
    )
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--cap", type=int, default=500)
    common(p)

    p = sub.add_parser(
        "mucurve",
        help="favorable fraction mu(n) curves",
        description="Output columns: stratum,n,mu (stratum 0 = full population)",
    )
    p.add_argument("--k", type=int, choices=(2, 3), required=True)
    p.add_argument("--n", type=_int_list, required=True, help="sample sizes, e.g. 10,25,50")
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--cap", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--workers", type=int, default=None,
                   help=f"default from ${WORKERS_ENV} (1 if unset)")
    common(p)

    p = sub.add_parser(
        "simulate",
        help="realize the oscillating 2-state toy process",
        description="Output columns: t,state",
    )
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--period", type=float, default=500.0)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser(
        "track",
        help="window-tracking comparison on the toy process",
        description="Output columns: t,true_stay_down,maxent,sampling",
    )
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--period", type=float, default=500.0)
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1, help="number of seeds averaged")
    common(p)

    p = sub.add_parser(
        "forecast",
        help="multi-step tail forecast from the end of a series",
        description="Output columns: kind,k,value (kind is mass or tail_centile)",
    )
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("maxent", "sampling", "naive"), default="maxent")
    p.add_argument("--k", type=int, choices=(2, 3))
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--horizon", type=int, default=8)
    common(p)

    p = sub.add_parser(
        "backtest",
        help="rolling tail-error comparison of estimators",
        description="Output columns: n,method,delta,origins",
    )
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, choices=(2, 3))
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--horizon", type=int, default=8)
    p.add_argument("--methods", default="maxent,sampling,naive")
    p.add_argument("--stride", type=int, default=1)
    common(p)

    p = sub.add_parser(
        "discretize",
        help="price CSV to down/flat/up state CSV",
        description="Output columns: timestamp,state",
    )
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--interval", type=float, help="resample interval in seconds")
    common(p)

    return parser


def _write_artifact(args, metadata: dict, columns: list[str], rows: list[list]) -> None:
    """Emit a fully built table; nothing is written until the data exists."""
    metadata = {"artifact_version": __version__, **metadata}
    if getattr(args, "format", "csv") == "json":
        payload = json.dumps(
            {"metadata": metadata, "columns": columns, "rows": rows}, indent=2
        )
        text = payload + "\n"
    else:
        lines = ["# " + json.dumps(metadata), ",".join(columns)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        text = "\n".join(lines) + "\n"
    output = getattr(args, "output", None)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _config(args, **extra) -> dict:
    skip = {"output", "format", "command"}
    resolved = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    resolved.update(extra)
    return {"command": args.command, **resolved}


def _load_series(args):
    series, states = load_states(args.input, n_states=getattr(args, "k", None))
    return series, states


def _cmd_estimate(args) -> None:
    series, states = _load_series(args)
    meta = _config(args, k=states.size, states=list(states.values))
    if args.method == "maxent":
        solution = maxent_estimate(series, states)
        entries = solution.matrix.entries
        meta.update(
            multiplier=solution.multiplier,
            residual=solution.residual,
            target_autocorrelation=solution.target_autocorrelation,
            sample_autocorrelation=sample_autocorrelation(series, states).value,
        )
    elif args.method == "sampling":
        matrix = frequency_estimate(series)
        entries = matrix.entries
        meta.update(filled_rows=list(matrix.filled_rows))
    else:
        entries = np.full((states.size, states.size), 1.0 / states.size)
    rows = [
        [states.values[i], states.values[j], float(entries[i, j])]
        for i in range(states.size)
        for j in range(states.size)
    ]
    _write_artifact(args, meta, ["from_state", "to_state", "probability"], rows)


def _cmd_ncmap(args) -> None:
    grid_map = critical_size_map(resolution=args.grid, cap=args.cap)
    rows = []
    for i in range(args.grid):
        for j in range(args.grid):
            rows.append(
                [
                    float(grid_map.stay_down[i, j]),
                    float(grid_map.stay_up[i, j]),
                    float(grid_map.weighted[i, j]),
                    float(grid_map.nc_down_row[i, j]),
                    float(grid_map.nc_up_row[i, j]),
                ]
            )
    _write_artifact(
        args,
        _config(args),
        ["stay_down", "stay_up", "nc_weighted", "nc_down_row", "nc_up_row"],
        rows,
    )


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _cmd_mucurve(args) -> None:
    workers = args.workers if args.workers is not None else _default_workers()
    curves = mu_curve(
        args.k,
        args.n,
        grid=args.grid,
        samples=args.samples,
        replicates=args.replicates,
        cap=args.cap,
        seed=args.seed,
        stratify=args.stratify,
        workers=workers,
    )
    rows = []
    for curve in curves:
        stratum = 0 if curve.stratum is None else curve.stratum
        for n, frac in zip(curve.sample_sizes, curve.fractions):
            rows.append([stratum, int(n), float(frac)])
    _write_artifact(args, _config(args, workers=workers), ["stratum", "n", "mu"], rows)


def _cmd_simulate(args) -> None:
    series = generate_nonstationary(args.period, args.length, args.seed)
    values = series.values(StateSpace.binary())
    rows = [[t, int(v)] for t, v in enumerate(values)]
    _write_artifact(args, _config(args), ["t", "state"], rows)


def _cmd_track(args) -> None:
    seeds = [args.seed + i for i in range(args.samples)]
    report = tracking_experiment(args.period, args.length, args.window, seeds)
    rows = [
        [int(t), float(tr), float(report.estimates["maxent"][i]), float(report.estimates["sampling"][i])]
        for i, (t, tr) in enumerate(zip(report.times, report.true_coefficient))
    ]
    meta = _config(
        args,
        seeds=seeds,
        mae_maxent=report.mae["maxent"],
        mae_sampling=report.mae["sampling"],
    )
    _write_artifact(args, meta, ["t", "true_stay_down", "maxent", "sampling"], rows)


def _cmd_forecast(args) -> None:
    series, states = _load_series(args)
    if len(series) < args.window:
        raise PriceDataError("series shorter than the requested window")
    window = series.slice(len(series) - args.window, len(series))
    if args.method == "maxent":
        entries = maxent_estimate(window, states).matrix.entries
    elif args.method == "sampling":
        entries = frequency_estimate(window).entries
    else:
        entries = np.full((states.size, states.size), 1.0 / states.size)
    matrix = StochasticMatrix(entries, states)
    origin = int(series.indices[-1])
    q = step_distribution(matrix, origin, args.horizon)
    pi = symmetrized_centiles(q)
    rows = [["mass", int(k), float(p)] for k, p in zip(q.support, q.probabilities)]
    rows += [["tail_centile", k + 1, float(v)] for k, v in enumerate(pi.pi)]
    meta = _config(args, origin_state=origin, k=states.size)
    _write_artifact(args, meta, ["kind", "k", "value"], rows)


def _cmd_backtest(args) -> None:
    series, states = _load_series(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    report = backtest(
        series,
        states,
        args.n,
        horizon=args.horizon,
        methods=methods,
        stride=args.stride,
    )
    rows = []
    for si, n in enumerate(report.sample_sizes):
        for m in methods:
            rows.append([int(n), m, float(report.delta[m][si]), int(report.origin_counts[si])])
    _write_artifact(
        args, _config(args, k=states.size), ["n", "method", "delta", "origins"], rows
    )


def _cmd_discretize(args) -> None:
    prices = load_prices(args.input)
    if args.interval:
        prices = resample(prices, args.interval)
    returns = to_returns(prices)
    series = discretize(returns, threshold=args.threshold)
    values = series.values(StateSpace.ternary())
    rows = [[repr(float(ts)), int(v)] for ts, v in zip(returns.timestamps, values)]
    _write_artifact(args, _config(args), ["timestamp", "state"], rows)


_COMMANDS = {
    "estimate": _cmd_estimate,
    "ncmap": _cmd_ncmap,
    "mucurve": _cmd_mucurve,
    "simulate": _cmd_simulate,
    "track": _cmd_track,
    "forecast": _cmd_forecast,
    "backtest": _cmd_backtest,
    "discretize": _cmd_discretize,
}


def run(argv) -> int:
    """Parse arguments, dispatch, and map failures to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        PriceDataError,
        ReducibleChainError,
        InfeasibleTargetError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main(argv=None) -> int:
    try:
        code = run(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:  # argparse --version/--help
        return int(exc.code or 0)
    return code


if __name__ == "__main__":
    sys.exit(main())
