"""Finite-state Markov chain primitives.

Value types for state spaces, distributions, row-stochastic transition
matrices and realized state sequences, plus the basic chain quantities the
rest of the package is built on: stationary distributions, entropy rate,
one-step autocorrelation, detailed-balance violation and seeded simulation.

All values are immutable after construction and safe to share across
threads; ``simulate`` is a pure function of its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
MASS_TOL = 1e-12
STATIONARY_TOL = 1e-10
_POWER_ITER_TOL = 1e-12
_POWER_ITER_MAX = 1_000_000


class ReducibleChainError(ValueError):
    """The chain has no unique stationary distribution (not irreducible)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class StateSpace:
    """Ordered numeric state values, e.g. ``(-1, 1)`` or ``(-1, 0, 1)``.

    Values must be strictly increasing and there must be at least two of
    them.  Indices elsewhere in the package refer to positions in this
    tuple.
    """

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise ValueError("a state space needs at least two states")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("state values must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    @classmethod
    def binary(cls) -> "StateSpace":
        """Two states encoded as -1 and +1."""
        return cls((-1.0, 1.0))

    @classmethod
    def ternary(cls) -> "StateSpace":
        """Three states encoded as -1, 0 and +1 (down / flat / up)."""
        return cls((-1.0, 0.0, 1.0))

    @classmethod
    def default(cls, n_states: int) -> "StateSpace":
        """Symmetric integer codes: (-1,+1) for 2 states, (-1,0,+1) for 3.

        Larger spaces get symmetric integer ladders (consecutive integers
        when ``n_states`` is odd, odd integers when it is even).
        """
        if n_states < 2:
            raise ValueError("n_states must be >= 2")
        if n_states % 2 == 1:
            half = n_states // 2
            return cls(tuple(float(v) for v in range(-half, half + 1)))
        return cls(tuple(float(2 * i - (n_states - 1)) for i in range(n_states)))


@dataclass(frozen=True)
class Distribution:
    """Probability mass over the states of a chain (sums to one)."""

    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 1 or mass.size < 1:
            raise ValueError("mass must be a 1-D vector")
        if np.any(mass < -MASS_TOL) or np.any(mass > 1 + MASS_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"mass sums to {mass.sum()!r}, expected 1")
        object.__setattr__(self, "mass", _readonly(np.clip(mass, 0.0, 1.0)))

    @property
    def size(self) -> int:
        return self.mass.size

    @classmethod
    def uniform(cls, n_states: int) -> "Distribution":
        return cls(np.full(n_states, 1.0 / n_states))

    @classmethod
    def point(cls, n_states: int, state: int) -> "Distribution":
        mass = np.zeros(n_states)
        mass[state] = 1.0
        return cls(mass)


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic transition matrix labelled with its state values.

    ``filled_rows`` marks rows that carry no observed evidence and were
    filled uniformly by an estimator (empty for exact constructions).
    """

    entries: np.ndarray
    states: StateSpace
    filled_rows: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        k = self.states.size
        if entries.shape != (k, k):
            raise ValueError(
                f"entries must be {k}x{k} to match the state space, got {entries.shape}"
            )
        if np.any(entries < -ROW_SUM_TOL) or np.any(entries > 1 + ROW_SUM_TOL):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = entries.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            raise ValueError(f"rows must sum to 1, got {row_sums}")
        object.__setattr__(self, "entries", _readonly(np.clip(entries, 0.0, 1.0)))
        object.__setattr__(self, "filled_rows", tuple(self.filled_rows))

    @property
    def size(self) -> int:
        return self.states.size

    @classmethod
    def uniform(cls, states: StateSpace) -> "StochasticMatrix":
        k = states.size
        return cls(np.full((k, k), 1.0 / k), states)


@dataclass(frozen=True)
class StateSequence:
    """A realized path of the chain, stored as indices into a state space."""

    indices: np.ndarray
    n_states: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices)
        if idx.ndim != 1:
            raise ValueError("indices must be a 1-D sequence")
        if not np.issubdtype(idx.dtype, np.integer):
            as_int = idx.astype(np.int64)
            if np.any(as_int != idx):
                raise ValueError("state indices must be integers")
            idx = as_int
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_states):
            raise ValueError(f"state indices must lie in [0, {self.n_states})")
        idx = np.array(idx, dtype=np.int64)
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)

    def values(self, states: StateSpace) -> np.ndarray:
        """Map indices to the numeric state values."""
        if states.size != self.n_states:
            raise ValueError("state space size does not match the sequence")
        return states.as_array()[self.indices]

    def slice(self, start: int, stop: int) -> "StateSequence":
        return StateSequence(self.indices[start:stop], self.n_states)


def _require_consistent(p: Distribution, w: StochasticMatrix) -> None:
    if p.size != w.size:
        raise ValueError(f"distribution has {p.size} states, matrix has {w.size}")


def is_irreducible(w: StochasticMatrix) -> bool:
    """Exact reachability test: positivity of sum(W^m, m=1..K)."""
    t = w.entries
    acc = np.zeros_like(t)
    power = np.eye(w.size)
    for _ in range(w.size):
        power = power @ t
        acc += power
    return bool(np.all(acc > 0))


def stationary_distribution(w: StochasticMatrix) -> Distribution:
    """Unique stationary distribution ``p`` with ``p @ W == p``.

    Solved as the dense left eigenvector for the unit eigenvalue, with a
    power-iteration fallback on the lazy chain ``(I + W)/2`` when the
    eigensolve is ill-conditioned.

    Raises:
        ReducibleChainError: if the chain is not irreducible (no unique
            stationary distribution).
    """
    if not is_irreducible(w):
        raise ReducibleChainError(
            "transition matrix is reducible: no unique stationary distribution"
        )
    t = w.entries
    evals, evecs = np.linalg.eig(t.T)
    order = np.argsort(-evals.real)
    lead = order[0]
    p = np.real(evecs[:, lead])
    p = np.where(np.abs(p) < 1e-300, 0.0, p)
    if p.sum() < 0:
        p = -p
    total = p.sum()
    if total > 0 and p.min() >= -1e-9:
        p = np.clip(p, 0.0, None) / np.clip(p, 0.0, None).sum()
        if np.abs(p @ t - p).max() <= STATIONARY_TOL:
            return Distribution(p)
    # fallback: power iteration on the aperiodic lazy chain
    lazy = 0.5 * (np.eye(w.size) + t)
    p = np.full(w.size, 1.0 / w.size)
    for _ in range(_POWER_ITER_MAX):
        p_next = p @ lazy
        if np.abs(p_next - p).max() <= _POWER_ITER_TOL:
            p = p_next
            break
        p = p_next
    p = p / p.sum()
    if np.abs(p @ t - p).max() > STATIONARY_TOL:
        raise ReducibleChainError("stationary distribution did not converge")
    return Distribution(p)


def entropy_rate(p: Distribution, w: StochasticMatrix) -> float:
    """Expected per-step entropy ``-sum_ij p_i W_ij ln W_ij`` in nats.

    Uses the convention ``0 * ln 0 = 0`` so deterministic rows contribute
    nothing.  With the stationary distribution this is the entropy rate of
    the chain; any other distribution gives the generalized objective with
    a free marginal.
    """
    _require_consistent(p, w)
    t = w.entries
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)), 0.0)
    return float(-(p.mass[:, None] * plogp).sum())


def matrix_autocorrelation(p: Distribution, w: StochasticMatrix) -> float:
    """One-step autocorrelation ``sum_ij x_i x_j p_i W_ij``.

    No centering and no variance normalization: for symmetric +-1 states
    at stationarity this is ``E[x_t x_(t+1)]`` and lies in [-1, 1].
    """
    _require_consistent(p, w)
    x = w.states.as_array()
    return float(np.einsum("i,j,i,ij->", x, x, p.mass, w.entries))


def detailed_balance_residual(p: Distribution, w: StochasticMatrix) -> float:
    """Largest violation ``max_ij |p_i W_ij - p_j W_ji|`` of reversibility."""
    _require_consistent(p, w)
    flux = p.mass[:, None] * w.entries
    return float(np.abs(flux - flux.T).max())


def simulate(
    w: StochasticMatrix, start: Distribution, n: int, seed: int
) -> StateSequence:
    """Sample a length-``n`` path, deterministically for a given seed."""
    _require_consistent(start, w)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    start_cum = np.cumsum(start.mass)
    row_cum = np.cumsum(w.entries, axis=1)
    u = rng.random(n)
    path = np.empty(n, dtype=np.int64)
    state = int(np.searchsorted(start_cum, u[0], side="right"))
    state = min(state, w.size - 1)
    path[0] = state
    for t in range(1, n):
        state = int(np.searchsorted(row_cum[state], u[t], side="right"))
        if state >= w.size:  # guards u == 1.0 edge against cumulative round-off
            state = w.size - 1
        path[t] = state
    return StateSequence(path, w.size)


def simulate_batch(
    entries: np.ndarray, start: np.ndarray, n: int, replicates: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized sampler: ``replicates`` independent paths of length ``n``.

    Internal workhorse for Monte-Carlo sweeps; returns an int array of
    shape ``(replicates, n)``.
    """
    k = entries.shape[0]
    row_cum = np.cumsum(entries, axis=1)
    start_cum = np.cumsum(start)
    paths = np.empty((replicates, n), dtype=np.int64)
    paths[:, 0] = np.minimum(
        (rng.random(replicates)[:, None] > start_cum[None, :]).sum(axis=1), k - 1
    )
    u = rng.random((replicates, n - 1)) if n > 1 else None
    for t in range(n - 1):
        cum = row_cum[paths[:, t]]
        paths[:, t + 1] = np.minimum((u[:, t, None] > cum).sum(axis=1), k - 1)
    return paths
