"""Transition-matrix estimators driven by observed state sequences.

Two single-shot estimators (transition-frequency counting and the
maximum-entropy fit to the sample autocorrelation) plus a sliding-window
driver that applies either of them, or a naive equiprobable guess, along a
series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import StateSequence, StateSpace, StochasticMatrix
from .solver import MaxEntSolution, feasible_range, maxent_2state, maxent_nstate

CLAMP_MARGIN = 1e-6

METHODS = ("maxent", "sampling", "naive")


@dataclass(frozen=True)
class SampleAutocorrelation:
    """Mean product of consecutive state values over a sample of length ``n``."""

    value: float
    n: int


@dataclass(frozen=True)
class WindowEstimate:
    """Per-time estimates from a trailing window slid along a series.

    ``times[i]`` is the 0-based index of the last observation inside the
    window that produced ``entries[i]``.
    """

    times: np.ndarray
    entries: np.ndarray  # (len(times), K, K)
    method: str
    states: StateSpace

    @property
    def matrices(self) -> list[StochasticMatrix]:
        return [StochasticMatrix(e, self.states) for e in self.entries]


def sample_autocorrelation(
    series: StateSequence, states: StateSpace
) -> SampleAutocorrelation:
    """Uncentered, unnormalized lag-1 autocorrelation of the value series.

    Averages ``x_t * x_(t+1)`` over the ``n - 1`` consecutive pairs of a
    length-``n`` sample.
    """
    if len(series) < 2:
        raise ValueError("need at least two observations")
    x = series.values(states)
    return SampleAutocorrelation(float((x[:-1] * x[1:]).mean()), len(series))


def transition_counts(series: StateSequence) -> np.ndarray:
    """Raw count of observed i -> j transitions, shape (K, K)."""
    k = series.n_states
    idx = series.indices
    codes = idx[:-1] * k + idx[1:]
    return np.bincount(codes, minlength=k * k).reshape(k, k).astype(float)


def frequency_estimate(series: StateSequence, n_states: int | None = None) -> StochasticMatrix:
    """Transition frequencies: counts of i -> j over departures from i.

    Rows for states never departed from carry no evidence; they are
    filled uniformly and reported in ``filled_rows``.
    """
    if len(series) < 2:
        raise ValueError("need at least two observations")
    k = n_states if n_states is not None else series.n_states
    if k != series.n_states:
        raise ValueError("n_states does not match the sequence")
    counts = transition_counts(series)
    departures = counts.sum(axis=1, keepdims=True)
    entries = np.where(departures > 0, counts / np.maximum(departures, 1.0), 1.0 / k)
    filled = tuple(int(i) for i in np.flatnonzero(departures.ravel() == 0))
    return StochasticMatrix(entries, StateSpace.default(k), filled_rows=filled)


def maxent_estimate(series: StateSequence, states: StateSpace) -> MaxEntSolution:
    """Maximum-entropy fit to the sample autocorrelation of a series.

    The sample value is clamped into the interior of the feasible range
    (margin 1e-6) so that degenerate windows, e.g. constant series, yield
    a near-deterministic matrix instead of an error.
    """
    sample = sample_autocorrelation(series, states)
    target = feasible_range(states).clamp(sample.value, CLAMP_MARGIN)
    if states.values == (-1.0, 1.0):
        return maxent_2state(target)
    return maxent_nstate(states, target)


def _naive_entries(k: int) -> np.ndarray:
    return np.full((k, k), 1.0 / k)


def _window_pair_sums(values: np.ndarray, window: int) -> np.ndarray:
    """Sum of consecutive-pair products for every trailing window."""
    z = values[:-1] * values[1:]
    cz = np.concatenate([[0.0], np.cumsum(z)])
    ends = np.arange(window - 1, values.size)
    return cz[ends] - cz[ends - window + 1]


def _window_counts(series: StateSequence, window: int) -> np.ndarray:
    """Transition counts per trailing window, shape (n_windows, K, K)."""
    k = series.n_states
    idx = series.indices
    codes = idx[:-1] * k + idx[1:]
    one_hot = np.zeros((codes.size + 1, k * k))
    one_hot[np.arange(1, codes.size + 1), codes] = 1.0
    cum = np.cumsum(one_hot, axis=0)
    ends = np.arange(window - 1, len(series))
    counts = cum[ends] - cum[ends - window + 1]
    return counts.reshape(-1, k, k)


def sliding_window(
    series: StateSequence, window: int, method: str, states: StateSpace
) -> WindowEstimate:
    """Estimate a matrix from the trailing window ending at every time step.

    The estimate at time ``t`` (0-based) uses exactly the observations
    ``t - window + 1 .. t``; windows advance one step at a time.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if states.size != series.n_states:
        raise ValueError("state space size does not match the sequence")
    if len(series) < window:
        raise ValueError(f"series of length {len(series)} is shorter than the window {window}")
    if window < 2 and method != "naive":
        raise ValueError("window must be >= 2 to observe transitions")

    k = states.size
    times = np.arange(window - 1, len(series))

    if method == "naive":
        entries = np.broadcast_to(_naive_entries(k), (times.size, k, k)).copy()
        return WindowEstimate(times, entries, method, states)

    if method == "sampling":
        counts = _window_counts(series, window)
        departures = counts.sum(axis=2, keepdims=True)
        entries = np.where(departures > 0, counts / np.maximum(departures, 1.0), 1.0 / k)
        return WindowEstimate(times, entries, method, states)

    # maxent
    x = series.values(states)
    targets = _window_pair_sums(x, window) / (window - 1)
    bounds = feasible_range(states)
    targets = np.clip(targets, bounds.lower + CLAMP_MARGIN, bounds.upper - CLAMP_MARGIN)
    if states.values == (-1.0, 1.0):
        stay = (1.0 + targets) / 2.0
        entries = np.empty((times.size, 2, 2))
        entries[:, 0, 0] = stay
        entries[:, 0, 1] = 1.0 - stay
        entries[:, 1, 0] = 1.0 - stay
        entries[:, 1, 1] = stay
    else:
        entries = np.empty((times.size, k, k))
        for i, a in enumerate(targets):
            entries[i] = maxent_nstate(states, float(a)).matrix.entries
    return WindowEstimate(times, entries, method, states)
