"""Weighted empirical quantile functions and exact integration of them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_output, check_ranks
from .exceptions import ContractError, DomainError, IngestionError

__all__ = [
    "ScoreSample",
    "EmpiricalQuantile",
    "build_empirical_quantile",
    "eval_quantile",
    "quantile_mean",
    "integrate_transformed",
]

BISECTION_STEPS = 50
PROBE_POINTS = 1001
MONOTONE_SLACK = 1e-12
DEFAULT_GRID_POINTS = 10001


class ScoreSample(NamedTuple):
    score: float
    weight: float = 1.0


@dataclass(frozen=True, eq=False)
class EmpiricalQuantile:
    """Left-continuous step quantile function of an observed score sample.

    ``values[i]`` is returned for ranks in ``(cum_weights[i-1], cum_weights[i]]``
    and ``values[0]`` at rank 0. ``cum_weights[-1]`` is exactly 1.
    """

    values: np.ndarray
    cum_weights: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        cum = np.array(self.cum_weights, dtype=float)
        if values.ndim != 1 or values.shape != cum.shape or values.size == 0:
            raise IngestionError("values and cum_weights must be non-empty 1-D arrays of equal length")
        if np.any(np.diff(values) < 0):
            raise IngestionError("values must be sorted non-decreasing")
        if cum[0] <= 0 or np.any(np.diff(cum) <= 0) or cum[-1] != 1.0:
            raise IngestionError("cum_weights must be strictly increasing in (0, 1] and end at 1")
        values.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cum_weights", cum)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def weights(self) -> np.ndarray:
        return np.diff(self.cum_weights, prepend=0.0)

    @property
    def min(self) -> float:
        return float(self.values[0])

    @property
    def max(self) -> float:
        return float(self.values[-1])

    def __call__(self, u):
        return eval_quantile(self, u)

    def mean(self) -> float:
        return quantile_mean(self)

    def __repr__(self):
        return f"EmpiricalQuantile(n={self.n}, min={self.min:g}, max={self.max:g})"


def build_empirical_quantile(samples, weights=None) -> EmpiricalQuantile:
    """Build the empirical quantile function of weighted scores.

    Parameters
    ----------
    samples : sequence of ScoreSample, sequence of (score, weight) pairs, or 1-D array of scores
    weights : array-like, optional
        Sampling weights when ``samples`` is a plain array of scores.

    Duplicate scores are merged and their weights summed.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise IngestionError("no score samples")
    if arr.ndim == 2 and arr.shape[1] == 2:
        if weights is not None:
            raise IngestionError("weights given twice")
        scores, w = arr[:, 0], arr[:, 1]
    elif arr.ndim == 1:
        scores = arr
        w = np.ones_like(scores) if weights is None else np.asarray(weights, dtype=float)
        if w.shape != scores.shape:
            raise IngestionError("weights must match scores in length")
    else:
        raise IngestionError(f"cannot interpret samples of shape {arr.shape}")

    bad = np.flatnonzero(~np.isfinite(scores))
    if bad.size:
        raise IngestionError(f"non-finite score at position {bad[0]}")
    bad = np.flatnonzero(~np.isfinite(w) | (w <= 0))
    if bad.size:
        raise IngestionError(f"weight must be positive and finite (position {bad[0]})")

    values, inverse = np.unique(scores, return_inverse=True)
    merged = np.bincount(inverse.ravel(), weights=w, minlength=values.size)
    cum = np.cumsum(merged)
    cum /= cum[-1]
    cum[-1] = 1.0
    if np.any(np.diff(cum) <= 0):
        raise IngestionError("weights too disparate to normalize without ties")
    return EmpiricalQuantile(values, cum)


def eval_quantile(q: EmpiricalQuantile, u):
    """Smallest support value whose cumulative weight is at least ``u``."""
    u, scalar = check_ranks(u)
    idx = np.searchsorted(q.cum_weights, u, side="left")
    idx = np.minimum(idx, q.n - 1)
    return as_output(q.values[idx], scalar)


def quantile_mean(q: EmpiricalQuantile) -> float:
    return float(np.dot(q.values, q.weights))


def _apply(rank_map, u):
    try:
        out = np.asarray(rank_map(u), dtype=float)
    except TypeError:
        out = None
    if out is None or out.shape != u.shape:
        out = np.array([float(rank_map(x)) for x in u])
    return out


def _probe(rank_map):
    grid = np.linspace(0.0, 1.0, PROBE_POINTS)
    vals = _apply(rank_map, grid)
    if np.any(~np.isfinite(vals)):
        raise ContractError("rank map returned non-finite values")
    if vals.min() < -MONOTONE_SLACK or vals.max() > 1.0 + MONOTONE_SLACK:
        raise ContractError("rank map leaves [0, 1]")
    if np.any(np.diff(vals) < -MONOTONE_SLACK):
        raise ContractError("rank map is not non-decreasing")


def _crossings(rank_map, levels):
    """``inf{u : rank_map(u) > w}`` for every level ``w``, by vectorized bisection."""
    lo = np.zeros_like(levels)
    hi = np.ones_like(levels)
    at0 = _apply(rank_map, lo) > levels
    at1 = _apply(rank_map, hi) > levels
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = _apply(rank_map, mid) > levels
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    out = 0.5 * (lo + hi)
    out = np.where(at0, 0.0, out)
    out = np.where(at1, out, 1.0)
    return np.maximum.accumulate(out)


def integrate_transformed(q: EmpiricalQuantile, rank_map, method="exact_breakpoint",
                          grid_points=DEFAULT_GRID_POINTS) -> float:
    """Integral over ``[0, 1]`` of ``u -> Q(rank_map(u))``.

    ``rank_map`` must be non-decreasing from ``[0, 1]`` into ``[0, 1]`` and
    should accept numpy arrays (scalar-only callables are looped over).

    ``method="exact_breakpoint"`` integrates the step function exactly: the
    composite only jumps where ``rank_map`` crosses a cumulative weight, so
    each crossing is located by bisection and the segment lengths weighted
    by the step values. ``method="grid"`` uses a midpoint rule with
    ``grid_points`` nodes.
    """
    _probe(rank_map)
    if method == "exact_breakpoint":
        cuts = _crossings(rank_map, q.cum_weights[:-1])
        lengths = np.diff(cuts, prepend=0.0, append=1.0)
        return float(np.dot(q.values, lengths))
    if method == "grid":
        grid_points = int(grid_points)
        if grid_points < 1:
            raise DomainError("grid_points must be positive")
        u = (np.arange(grid_points) + 0.5) / grid_points
        ranks = np.clip(_apply(rank_map, u), 0.0, 1.0)
        return float(np.mean(eval_quantile(q, ranks)))
    raise DomainError(f"unknown integration method {method!r}")
