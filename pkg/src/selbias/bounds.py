"""Nonparametric bounds on corrected ranks, latent quantiles and latent means.

Without restrictions on how selection relates to the latent rank, only the
Fréchet-Hoeffding interval is available for ``P(U <= u | S = 1)``. If the
selected population stochastically dominates the excluded one, the upper
end tightens to ``u`` itself, i.e. the observed quantile.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_output, check_coverage, check_ranks
from .exceptions import ContractError, DomainError
from .quantile import EmpiricalQuantile, eval_quantile, integrate_transformed, quantile_mean

__all__ = [
    "RankInterval",
    "ValueInterval",
    "lower_rank",
    "frechet_rank_bounds",
    "dominance_rank_bounds",
    "quantile_bounds",
    "mean_bounds",
]

MEAN_IDENTITY_RTOL = 1e-6


@dataclass(frozen=True)
class RankInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise DomainError(f"invalid rank interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, x):
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class ValueInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"invalid interval [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, x):
        return self.lower <= x <= self.upper


def lower_rank(p, u):
    """Smallest admissible corrected rank, ``max(u + p - 1, 0) / p``.

    Attained when only the top ``p`` share of latent ranks is selected.
    """
    p = check_coverage(p)
    u, scalar = check_ranks(u)
    if p == 1.0:
        return as_output(u.copy(), scalar)
    return as_output(np.clip(np.maximum(u + p - 1.0, 0.0) / p, 0.0, 1.0), scalar)


def frechet_rank_bounds(p, u) -> RankInterval:
    p = check_coverage(p)
    u, _ = check_ranks(u)
    u = float(u)
    upper = u if p == 1.0 else min(min(u, p) / p, 1.0)
    return RankInterval(lower_rank(p, u), upper)


def dominance_rank_bounds(p, u) -> RankInterval:
    """Rank interval under stochastic dominance of selected over excluded units."""
    p = check_coverage(p)
    u, _ = check_ranks(u)
    return RankInterval(lower_rank(p, float(u)), float(u))


def quantile_bounds(q: EmpiricalQuantile, p, u, kind="dominance") -> ValueInterval:
    """Bounds on the latent quantile at rank ``u``.

    ``kind`` selects the dominance interval (default) or the wider Fréchet one.

    Only ranks the observed sample can represent are reachable, so for
    ``u < 1 - p`` the lower end is the observed minimum. Under pure
    truncation on the latent rank the true quantile there lies below it;
    the bound is informative only when excluded scores are not lower than
    the lowest observed one.
    """
    if kind == "dominance":
        ranks = dominance_rank_bounds(p, u)
    elif kind == "frechet":
        ranks = frechet_rank_bounds(p, u)
    else:
        raise DomainError(f"unknown bound kind {kind!r}")
    return ValueInterval(eval_quantile(q, ranks.lower), eval_quantile(q, ranks.upper))


def mean_bounds(q: EmpiricalQuantile, p, method="exact_breakpoint", grid_points=10001) -> ValueInterval:
    """Bounds on the latent mean under stochastic dominance.

    The upper bound is the observed mean. The lower bound integrates the
    observed quantile function at the lowest admissible rank, and is checked
    against its closed form ``(1 - p) min + p mean``.
    """
    p = check_coverage(p)
    upper = quantile_mean(q)
    if p == 1.0:
        return ValueInterval(upper, upper)
    lower = integrate_transformed(q, lambda u: lower_rank(p, u), method=method, grid_points=grid_points)
    if method == "exact_breakpoint":
        expected = (1.0 - p) * q.min + p * upper
        scale = max(abs(expected), abs(q.max - q.min), 1e-300)
        if abs(lower - expected) > MEAN_IDENTITY_RTOL * scale:
            raise ContractError(f"mean lower bound {lower!r} disagrees with closed form {expected!r}")
    return ValueInterval(min(lower, upper), upper)
