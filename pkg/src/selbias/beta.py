"""Beta cost distribution and the selection-corrected rank map.

Selection follows the threshold-crossing rule ``S = 1{U >= V}`` with a
uniform latent rank ``U`` and a cost ``V ~ Beta(a, b)`` independent of it.
Matching ``P(S = 1) = p`` pins the mean cost to ``1 - p``, which leaves a
single free concentration ``c = a + b``. The default choice ``c = 1/(1-p)``
gives ``a = 1`` and a density that is maximal at zero and decreasing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_output, check_coverage, check_positive, check_ranks
from .exceptions import CalibrationMismatchError

__all__ = [
    "CoverageRate",
    "BetaCost",
    "calibrate_beta",
    "regularized_incomplete_beta",
    "beta_cdf",
    "beta_partial_expectation",
    "corrected_rank",
    "corrected_rank_closed_form",
]

CALIBRATION_TOL = 1e-9

_CF_MAXIT = 1000
_CF_EPS = 1e-16
_CF_TINY = 1e-300


@dataclass(frozen=True)
class CoverageRate:
    """Share ``p = P(S = 1)`` of the target population that is assessed."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", check_coverage(self.p))

    @property
    def condition_ok(self) -> bool:
        """True when ``p > 0.5``, i.e. the default calibration has ``b > 1``."""
        return self.p > 0.5

    def __float__(self):
        return self.p


@dataclass(frozen=True)
class BetaCost:
    """Beta(a, b) distribution of the schooling cost ``V``.

    ``low_coverage`` marks calibrations from ``p <= 0.5``; those are still
    well defined but violate the mode-at-zero condition ``b > 1``.
    """

    a: float
    b: float
    low_coverage: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", check_positive(self.a, "a"))
        object.__setattr__(self, "b", check_positive(self.b, "b"))

    @property
    def c(self) -> float:
        return self.a + self.b

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def cdf(self, u):
        return beta_cdf(self, u)

    def partial_expectation(self, u):
        return beta_partial_expectation(self, u)

    def sample(self, size, rng=None):
        """Draw ``size`` costs using a numpy ``Generator`` (or seed)."""
        rng = np.random.default_rng(rng)
        return rng.beta(self.a, self.b, size=size)


def calibrate_beta(p, c_override=None) -> BetaCost:
    """Beta cost parameters implied by the coverage rate ``p``.

    Parameters
    ----------
    p : float or CoverageRate
        Coverage rate, strictly between 0 and 1.
    c_override : float, optional
        Concentration ``a + b``. Defaults to ``1 / (1 - p)``, which sets
        ``a = 1`` and ``b = p / (1 - p)``.

    Returns
    -------
    BetaCost
        With ``a = (1 - p) c`` and ``b = p c``, so that ``E[V] = 1 - p``.
    """
    p = check_coverage(p, allow_one=False)
    if c_override is None:
        a, b = 1.0, p / (1.0 - p)
    else:
        c = check_positive(c_override, "c_override")
        a, b = (1.0 - p) * c, p * c
    return BetaCost(a=a, b=b, low_coverage=p <= 0.5)


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _CF_TINY, _CF_TINY, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) <= _CF_EPS * 4):
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def regularized_incomplete_beta(a, b, x):
    """Regularized incomplete beta function ``I_x(a, b)``.

    Evaluated by continued fraction, switching to ``1 - I_{1-x}(b, a)``
    when ``x > (a + 1) / (a + b + 2)`` so the fraction converges quickly.
    Works elementwise on arrays of ``x``; ``a`` and ``b`` are scalars.
    """
    a = check_positive(a, "a")
    b = check_positive(b, "b")
    x, scalar = check_ranks(x, "x")
    x = np.atleast_1d(x)
    out = np.empty_like(x)

    interior = (x > 0.0) & (x < 1.0)
    out[x <= 0.0] = 0.0
    out[x >= 1.0] = 1.0
    if np.any(interior):
        xi = x[interior]
        log_front = a * np.log(xi) + b * np.log1p(-xi) - _log_beta(a, b)
        front = np.exp(log_front)
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if np.any(direct):
            res[direct] = front[direct] * _betacf(a, b, xi[direct]) / a
        flip = ~direct
        if np.any(flip):
            res[flip] = 1.0 - front[flip] * _betacf(b, a, 1.0 - xi[flip]) / b
        out[interior] = np.clip(res, 0.0, 1.0)
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(x))


def beta_cdf(dist: BetaCost, u):
    """CDF of the cost distribution at rank(s) ``u``."""
    u, scalar = check_ranks(u)
    return as_output(np.asarray(regularized_incomplete_beta(dist.a, dist.b, u)), scalar)


def beta_partial_expectation(dist: BetaCost, u):
    """``E[V 1{V <= u}]``, i.e. the integral of ``v dF(v)`` over ``[0, u]``.

    Uses ``v f_{a,b}(v) = a/(a+b) f_{a+1,b}(v)``.
    """
    u, scalar = check_ranks(u)
    out = dist.mean * np.asarray(regularized_incomplete_beta(dist.a + 1.0, dist.b, u))
    return as_output(out, scalar)


def corrected_rank(p, dist: BetaCost, u):
    """Selection-corrected rank ``P(U <= u | S = 1)`` under Beta costs.

    ``(u F(u) - E[V 1{V <= u}]) / p``. The cost distribution must satisfy
    ``E[V] = 1 - p``; otherwise ``P(S = 1)`` would not equal ``p``.
    """
    p = check_coverage(p, allow_one=False)
    if abs(dist.mean - (1.0 - p)) > CALIBRATION_TOL:
        raise CalibrationMismatchError(
            f"E[V] = {dist.mean!r} but 1 - p = {1.0 - p!r}; calibrate with calibrate_beta(p)"
        )
    u, scalar = check_ranks(u)
    num = u * np.asarray(beta_cdf(dist, u)) - np.asarray(beta_partial_expectation(dist, u))
    out = np.clip(num / p, 0.0, 1.0)
    return as_output(out, scalar)


def corrected_rank_closed_form(p, u):
    """Corrected rank for the default ``a = 1`` calibration, in closed form.

    ``(u - (1 - p) (1 - (1 - u)^{1/(1-p)})) / p``
    """
    p = check_coverage(p, allow_one=False)
    u, scalar = check_ranks(u)
    with np.errstate(divide="ignore"):
        tail = -np.expm1(np.log1p(-u) / (1.0 - p))
    out = np.clip((u - (1.0 - p) * tail) / p, 0.0, 1.0)
    return as_output(out, scalar)

