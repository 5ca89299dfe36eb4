"""Monte Carlo laboratory for the latent-rank selection model.

Latent scores are ``Q(U)`` with ``U`` uniform; a mechanism decides which
units are observed. Three mechanisms are provided:

* ``beta_cost``   -- ``S = 1{U >= V}`` with ``V ~ Beta(a, b)``
* ``truncation``  -- ``S = 1{U >= 1 - p}``, the extreme case attaining the lower bound
* ``independent`` -- ``S ~ Bernoulli(p)`` independent of ``U``, attaining the upper bound

All randomness flows from ``numpy.random.SeedSequence`` so that a given
``(seed, replication)`` pair always produces the same draws, whatever the
order in which replications run.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtri

from ._validation import check_coverage, check_ranks
from .beta import BetaCost, calibrate_beta, corrected_rank
from .bounds import lower_rank
from .exceptions import DomainError, EstimationError
from .quantile import build_empirical_quantile, eval_quantile, integrate_transformed

__all__ = [
    "LatentSpec",
    "MechanismSpec",
    "SimulationRun",
    "SimulationResult",
    "RecoveryReport",
    "substream",
    "simulate_population",
    "mc_corrected_rank",
    "verify_recovery",
    "dominance_violation",
    "DEFAULT_GRID",
]

DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))
MECHANISMS = ("beta_cost", "truncation", "independent")
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class LatentSpec:
    """Latent quantile function ``Q(u)``.

    ``family`` is ``"normal"`` (params ``mu, sigma``), ``"uniform"``
    (params ``lo, hi``) or ``"piecewise"`` (params alternate rank/value
    knots, linear in between, ranks from 0 to 1).
    """

    family: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(x) for x in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "normal":
            if len(params) != 2 or not params[1] > 0:
                raise DomainError("normal latent needs mu and sigma > 0")
        elif self.family == "uniform":
            if len(params) != 2 or not params[1] > params[0]:
                raise DomainError("uniform latent needs lo < hi")
        elif self.family == "piecewise":
            ranks, values = self.knots
            if (len(params) < 4 or len(params) % 2 or ranks[0] != 0.0 or ranks[-1] != 1.0
                    or np.any(np.diff(ranks) <= 0) or np.any(np.diff(values) < 0)):
                raise DomainError("piecewise latent needs knots from rank 0 to 1 with non-decreasing values")
        else:
            raise DomainError(f"unknown latent family {self.family!r}")
        if not all(math.isfinite(x) for x in params):
            raise DomainError("latent parameters must be finite")

    @classmethod
    def normal(cls, mu, sigma):
        return cls("normal", (mu, sigma))

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (lo, hi))

    @classmethod
    def piecewise(cls, ranks, values):
        return cls("piecewise", tuple(x for pair in zip(ranks, values) for x in pair))

    @classmethod
    def parse(cls, text: str) -> "LatentSpec":
        """Parse ``normal:MU:SIGMA``, ``uniform:LO:HI`` or ``piecewise:U/Y,U/Y,...``."""
        family, _, rest = text.strip().partition(":")
        try:
            if family == "piecewise":
                pairs = [item.split("/") for item in rest.split(",")]
                if any(len(pair) != 2 for pair in pairs):
                    raise ValueError(text)
                return cls.piecewise([float(u) for u, _ in pairs], [float(y) for _, y in pairs])
            return cls(family, tuple(float(x) for x in rest.split(":")))
        except ValueError as exc:
            raise DomainError(f"cannot parse latent spec {text!r}") from exc

    @property
    def knots(self):
        return np.asarray(self.params[0::2]), np.asarray(self.params[1::2])

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "normal":
            mu, sigma = self.params
            return mu + sigma * ndtri(u)
        if self.family == "uniform":
            lo, hi = self.params
            return lo + (hi - lo) * u
        ranks, values = self.knots
        return np.interp(u, ranks, values)

    def quantile_slope(self, u):
        """Derivative of the quantile function (inverse density)."""
        u = np.asarray(u, dtype=float)
        if self.family == "normal":
            z = ndtri(u)
            return self.params[1] * math.sqrt(2.0 * math.pi) * np.exp(0.5 * z * z)
        if self.family == "uniform":
            return np.full_like(u, self.params[1] - self.params[0])
        ranks, values = self.knots
        slopes = np.diff(values) / np.diff(ranks)
        idx = np.clip(np.searchsorted(ranks, u, side="right") - 1, 0, slopes.size - 1)
        return slopes[idx]

    def mean(self) -> float:
        if self.family == "normal":
            return self.params[0]
        if self.family == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        ranks, values = self.knots
        return float(np.sum(np.diff(ranks) * 0.5 * (values[1:] + values[:-1])))

    def __str__(self):
        if self.family == "piecewise":
            ranks, values = self.knots
            return "piecewise:" + ",".join(f"{u:g}/{y:g}" for u, y in zip(ranks, values))
        return self.family + "".join(f":{x:g}" for x in self.params)


@dataclass(frozen=True)
class MechanismSpec:
    kind: str
    p: float
    beta: BetaCost | None = None

    def __post_init__(self):
        kind = {"beta": "beta_cost"}.get(self.kind, self.kind)
        if kind not in MECHANISMS:
            raise DomainError(f"mechanism must be one of {MECHANISMS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        p = check_coverage(self.p)
        object.__setattr__(self, "p", p)
        if kind == "beta_cost" and p < 1.0 and self.beta is None:
            object.__setattr__(self, "beta", calibrate_beta(p))

    def select(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Selection indicator for latent ranks ``u``."""
        if self.p == 1.0:
            return np.ones(u.shape, dtype=bool)
        if self.kind == "truncation":
            return u >= 1.0 - self.p
        if self.kind == "independent":
            return rng.random(u.shape) < self.p
        return u >= rng.beta(self.beta.a, self.beta.b, size=u.shape)

    def rank_map(self):
        """Map from latent rank to the rank among selected units, u -> P(U <= u | S = 1)."""
        if self.p == 1.0 or self.kind == "independent":
            return lambda u: np.asarray(u, dtype=float)
        if self.kind == "truncation":
            return lambda u: lower_rank(self.p, u)
        return lambda u: corrected_rank(self.p, self.beta, u)


@dataclass(frozen=True)
class SimulationRun:
    seed: int
    n: int
    latent: LatentSpec
    mechanism: MechanismSpec

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")


@dataclass(frozen=True, eq=False)
class SimulationResult:
    observed: np.ndarray
    excluded: np.ndarray
    realized_p: float
    truth: LatentSpec


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for replication ``index`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & _SEED_MASK, int(index)]))


def _draw(run: SimulationRun, rng):
    u = rng.random(run.n)
    u[u == 0.0] = np.finfo(float).tiny
    s = run.mechanism.select(u, rng)
    return u, s


def simulate_population(run: SimulationRun, replication: int = 0) -> SimulationResult:
    """Draw a population and return the scores of selected and excluded units."""
    u, s = _draw(run, substream(run.seed, replication))
    y = run.latent.quantile(u)
    return SimulationResult(observed=y[s], excluded=y[~s], realized_p=float(s.mean()), truth=run.latent)


class MCRank(NamedTuple):
    estimate: float
    selected: int
    stderr: float


def mc_corrected_rank(mechanism: MechanismSpec, u, n: int, seed: int,
                      replications: int = 1, max_workers: int | None = None) -> MCRank:
    """Monte Carlo estimate of ``P(U <= u | S = 1)``.

    Each replication draws ``n`` units from its own substream; counts are
    summed, so the result does not depend on execution order.
    """
    u, _ = check_ranks(u)
    u = float(u)
    if n < 1000:
        raise DomainError("n must be at least 1000")
    run = SimulationRun(seed=seed, n=n, latent=LatentSpec.uniform(0, 1), mechanism=mechanism)

    def count(rep):
        ranks, s = _draw(run, substream(seed, rep))
        return int(np.count_nonzero(s & (ranks <= u))), int(np.count_nonzero(s))

    if replications == 1 or max_workers == 1:
        counts = [count(r) for r in range(replications)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            counts = list(pool.map(count, range(replications)))
    hits = sum(c[0] for c in counts)
    selected = sum(c[1] for c in counts)
    if selected == 0:
        raise EstimationError("no units were selected")
    est = hits / selected
    return MCRank(est, selected, math.sqrt(est * (1.0 - est) / selected))


@dataclass
class RecoveryReport:
    latent: str
    mechanism: str
    correction: str
    p: float
    n: int
    seed: int
    realized_p: float
    n_selected: int
    grid: list
    true_quantiles: list
    corrected_quantiles: list
    errors: list
    tolerances: list
    identified: list
    max_abs_error: float
    true_mean: float
    corrected_mean: float | None
    mean_error: float | None
    mean_tolerance: float
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_text(self):
        lines = [
            f"latent={self.latent} mechanism={self.mechanism} correction={self.correction}",
            f"p={self.p!r} n={self.n} seed={self.seed} realized_p={self.realized_p!r} selected={self.n_selected}",
            "u,true,corrected,error,tolerance,identified",
        ]
        for row in zip(self.grid, self.true_quantiles, self.corrected_quantiles, self.errors,
                       self.tolerances, self.identified):
            u, t, c, e, tol, ident = row
            lines.append(f"{u!r},{t!r},{c!r},{e!r},{tol!r},{str(ident).lower()}")
        lines.append(f"max_abs_error={self.max_abs_error!r}")
        lines.append(f"true_mean={self.true_mean!r} corrected_mean={self.corrected_mean!r} "
                     f"mean_error={self.mean_error!r} mean_tolerance={self.mean_tolerance!r}")
        lines.extend(f"FAIL {msg}" for msg in self.failures)
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


_CORRECTIONS = {"beta_cost": "beta_point", "truncation": "lower_bound", "independent": "identity"}


def _correction_map(mechanism: MechanismSpec, correction: str):
    p = mechanism.p
    if correction == "identity" or p == 1.0:
        return lambda u: np.asarray(u, dtype=float)
    if correction == "lower_bound":
        return lambda u: lower_rank(p, u)
    if correction == "beta_point":
        dist = mechanism.beta if mechanism.kind == "beta_cost" else calibrate_beta(p)
        return lambda u: corrected_rank(p, dist, u)
    raise DomainError(f"unknown correction {correction!r}")


def verify_recovery(run: SimulationRun, grid: Sequence[float] = DEFAULT_GRID, correction: str | None = None,
                    sigmas: float = 3.0, mean_tolerance: float = 1.0) -> RecoveryReport:
    """Simulate, correct the observed scores, and compare with the known latent quantiles.

    Quantile tolerances are ``sigmas`` binomial standard errors of the
    empirical quantile at the corrected rank, propagated to the score scale,
    plus one order-statistic step. Ranks where the correction map is flat
    (e.g. below ``1 - p`` under truncation) are not identified by the data;
    they are reported but excluded from the verdict, as is the mean when any
    such rank exists.
    """
    correction = correction or _CORRECTIONS[run.mechanism.kind]
    grid = np.asarray(check_ranks(grid, "grid")[0], dtype=float).ravel()
    result = simulate_population(run)
    n_sel = result.observed.size
    report_base = dict(
        latent=str(run.latent), mechanism=run.mechanism.kind, correction=correction, p=run.mechanism.p,
        n=int(run.n), seed=int(run.seed), realized_p=result.realized_p, n_selected=int(n_sel),
        grid=grid.tolist(), true_mean=run.latent.mean(), mean_tolerance=float(mean_tolerance),
    )
    if n_sel == 0:
        raise EstimationError("no units were selected")

    q = build_empirical_quantile(result.observed)
    rank_map = _correction_map(run.mechanism, correction)
    ranks = np.asarray(rank_map(grid), dtype=float)
    estimates = np.asarray(eval_quantile(q, ranks), dtype=float)
    truth = run.latent.quantile(grid)
    errors = estimates - truth

    h = 1e-6
    lo = np.clip(grid - h, 0.0, 1.0)
    hi = np.clip(grid + h, 0.0, 1.0)
    map_slope = (np.asarray(rank_map(hi)) - np.asarray(rank_map(lo))) / (hi - lo)
    identified = map_slope > 0
    inner = np.clip(grid, 1e-12, 1 - 1e-12)
    with np.errstate(divide="ignore"):
        score_slope = run.latent.quantile_slope(inner) / map_slope
        var = np.maximum(ranks * (1.0 - ranks), 1.0 / n_sel) / n_sel
        tolerances = sigmas * score_slope * np.sqrt(var) + score_slope / n_sel
    tolerances = np.where(identified, tolerances, np.inf)

    failures = []
    for u, err, tol, ok in zip(grid, errors, tolerances, identified):
        if ok and not abs(err) <= tol:
            failures.append(f"quantile at u={u!r}: error {err!r} exceeds {tol!r}")
    checked = np.abs(errors[identified])
    max_err = float(checked.max()) if checked.size else 0.0

    corrected_mean = mean_error = None
    probe = np.asarray(rank_map(np.linspace(0.0, 1.0, 1001)), dtype=float)
    if bool(np.all(np.diff(probe) > 0)):
        corrected_mean = integrate_transformed(q, rank_map)
        mean_error = corrected_mean - run.latent.mean()
        if not abs(mean_error) <= mean_tolerance:
            failures.append(f"mean: error {mean_error!r} exceeds {mean_tolerance!r}")

    return RecoveryReport(
        **report_base,
        true_quantiles=truth.tolist(),
        corrected_quantiles=estimates.tolist(),
        errors=errors.tolist(),
        tolerances=[float(t) for t in tolerances],
        identified=[bool(x) for x in identified],
        max_abs_error=max_err,
        corrected_mean=corrected_mean,
        mean_error=mean_error,
        passed=not failures,
        failures=failures,
    )


def dominance_violation(result: SimulationResult, points) -> float:
    """Largest amount by which the selected-score CDF exceeds the excluded-score CDF.

    Zero or negative values mean selected units first-order dominate
    excluded ones at every point.
    """
    if result.excluded.size == 0 or result.observed.size == 0:
        return 0.0
    points = np.asarray(points, dtype=float)
    sel = np.searchsorted(np.sort(result.observed), points, side="right") / result.observed.size
    exc = np.searchsorted(np.sort(result.excluded), points, side="right") / result.excluded.size
    return float(np.max(sel - exc))
