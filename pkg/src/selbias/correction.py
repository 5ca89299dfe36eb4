"""Point-identified correction of quantiles and means under Beta selection costs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._validation import as_output, check_coverage, check_positive, check_ranks
from .beta import BetaCost, CoverageRate, calibrate_beta, corrected_rank
from .bounds import mean_bounds
from .exceptions import DomainError, SelectionError
from .quantile import (
    EmpiricalQuantile,
    ScoreSample,
    build_empirical_quantile,
    eval_quantile,
    integrate_transformed,
    quantile_mean,
)

__all__ = [
    "CorrectionOptions",
    "CountryRecord",
    "CountrySummary",
    "rank_map_for",
    "correct_quantile",
    "correct_mean",
    "correct_country",
    "correct_countries",
    "LOW_COVERAGE",
    "FULL_COVERAGE",
]

LOW_COVERAGE = "low_coverage"
FULL_COVERAGE = "full_coverage"

MODES = ("beta_point", "identity")
INTEGRATIONS = ("exact_breakpoint", "grid")


@dataclass(frozen=True)
class CorrectionOptions:
    mode: str = "beta_point"
    c_override: float | None = None
    integration: str = "exact_breakpoint"
    grid_points: int = 10001

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.integration not in INTEGRATIONS:
            raise DomainError(f"integration must be one of {INTEGRATIONS}, got {self.integration!r}")
        if self.c_override is not None:
            check_positive(self.c_override, "c_override")
        if int(self.grid_points) != self.grid_points or self.grid_points < 3 or self.grid_points % 2 == 0:
            raise DomainError("grid_points must be an odd integer >= 3")


@dataclass(frozen=True)
class CountryRecord:
    """Observed scores of one country, keyed by subject, plus its coverage rate."""

    country: str
    samples: Mapping[str, Sequence[ScoreSample]]
    coverage: CoverageRate

    def __post_init__(self):
        if not isinstance(self.coverage, CoverageRate):
            object.__setattr__(self, "coverage", CoverageRate(self.coverage))
        if not self.samples or any(len(s) == 0 for s in self.samples.values()):
            raise DomainError(f"{self.country}: every subject needs at least one score")


@dataclass(frozen=True)
class CountrySummary:
    country: str
    subject: str
    p: float
    observed_mean: float = float("nan")
    corrected_mean: float = float("nan")
    mean_lower: float = float("nan")
    mean_upper: float = float("nan")
    warnings: tuple = field(default_factory=tuple)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def rank_map_for(p, opts: CorrectionOptions | None = None):
    """The vectorized map ``u -> corrected rank`` used for a coverage rate.

    Full coverage and ``mode="identity"`` give the identity map.
    """
    opts = opts or CorrectionOptions()
    p = check_coverage(p)
    if p == 1.0 or opts.mode == "identity":
        return lambda u: np.asarray(u, dtype=float)
    dist: BetaCost = calibrate_beta(p, opts.c_override)
    return lambda u: corrected_rank(p, dist, u)


def correct_quantile(q: EmpiricalQuantile, p, u, opts: CorrectionOptions | None = None):
    """Latent quantile(s) at rank(s) ``u``: the observed quantile read at the corrected rank."""
    u, scalar = check_ranks(u)
    ranks = np.asarray(rank_map_for(p, opts)(u))
    return as_output(np.asarray(eval_quantile(q, ranks)), scalar)


def correct_mean(q: EmpiricalQuantile, p, opts: CorrectionOptions | None = None) -> float:
    """Latent mean, the integral of the corrected quantile function."""
    opts = opts or CorrectionOptions()
    p = check_coverage(p)
    if p == 1.0 or opts.mode == "identity":
        return quantile_mean(q)
    return integrate_transformed(q, rank_map_for(p, opts), method=opts.integration,
                                 grid_points=opts.grid_points)


def coverage_warnings(p) -> tuple:
    p = check_coverage(p)
    if p == 1.0:
        return (FULL_COVERAGE,)
    if p <= 0.5:
        return (LOW_COVERAGE,)
    return ()


def _summarize(country, subject, samples, p, opts):
    flags = coverage_warnings(p)
    try:
        q = build_empirical_quantile(samples)
        observed = quantile_mean(q)
        corrected = correct_mean(q, p, opts)
        bounds = mean_bounds(q, p, method=opts.integration, grid_points=opts.grid_points)
    except SelectionError as exc:
        return CountrySummary(country, subject, p, warnings=flags, error=str(exc))
    # both sides are exact step integrals; absorb rounding-level excursions only
    slack = 1e-9 * max(abs(observed), 1.0)
    if bounds.lower - slack <= corrected < bounds.lower:
        corrected = bounds.lower
    elif bounds.upper < corrected <= bounds.upper + slack:
        corrected = bounds.upper
    return CountrySummary(
        country=country,
        subject=subject,
        p=p,
        observed_mean=observed,
        corrected_mean=corrected,
        mean_lower=bounds.lower,
        mean_upper=bounds.upper,
        warnings=flags,
    )


def correct_country(rec: CountryRecord, opts: CorrectionOptions | None = None) -> list[CountrySummary]:
    """One summary per subject, sorted by subject name.

    A subject that fails to compute yields a summary with ``error`` set
    instead of raising.
    """
    opts = opts or CorrectionOptions()
    p = rec.coverage.p
    return [_summarize(rec.country, subject, rec.samples[subject], p, opts)
            for subject in sorted(rec.samples)]


def correct_countries(records: Sequence[CountryRecord], opts: CorrectionOptions | None = None,
                      max_workers: int | None = None) -> list[CountrySummary]:
    """Correct many countries, possibly in parallel; output ordered by country then subject."""
    opts = opts or CorrectionOptions()
    names = [r.country for r in records]
    if len(set(names)) != len(names):
        raise DomainError("duplicate country identifiers")
    ordered = sorted(records, key=lambda r: r.country)
    if max_workers == 1 or len(ordered) < 2:
        results = [correct_country(r, opts) for r in ordered]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda r: correct_country(r, opts), ordered))
    return [s for group in results for s in group]
