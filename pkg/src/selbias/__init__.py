"""Selection-bias correction for standardized test score distributions.

Observed scores come only from the assessed share ``p`` of a population.
This package bounds and point-corrects the latent quantiles and mean of the
full population, and re-ranks countries accordingly.
"""
from .beta import (
    BetaCost,
    CoverageRate,
    beta_cdf,
    beta_partial_expectation,
    calibrate_beta,
    corrected_rank,
    corrected_rank_closed_form,
    regularized_incomplete_beta,
)
from .bounds import (
    RankInterval,
    ValueInterval,
    dominance_rank_bounds,
    frechet_rank_bounds,
    lower_rank,
    mean_bounds,
    quantile_bounds,
)
from .correction import (
    CorrectionOptions,
    CountryRecord,
    CountrySummary,
    correct_countries,
    correct_country,
    correct_mean,
    correct_quantile,
)
from .estimator import SelectionCorrectedQuantiles
from .exceptions import (
    CalibrationMismatchError,
    ContractError,
    DomainError,
    EstimationError,
    IngestionError,
    SelectionError,
)
from .quantile import (
    EmpiricalQuantile,
    ScoreSample,
    build_empirical_quantile,
    eval_quantile,
    integrate_transformed,
    quantile_mean,
)
from .ranking import RankShiftEntry, rank_by, rank_shift_table

__version__ = "0.1.0"
