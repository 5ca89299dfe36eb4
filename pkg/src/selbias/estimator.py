"""scikit-learn style front end for selection-corrected quantiles."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .beta import CoverageRate, calibrate_beta
from .bounds import mean_bounds, quantile_bounds
from .correction import CorrectionOptions, correct_mean, coverage_warnings, rank_map_for
from .quantile import build_empirical_quantile, eval_quantile, quantile_mean


def _scores(X):
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of scores, got shape {X.shape}")
        X = X[:, 0]
    return X


class SelectionCorrectedQuantiles(BaseEstimator):
    """Latent score distribution of a population observed only through a selected share.

    Parameters
    ----------
    coverage : float
        Share ``p`` of the target population that was assessed, ``0 < p <= 1``.
    c : float, optional
        Concentration of the Beta cost distribution; ``None`` uses ``1 / (1 - p)``.
    mode : {"beta_point", "identity"}
    integration : {"exact_breakpoint", "grid"}
    grid_points : int
        Nodes for ``integration="grid"``.
    bound_kind : {"dominance", "frechet"}
        Interval returned by :meth:`quantile_bounds`.

    Attributes
    ----------
    quantile_ : EmpiricalQuantile
        Observed-score quantile function.
    beta_ : BetaCost or None
        Calibrated cost distribution (``None`` at full coverage).
    observed_mean_, corrected_mean_ : float
    mean_bounds_ : ValueInterval
    warnings_ : tuple of str

    Examples
    --------
    >>> est = SelectionCorrectedQuantiles(coverage=0.8).fit([10.0, 20.0])
    >>> est.mean_bounds_
    ValueInterval(lower=14.0, upper=15.0)
    """

    def __init__(self, coverage=1.0, c=None, mode="beta_point", integration="exact_breakpoint",
                 grid_points=10001, bound_kind="dominance"):
        self.coverage = coverage
        self.c = c
        self.mode = mode
        self.integration = integration
        self.grid_points = grid_points
        self.bound_kind = bound_kind

    def fit(self, X, y=None, sample_weight=None):
        scores = _scores(X)
        self.coverage_ = CoverageRate(self.coverage)
        self.options_ = CorrectionOptions(mode=self.mode, c_override=self.c, integration=self.integration,
                                          grid_points=self.grid_points)
        p = self.coverage_.p
        self.quantile_ = build_empirical_quantile(scores, sample_weight)
        self.beta_ = None if p == 1.0 else calibrate_beta(p, self.c)
        self.observed_mean_ = quantile_mean(self.quantile_)
        self.corrected_mean_ = correct_mean(self.quantile_, p, self.options_)
        self.mean_bounds_ = mean_bounds(self.quantile_, p, method=self.integration, grid_points=self.grid_points)
        self.warnings_ = coverage_warnings(p)
        self.n_features_in_ = 1
        return self

    def corrected_rank(self, U):
        check_is_fitted(self, "quantile_")
        return rank_map_for(self.coverage_.p, self.options_)(np.asarray(U, dtype=float))

    def predict(self, U):
        """Corrected (latent) quantiles at ranks ``U``."""
        check_is_fitted(self, "quantile_")
        U = np.asarray(U, dtype=float)
        return np.asarray(eval_quantile(self.quantile_, self.corrected_rank(U)), dtype=float)

    def quantile_bounds(self, U):
        """Lower and upper bound arrays for the latent quantiles at ranks ``U``."""
        check_is_fitted(self, "quantile_")
        U = np.atleast_1d(np.asarray(U, dtype=float))
        pairs = [quantile_bounds(self.quantile_, self.coverage_.p, u, kind=self.bound_kind) for u in U.ravel()]
        lower = np.array([b.lower for b in pairs]).reshape(U.shape)
        upper = np.array([b.upper for b in pairs]).reshape(U.shape)
        return lower, upper
