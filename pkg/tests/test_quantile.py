import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selbias.exceptions import ContractError, DomainError, IngestionError
from selbias.quantile import (
    EmpiricalQuantile,
    ScoreSample,
    build_empirical_quantile,
    eval_quantile,
    integrate_transformed,
    quantile_mean,
)

from conftest import random_quantile


class TestBuild:
    def test_two_points(self, two_point):
        np.testing.assert_array_equal(two_point.values, [10, 20])
        np.testing.assert_array_equal(two_point.cum_weights, [0.5, 1.0])
        assert two_point.n == 2

    def test_duplicates_merge(self):
        q = build_empirical_quantile([ScoreSample(10, 1), ScoreSample(10, 3)])
        np.testing.assert_array_equal(q.values, [10])
        np.testing.assert_array_equal(q.cum_weights, [1.0])

    def test_weights_normalized(self, three_point):
        np.testing.assert_array_equal(three_point.values, [5, 15, 25])
        np.testing.assert_allclose(three_point.cum_weights, [0.25, 0.5, 1.0], atol=1e-15)

    def test_plain_scores_and_weights(self):
        q = build_empirical_quantile([25, 5, 15], weights=[2, 1, 1])
        np.testing.assert_allclose(q.cum_weights, [0.25, 0.5, 1.0])
        assert q.cum_weights[-1] == 1.0

    def test_immutable(self, two_point):
        with pytest.raises(ValueError):
            two_point.values[0] = 0.0

    @pytest.mark.parametrize("samples", [
        [],
        [(float("nan"), 1)],
        [(1.0, 0.0)],
        [(1.0, -2.0)],
        [(float("inf"), 1)],
        [(1.0, float("inf"))],
    ])
    def test_rejects(self, samples):
        with pytest.raises(IngestionError):
            build_empirical_quantile(samples)

    def test_direct_construction_validates(self):
        with pytest.raises(IngestionError):
            EmpiricalQuantile([1, 2], [0.5, 0.9])
        with pytest.raises(IngestionError):
            EmpiricalQuantile([2, 1], [0.5, 1.0])


class TestEval:
    def test_generalized_inverse(self, two_point):
        assert eval_quantile(two_point, 0.5) == 10
        assert eval_quantile(two_point, 0.51) == 20
        assert eval_quantile(two_point, 0.0) == 10
        assert eval_quantile(two_point, 1.0) == 20

    def test_vector(self, three_point):
        out = eval_quantile(three_point, [0, 0.25, 0.2500001, 0.5, 0.75, 1])
        np.testing.assert_array_equal(out, [5, 5, 15, 15, 25, 25])

    @pytest.mark.parametrize("u", [-1e-9, 1.5, float("nan")])
    def test_domain(self, two_point, u):
        with pytest.raises(DomainError):
            eval_quantile(two_point, u)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30))
    def test_monotone_and_range(self, scores):
        q = build_empirical_quantile(scores)
        u = np.linspace(0, 1, 257)
        y = eval_quantile(q, u)
        assert np.all(np.diff(y) >= 0)
        assert y[0] == min(scores) and y[-1] == max(scores)


class TestMean:
    def test_values(self, two_point, three_point):
        assert quantile_mean(two_point) == 15
        assert quantile_mean(three_point) == pytest.approx(17.5, abs=1e-12)
        assert quantile_mean(build_empirical_quantile([42])) == 42


class TestIntegrate:
    def test_identity_is_mean(self, three_point):
        assert integrate_transformed(three_point, lambda u: u) == pytest.approx(17.5, rel=1e-12)

    def test_lower_bound_map(self, two_point):
        p = 0.8
        val = integrate_transformed(two_point, lambda u: np.maximum(u + p - 1, 0) / p)
        assert val == pytest.approx(14.0, rel=1e-12)

    def test_lower_bound_map_fine_grid_oracle(self, two_point):
        # independent oracle: dense Riemann sum of the composed step function
        p = 0.8
        u = (np.arange(2_000_000) + 0.5) / 2_000_000
        oracle = np.where(np.maximum(u + p - 1, 0) / p <= 0.5, 10.0, 20.0).mean()
        assert oracle == pytest.approx(14.0, abs=1e-5)

    def test_constant_zero(self, three_point):
        assert integrate_transformed(three_point, lambda u: np.zeros_like(u)) == 5.0

    def test_scalar_only_callable(self, two_point):
        def scalar_map(u):
            if isinstance(u, np.ndarray):
                raise TypeError("scalars only")
            return u

        assert integrate_transformed(two_point, scalar_map) == pytest.approx(15.0, rel=1e-12)

    def test_non_monotone_rejected(self, two_point):
        with pytest.raises(ContractError):
            integrate_transformed(two_point, lambda u: 1 - u)

    def test_out_of_range_rejected(self, two_point):
        with pytest.raises(ContractError):
            integrate_transformed(two_point, lambda u: 2 * u)

    def test_unknown_method(self, two_point):
        with pytest.raises(DomainError):
            integrate_transformed(two_point, lambda u: u, method="simpson")

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 4.0))
    def test_breakpoint_vs_grid(self, seed, power):
        rng = np.random.default_rng(seed)
        q = random_quantile(rng)
        exact = integrate_transformed(q, lambda u: np.asarray(u) ** power)
        grid = integrate_transformed(q, lambda u: np.asarray(u) ** power, method="grid")
        assert grid == pytest.approx(exact, rel=1e-4)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1.0, 3.0), st.floats(0.0, 1.0))
    def test_ordered_maps_ordered_integrals(self, seed, power, shrink):
        rng = np.random.default_rng(seed)
        q = random_quantile(rng)
        lo = integrate_transformed(q, lambda u: shrink * np.asarray(u) ** power)
        hi = integrate_transformed(q, lambda u: np.asarray(u))
        assert lo <= hi + 1e-9
