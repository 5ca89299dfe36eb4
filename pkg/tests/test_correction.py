import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selbias.beta import CoverageRate, calibrate_beta, corrected_rank_closed_form
from selbias.bounds import mean_bounds, quantile_bounds
from selbias.correction import (
    FULL_COVERAGE,
    LOW_COVERAGE,
    CorrectionOptions,
    CountryRecord,
    correct_countries,
    correct_country,
    correct_mean,
    correct_quantile,
)
from selbias.exceptions import DomainError
from selbias.quantile import build_empirical_quantile, eval_quantile, quantile_mean

from conftest import random_quantile

# latent mean of the two-point toy at p = 0.8, from scipy brentq on the quad-evaluated rank map
TOY_CORRECTED_MEAN = 14.021023899292175


class TestOptions:
    @pytest.mark.parametrize("kwargs", [
        {"mode": "other"},
        {"integration": "simpson"},
        {"grid_points": 4},
        {"grid_points": 1},
        {"c_override": -1.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            CorrectionOptions(**kwargs)


class TestCorrectQuantile:
    def test_full_coverage_is_identity(self, three_point):
        u = np.linspace(0, 1, 21)
        np.testing.assert_array_equal(correct_quantile(three_point, 1.0, u), eval_quantile(three_point, u))

    def test_identity_mode(self, three_point):
        opts = CorrectionOptions(mode="identity")
        assert correct_quantile(three_point, 0.6, 0.3, opts) == eval_quantile(three_point, 0.3)

    def test_toy(self, two_point):
        assert corrected_rank_closed_form(0.8, 0.6) == pytest.approx(0.50256, abs=1e-12)
        assert correct_quantile(two_point, 0.8, 0.6) == 20
        assert correct_quantile(two_point, 0.8, 0.59) == 10
        assert correct_quantile(two_point, 0.8, 1.0) == 20

    def test_c_override_changes_map(self, two_point):
        default = correct_quantile(two_point, 0.8, 0.59)
        wide = correct_quantile(two_point, 0.8, 0.59, CorrectionOptions(c_override=0.5))
        assert default == 10 and wide == 20

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.3, 0.99))
    def test_inside_bounds_and_monotone(self, seed, p):
        q = random_quantile(np.random.default_rng(seed))
        u = np.linspace(0, 1, 101)
        y = correct_quantile(q, p, u)
        assert np.all(np.diff(y) >= 0)
        for ui, yi in zip(u, y):
            assert yi in quantile_bounds(q, p, ui)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.3, 0.98), st.floats(0.0, 0.02))
    def test_non_decreasing_in_p(self, seed, p, dp):
        q = random_quantile(np.random.default_rng(seed))
        u = np.linspace(0, 1, 51)
        assert np.all(correct_quantile(q, p, u) <= correct_quantile(q, p + dp, u))


class TestCorrectMean:
    def test_full_coverage(self, three_point):
        assert correct_mean(three_point, 1.0) == quantile_mean(three_point)

    def test_toy_frozen(self, two_point):
        m = correct_mean(two_point, 0.8)
        assert 14.0 <= m <= 15.0
        assert m == pytest.approx(TOY_CORRECTED_MEAN, abs=1e-10)

    def test_toy_monte_carlo(self):
        # latent Y* = 10 below rank t, 20 above; t is pinned by requiring half the
        # selected units to score 10, i.e. t is the median selected rank
        rng = np.random.default_rng(99)
        n = 10**6
        U = rng.random(n)
        S = U >= rng.beta(1, 4, n)
        t = np.median(U[S])
        mc_mean = 10 * t + 20 * (1 - t)
        assert mc_mean == pytest.approx(TOY_CORRECTED_MEAN, abs=0.01)

    def test_grid_agrees(self, two_point, rng):
        for q in [two_point] + [random_quantile(rng, 200) for _ in range(10)]:
            exact = correct_mean(q, 0.75)
            grid = correct_mean(q, 0.75, CorrectionOptions(integration="grid"))
            assert grid == pytest.approx(exact, rel=1e-4)

    def test_normal_sample(self):
        rng = np.random.default_rng(5)
        U = rng.random(200000)
        from scipy.special import ndtri
        S = U >= rng.beta(1, 4, U.size)
        q = build_empirical_quantile(500 + 100 * ndtri(U[S]))
        assert abs(correct_mean(q, 0.8) - 500) < 1.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.3, 0.999))
    def test_between_bounds(self, seed, p):
        q = random_quantile(np.random.default_rng(seed))
        m = correct_mean(q, p)
        iv = mean_bounds(q, p)
        assert iv.lower - 1e-9 <= m <= iv.upper + 1e-9


class TestCountry:
    def test_full_coverage_country(self):
        rec = CountryRecord("A", {"maths": [(400, 1), (500, 2), (600, 1)]}, CoverageRate(1.0))
        (s,) = correct_country(rec)
        assert s.corrected_mean == s.observed_mean == s.mean_lower == s.mean_upper == 500
        assert s.warnings == (FULL_COVERAGE,)

    def test_toy_country(self):
        rec = CountryRecord("T", {"maths": [(10, 1), (20, 1)], "reading": [(10, 1), (20, 1)]}, 0.8)
        out = correct_country(rec)
        assert [s.subject for s in out] == ["maths", "reading"]
        for s in out:
            assert (s.mean_lower, s.mean_upper) == pytest.approx((14.0, 15.0))
            assert s.corrected_mean == pytest.approx(TOY_CORRECTED_MEAN, abs=1e-10)
            assert s.warnings == () and s.ok

    def test_low_coverage_flag(self):
        rec = CountryRecord("Z", {"maths": [(300, 1), (450, 1)]}, 0.463)
        (s,) = correct_country(rec)
        assert s.warnings == (LOW_COVERAGE,)
        assert s.corrected_mean < s.observed_mean

    def test_china_direction(self):
        # a sample whose mean matches the printed observed value; only the direction is checked
        rng = np.random.default_rng(1)
        scores = rng.normal(590.76, 90, 5000)
        scores += 590.76 - scores.mean()
        rec = CountryRecord("China", {"maths": scores}, 0.812)
        (s,) = correct_country(rec)
        assert s.observed_mean == pytest.approx(590.76, abs=1e-9)
        assert s.corrected_mean < s.observed_mean

    def test_failing_subject_is_isolated(self):
        rec = CountryRecord("B", {"maths": [(1, 1)], "reading": [(float("nan"), 1)]}, 0.9)
        good, bad = correct_country(rec)
        assert good.ok and not bad.ok
        assert "non-finite" in bad.error

    def test_record_validation(self):
        with pytest.raises(DomainError):
            CountryRecord("X", {}, 0.9)
        with pytest.raises(DomainError):
            CountryRecord("X", {"m": [(1, 1)]}, 1.5)

    def test_many_countries_ordered_and_deterministic(self):
        rng = np.random.default_rng(3)
        recs = [CountryRecord(f"C{i:02d}", {"maths": rng.normal(480, 90, 300)}, float(rng.uniform(0.5, 1)))
                for i in range(12)]
        serial = correct_countries(recs[::-1], max_workers=1)
        parallel = correct_countries(recs, max_workers=4)
        assert [s.country for s in serial] == sorted(r.country for r in recs)
        assert serial == parallel
        for s in serial:
            assert s.mean_lower <= s.corrected_mean <= s.mean_upper == s.observed_mean

    def test_duplicate_countries(self):
        rec = CountryRecord("A", {"m": [(1, 1)]}, 0.9)
        with pytest.raises(DomainError):
            correct_countries([rec, rec])
