from functools import lru_cache
from math import comb

import numpy as np
import pytest
from scipy import stats

from src.core.config import settings
from src.core.enums import IntervalFlag, IntervalMethod
from src.core.exceptions import DomainErrorException
from src.services.stat_kernels import (
    midp_interval,
    numerical_gradient,
    prob_positive,
    resolve_alpha,
    truncated_moments,
    wald_logit_interval,
    z_quantile,
)


@lru_cache(maxsize=None)
def _midp(x: int, n: int):
    interval = midp_interval(x, n, 0.05)
    return interval.lower, interval.upper


def _exact_coverage(p: float, n: int) -> float:
    pmf = stats.binom.pmf(np.arange(n + 1), n, p)
    return float(sum(pmf[x] for x in range(n + 1) if _midp(x, n)[0] <= p <= _midp(x, n)[1]))


class TestResolveAlpha:
    """Explicit alpha values win over the defaults and are range-checked."""

    def test_default_from_settings(self, monkeypatch):
        monkeypatch.setattr(settings, "DEFAULT_ALPHA", 0.1)
        assert resolve_alpha(None) == 0.1
        assert resolve_alpha(None, 0.2) == 0.2
        assert resolve_alpha(0.01, 0.2) == 0.01

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.05, 1.5])
    def test_out_of_range(self, alpha):
        with pytest.raises(DomainErrorException):
            resolve_alpha(alpha)


class TestProbPositive:
    """P(n > 0) for binomial counts."""

    def test_two_trials(self):
        assert prob_positive(2, 0.5) == pytest.approx(0.75)

    def test_zero_probability(self):
        assert prob_positive(654, 0.0) == 0.0

    def test_liu_row_is_near_one(self):
        value = prob_positive(654, 36 / 654)
        assert 1 - 1e-15 < value <= 1.0

    def test_rejects_bad_input(self):
        with pytest.raises(DomainErrorException):
            prob_positive(0, 0.5)
        with pytest.raises(DomainErrorException):
            prob_positive(10, 1.5)


class TestTruncatedMoments:
    """Moments of a binomial count conditioned on being positive."""

    def test_two_trials(self):
        moments = truncated_moments(2, 0.5)
        assert moments.mean_inverse_given_positive == pytest.approx((1 * 0.5 + 0.5 * 0.25) / 0.75)
        assert moments.mean_given_positive == pytest.approx(1.0 / 0.75)

    @pytest.mark.parametrize("p", [0.01, 0.3, 1.0])
    def test_single_trial(self, p):
        moments = truncated_moments(1, p)
        assert moments.mean_inverse_given_positive == pytest.approx(1.0)
        assert moments.mean_given_positive == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [0.01, 0.1, 0.5, 0.9])
    def test_matches_enumeration(self, p):
        for n in range(1, 31):
            positive = 1.0 - (1.0 - p) ** n
            mean_inverse = sum(comb(n, x) * p**x * (1 - p) ** (n - x) / x for x in range(1, n + 1)) / positive
            moments = truncated_moments(n, p)
            assert moments.prob_positive == pytest.approx(positive, rel=1e-12)
            assert moments.mean_inverse_given_positive == pytest.approx(mean_inverse, rel=1e-12)

    def test_zero_probability_rejected(self):
        with pytest.raises(DomainErrorException):
            truncated_moments(10, 0.0)


class TestMidpInterval:
    """Mid-P binomial intervals for control-row rates."""

    def test_zero_successes(self):
        interval = midp_interval(0, 10, 0.05)
        assert interval.lower == 0.0
        assert interval.upper > 0.0
        assert interval.method == IntervalMethod.MIDP

    def test_all_successes(self):
        interval = midp_interval(10, 10, 0.05)
        assert interval.upper == 1.0
        assert interval.lower < 1.0

    def test_bounds_solve_their_equations(self):
        x, n = 606, 610
        interval = midp_interval(x, n, 0.05)
        upper_tail = stats.binom.sf(x, n, interval.lower) + 0.5 * stats.binom.pmf(x, n, interval.lower)
        lower_tail = stats.binom.cdf(x - 1, n, interval.upper) + 0.5 * stats.binom.pmf(x, n, interval.upper)
        assert upper_tail == pytest.approx(0.025, abs=1e-8)
        assert lower_tail == pytest.approx(0.025, abs=1e-8)
        assert interval.lower < 606 / 610 < interval.upper

    def test_bounds_increase_with_successes(self):
        intervals = [midp_interval(x, 40, 0.05) for x in range(41)]
        lowers = [i.lower for i in intervals]
        uppers = [i.upper for i in intervals]
        assert all(a < b for a, b in zip(lowers[1:], lowers[2:]))
        assert all(a < b for a, b in zip(uppers[:-2], uppers[1:-1]))

    def test_flags_are_carried(self):
        interval = midp_interval(3, 50, 0.05, flags=[IntervalFlag.ADJUSTED_COUNTS])
        assert IntervalFlag.ADJUSTED_COUNTS in interval.flags

    def test_bad_counts(self):
        with pytest.raises(DomainErrorException):
            midp_interval(11, 10, 0.05)

    @pytest.mark.parametrize("p", [0.5, 0.9, 0.98])
    def test_exact_coverage_small_n(self, p):
        assert _exact_coverage(p, 100) >= 0.94

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [0.5, 0.9, 0.98])
    def test_exact_coverage_large_n(self, p):
        assert _exact_coverage(p, 500) >= 0.94


class TestWaldLogitInterval:
    """Wald intervals on the logit scale."""

    def test_z_quantile(self):
        assert z_quantile(0.05) == pytest.approx(1.959964, abs=1e-6)

    def test_zero_variance(self):
        interval = wald_logit_interval(0.5, 0.0, 0.05)
        assert interval.lower == pytest.approx(0.5)
        assert interval.upper == pytest.approx(0.5)

    def test_kidney_row(self):
        interval = wald_logit_interval(0.12, 0.3936, 0.05)
        assert interval.lower == pytest.approx(0.038, abs=5e-4)
        assert interval.upper == pytest.approx(0.318, abs=5e-4)

    def test_uterus_row(self):
        interval = wald_logit_interval(0.2222, 0.16495, 0.05)
        assert interval.lower == pytest.approx(0.114, abs=5e-4)
        assert interval.upper == pytest.approx(0.388, abs=5e-4)

    @pytest.mark.parametrize("point", [0.0, 1.0])
    def test_boundary_point_is_degenerate(self, point):
        interval = wald_logit_interval(point, 1.0, 0.05)
        assert interval.method == IntervalMethod.DEGENERATE
        assert IntervalFlag.DEGENERATE_PROPORTION in interval.flags

    def test_wider_at_smaller_alpha(self):
        narrow = wald_logit_interval(0.3, 0.2, 0.5)
        wide = wald_logit_interval(0.3, 0.2, 0.05)
        assert wide.lower < narrow.lower and narrow.upper < wide.upper

    def test_negative_variance_rejected(self):
        with pytest.raises(DomainErrorException):
            wald_logit_interval(0.3, -1.0, 0.05)


class TestNumericalGradient:
    """Central differences used for the stage-decomposition gradient."""

    def test_quadratic(self):
        gradient = numerical_gradient(lambda x: float(x @ x), np.array([1.0, -2.0, 0.5]))
        assert np.allclose(gradient, [2.0, -4.0, 1.0], atol=1e-8)
