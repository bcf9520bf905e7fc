"""
Probabilistic primitives shared by the estimators.

Truncated binomial moments for the compound-variable accuracy estimator,
Mid-P binomial intervals for control-row rates, and assembly of Wald
intervals on the logit scale.
"""

from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import optimize, special, stats

from src.core.config import settings
from src.core.enums import IntervalFlag, IntervalMethod
from src.core.exceptions import DomainErrorException
from src.schemas.accuracy import TruncatedBinomialMoments
from src.schemas.common import EstimateInterval


def _check_prob(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0) or np.isnan(p):
        raise DomainErrorException(f"{name} must lie in [0, 1], got {p}")


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainErrorException(f"alpha must lie in (0, 1), got {alpha}")


def resolve_alpha(alpha: Optional[float], default: Optional[float] = None) -> float:
    """The given alpha, else the default (settings when none); always checked to lie in (0, 1)."""
    if alpha is None:
        alpha = settings.DEFAULT_ALPHA if default is None else default
    _check_alpha(alpha)
    return float(alpha)



@lru_cache(maxsize=64)
def z_quantile(alpha: float) -> float:
    """Two-sided standard normal critical value z_{1 - alpha/2}."""
    _check_alpha(alpha)
    return float(stats.norm.ppf(1.0 - alpha / 2.0))


def prob_positive(n_trials: int, p: float) -> float:
    """P(n > 0) for n ~ Binomial(n_trials, p), as -expm1(n log1p(-p))."""
    if n_trials < 1:
        raise DomainErrorException(f"n_trials must be >= 1, got {n_trials}")
    _check_prob(p)
    if p == 1.0:
        return 1.0
    return float(-np.expm1(n_trials * np.log1p(-p)))


@lru_cache(maxsize=4096)
def truncated_moments(n_trials: int, p: float) -> TruncatedBinomialMoments:
    """
    Moments of a Binomial(n_trials, p) count conditioned on being positive.

    E(1/n | n > 0) is an exact O(n_trials) sum over the binomial pmf; the
    conditioning event has probability zero when p = 0, so that is rejected.
    """
    _check_prob(p)
    if p == 0.0:
        raise DomainErrorException("truncated moments are undefined for p = 0")
    positive = prob_positive(n_trials, p)

    x = np.arange(1, n_trials + 1, dtype=float)
    pmf = stats.binom.pmf(x, n_trials, p)
    mean_inverse = float(np.sum(pmf / x) / positive)
    # float noise can push the ratio a hair past 1 when p is close to 1
    mean_inverse = min(mean_inverse, 1.0)

    return TruncatedBinomialMoments(
        n_trials=n_trials,
        success_prob=p,
        prob_positive=positive,
        mean_inverse_given_positive=mean_inverse,
        mean_given_positive=n_trials * p / positive,
    )


def midp_interval(
    successes: int,
    trials: int,
    alpha: float,
    tolerance: Optional[float] = None,
    flags: Iterable[IntervalFlag] = (),
) -> EstimateInterval:
    """
    Mid-P confidence interval for a binomial proportion.

    The lower bound solves P(X > x) + P(X = x)/2 = alpha/2 and the upper
    bound P(X < x) + P(X = x)/2 = alpha/2; both tail functions are monotone
    in p so bisection always converges. x = 0 pins the lower bound to 0 and
    x = n pins the upper bound to 1.
    """
    _check_alpha(alpha)
    if trials < 1:
        raise DomainErrorException(f"trials must be >= 1, got {trials}")
    if not (0 <= successes <= trials):
        raise DomainErrorException(f"successes must lie in [0, {trials}], got {successes}")
    tol = tolerance or settings.MIDP_TOLERANCE
    x, n, half = successes, trials, alpha / 2.0

    def upper_tail(p: float) -> float:
        return stats.binom.sf(x, n, p) + 0.5 * stats.binom.pmf(x, n, p) - half

    def lower_tail(p: float) -> float:
        return stats.binom.cdf(x - 1, n, p) + 0.5 * stats.binom.pmf(x, n, p) - half

    lower = 0.0 if x == 0 else float(optimize.bisect(upper_tail, 0.0, 1.0, xtol=tol))
    upper = 1.0 if x == n else float(optimize.bisect(lower_tail, 0.0, 1.0, xtol=tol))
    point = x / n

    return EstimateInterval(
        point=point,
        lower=min(lower, point),
        upper=max(upper, point),
        alpha=alpha,
        method=IntervalMethod.MIDP,
        flags=frozenset(flags),
    )


def wald_logit_interval(
    point: float,
    variance_of_logit: float,
    alpha: float,
    flags: Iterable[IntervalFlag] = (),
) -> EstimateInterval:
    """
    Wald interval built on the logit scale and mapped back with the anti-logit.

    A point of exactly 0 or 1 has no logit; the result is then a
    zero-width interval with method ``degenerate`` and the caller decides
    on a fallback.
    """
    _check_alpha(alpha)
    _check_prob(point, "point")
    flags = frozenset(flags)
    if point in (0.0, 1.0):
        return EstimateInterval(
            point=point,
            lower=point,
            upper=point,
            alpha=alpha,
            method=IntervalMethod.DEGENERATE,
            flags=flags | {IntervalFlag.DEGENERATE_PROPORTION},
        )
    if not np.isfinite(variance_of_logit) or variance_of_logit < 0:
        raise DomainErrorException(f"logit variance must be finite and >= 0, got {variance_of_logit}")

    center = float(special.logit(point))
    half_width = z_quantile(alpha) * float(np.sqrt(variance_of_logit))
    lower = float(special.expit(center - half_width))
    upper = float(special.expit(center + half_width))

    return EstimateInterval(
        point=point,
        lower=min(lower, point),
        upper=max(upper, point),
        alpha=alpha,
        method=IntervalMethod.LOGIT_WALD,
        flags=flags,
    )


def numerical_gradient(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: Optional[float] = None
) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    h = step or settings.FD_STEP
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        forward, backward = x.copy(), x.copy()
        forward[i] += h
        backward[i] -= h
        grad[i] = (func(forward) - func(backward)) / (2.0 * h)
    return grad
