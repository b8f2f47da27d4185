"""Uncertainty widths W_n and zero-failure sample-size rules."""

import math
from dataclasses import dataclass
from functools import lru_cache
from statistics import NormalDist

from .errors import DomainError
from .special import (
    QUANTILE_MAX_ITER,
    QUANTILE_XTOL,
    beta_quantile,
    gamma_quantile,
    reg_inc_beta,
    reg_inc_gamma,
)

__all__ = [
    "IntervalWidth",
    "reg_inc_beta",
    "reg_inc_gamma",
    "beta_quantile",
    "gamma_quantile",
    "QUANTILE_MAX_ITER",
    "QUANTILE_XTOL",
    "normal_upper_quantile",
    "jeffreys_beta_width",
    "jeffreys_gamma_width",
    "gaussian_width",
    "clopper_pearson_upper_zero",
    "all_failure_threshold",
]


@dataclass(frozen=True)
class IntervalWidth:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise DomainError(f"interval endpoints out of order: [{self.lower}, {self.upper}]")

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def normal_upper_quantile(alpha):
    """``z_{alpha/2}``, the upper ``alpha/2`` standard normal quantile."""
    _check_alpha(alpha)
    return NormalDist().inv_cdf(1.0 - alpha / 2.0)


@lru_cache(maxsize=1 << 17)
def _beta_interval(s, n, alpha):
    a = s + 0.5
    b = n - s + 0.5
    return beta_quantile(alpha / 2.0, a, b), beta_quantile(1.0 - alpha / 2.0, a, b)


def jeffreys_beta_width(s, n, alpha=0.05):
    """Equal-tailed Jeffreys interval for a Bernoulli probability after ``s`` of ``n``.

    Results are cached on ``(s, n, alpha)`` because the harness revisits the
    same counts across replications.
    """
    s = int(s)
    n = int(n)
    if n < 0 or not 0 <= s <= n:
        raise DomainError(f"need 0 <= s <= n, got s={s}, n={n}")
    _check_alpha(alpha)
    lower, upper = _beta_interval(s, n, float(alpha))
    return IntervalWidth(lower, upper)


@lru_cache(maxsize=1 << 16)
def _gamma_interval(s, n, alpha, prior_rate):
    shape = s + 0.5
    rate = n + prior_rate
    return (gamma_quantile(alpha / 2.0, shape, rate),
            gamma_quantile(1.0 - alpha / 2.0, shape, rate))


def jeffreys_gamma_width(s, n, alpha=0.05, prior_rate=1.0):
    """Equal-tailed Gamma(s + 1/2, rate n + prior_rate) interval for a Poisson rate.

    ``prior_rate = 1`` gives the proper Gamma(1/2, 1) prior; ``prior_rate = 0``
    gives the improper Jeffreys prior with density proportional to ``lambda^(-1/2)``.
    """
    s = int(s)
    n = int(n)
    if s < 0 or n < 1:
        raise DomainError(f"need s >= 0 and n >= 1, got s={s}, n={n}")
    if not (prior_rate >= 0 and math.isfinite(prior_rate)):
        raise DomainError(f"prior_rate must be nonnegative, got {prior_rate!r}")
    _check_alpha(alpha)
    lower, upper = _gamma_interval(s, n, float(alpha), float(prior_rate))
    return IntervalWidth(lower, upper)


def gaussian_width(n, sigma2=1.0, alpha=0.05):
    """Posterior credible width ``2 z / sqrt(n / sigma2 + 1)`` under a N(0, 1) prior."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    return 2.0 * normal_upper_quantile(alpha) / math.sqrt(n / sigma2 + 1.0)


def clopper_pearson_upper_zero(n, alpha=0.05):
    """Exact one-sided upper bound ``1 - alpha^(1/n)`` after ``n`` failures and no successes."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    _check_alpha(alpha)
    return -math.expm1(math.log(alpha) / n)


def all_failure_threshold(alpha, epsilon):
    """Smallest run of failures that rejects ``p >= epsilon`` at level ``alpha``."""
    _check_alpha(alpha)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return max(1, math.ceil(math.log(alpha) / math.log1p(-epsilon)))
