"""Conditional target processes M_n for the exactly sufficient families.

All functions accept scalars or numpy arrays. Scalar inputs return Python
floats.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError

JEFFREYS_SHAPE = 0.5


@dataclass(frozen=True)
class CountPath:
    """Running count ``s`` after ``n`` Bernoulli or Poisson observations."""

    n: int
    s: int
    family: str = "bernoulli"

    def __post_init__(self):
        if self.n < 0 or self.s < 0:
            raise DomainError(f"counts must be nonnegative, got n={self.n}, s={self.s}")
        if self.family == "bernoulli" and self.s > self.n:
            raise DomainError(f"Bernoulli count s={self.s} exceeds n={self.n}")
        if self.family not in ("bernoulli", "poisson"):
            raise DomainError(f"unknown count family {self.family!r}")


@dataclass(frozen=True)
class GaussianPath:
    """Running mean of ``n`` Gaussian observations with known variance and N(0, 1) prior."""

    n: int
    xbar: float
    sigma2: float = 1.0
    prior_mean: float = 0.0
    prior_var: float = 1.0

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"n must be nonnegative, got {self.n}")
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check_counts(s, n, bernoulli, n_min=0):
    s = np.asarray(s)
    n = np.asarray(n)
    if np.any(n < n_min):
        raise DomainError(f"n must be at least {n_min}")
    if np.any(s < 0):
        raise DomainError("counts must be nonnegative")
    if bernoulli and np.any(s > n):
        raise DomainError("Bernoulli count exceeds the number of trials")
    return s, n


def bernoulli_jeffreys_mean(s, n):
    """Posterior mean ``(s + 1/2) / (n + 1)`` under the Jeffreys Beta(1/2, 1/2) prior."""
    s, n = _check_counts(s, n, bernoulli=True)
    return _out((s + JEFFREYS_SHAPE) / (n + 1.0))


def beta_prior_all_failure_mean(a, b, k):
    """Posterior mean ``a / (a + b + k)`` after ``k`` straight failures under Beta(a, b)."""
    if not (a > 0 and b > 0):
        raise DomainError(f"prior shapes must be positive, got a={a}, b={b}")
    k = np.asarray(k)
    if np.any(k < 0):
        raise DomainError("number of failures must be nonnegative")
    return _out(a / (a + b + k))


def poisson_jeffreys_mean(s, n):
    """Posterior mean of Gamma(s + 1/2, rate n + 1)."""
    s, n = _check_counts(s, n, bernoulli=False, n_min=1)
    return _out((s + JEFFREYS_SHAPE) / (n + 1.0))


def gaussian_posterior_mean(xbar, n, sigma2=1.0):
    """Conjugate posterior mean of a Gaussian mean under a N(0, 1) prior."""
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be positive, got {sigma2}")
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("n must be nonnegative")
    precision = n / sigma2
    return _out(precision * np.asarray(xbar, dtype=float) / (precision + 1.0))


def running_mean(s, n):
    """Sample mean ``s / n``."""
    s = np.asarray(s)
    n = np.asarray(n)
    if np.any(n < 1):
        raise DomainError("running mean needs n >= 1")
    return _out(s / n)


TARGET_KINDS = ("running_mean", "jeffreys_mean")


def _target_exact(kind, s, n):
    if kind == "running_mean":
        return s / Fraction(n)
    return (s + Fraction(1, 2)) / Fraction(n + 1)


def exact_reverse_defect(target_kind, s_next, n):
    """Reverse-coherence defect ``E[M_n | S_{n+1}] - M_{n+1}`` for Bernoulli paths.

    Uses the exchangeable sub-sum identity ``E[S_n | S_{n+1} = s] = s n / (n + 1)``.
    The target is affine in ``S_n``, so the conditional expectation passes
    through. Evaluated in exact rational arithmetic and converted to float.
    """
    if target_kind not in TARGET_KINDS:
        raise DomainError(f"target_kind must be one of {TARGET_KINDS}, got {target_kind!r}")
    n = int(n)
    s_next = int(s_next)
    if n < 0 or (target_kind == "running_mean" and n < 1):
        raise DomainError(f"n out of range for {target_kind}: {n}")
    if not 0 <= s_next <= n + 1:
        raise DomainError(f"s_next must lie in [0, {n + 1}], got {s_next}")
    conditional_sn = Fraction(s_next * n, n + 1)
    defect = _target_exact(target_kind, conditional_sn, n) - _target_exact(target_kind, s_next, n + 1)
    return float(defect)


def running_mean_reverse_defect(s, n):
    """Floating-point ``|E[S_n/n | S_{n+1}] - S_{n+1}/(n+1)|`` along a path.

    ``s[i]`` and ``n[i]`` are the running count and index at step ``n``; the
    defect at step ``n`` conditions on the count available at ``n``, so the
    entry for ``n`` compares ``M_{n-1}`` projected onto ``S_n`` with ``M_n``.
    Entries with ``n = 1`` are ``inf`` since no earlier target exists.
    Nonzero values are pure rounding.
    """
    s = np.asarray(s, dtype=float)
    n = np.asarray(n, dtype=float)
    prev = n - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        projected = (s * prev / n) / prev
        defect = np.abs(projected - s / n)
    return np.where(prev >= 1.0, defect, np.inf)
