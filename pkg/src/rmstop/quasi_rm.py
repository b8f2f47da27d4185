"""Perturbed target processes that break exact reverse coherence, and defect summaries.

Path transforms accept a 1-D path or a 2-D array of paths (one per row) and
operate along the last axis.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .logistic import expit

SCENARIOS = ("A", "B", "C")
DEFAULT_CHECKPOINTS = (100, 500, 2000)


@dataclass(frozen=True)
class PerturbationSpec:
    """One perturbation variant.

    ``parameter`` is the heterogeneity ``sigma`` for scenario A, the smoothing
    exponent ``gamma`` for B and the forgetting parameter ``kappa`` for C.
    """

    scenario: str
    parameter: float
    p_base: float = 0.01
    n_max: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if not 0.0 < self.p_base < 1.0:
            raise ConfigError(f"p_base must lie in (0, 1), got {self.p_base}")
        if self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if self.scenario == "A" and not self.parameter >= 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.parameter}")
        if self.scenario == "B" and not 0.0 < self.parameter <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.parameter}")
        if self.scenario == "C" and not self.parameter >= 0:
            raise ConfigError(f"kappa must be nonnegative, got {self.parameter}")

    @property
    def exact(self):
        baseline = {"A": 0.0, "B": 1.0, "C": 0.0}[self.scenario]
        return self.parameter == baseline

    def observations(self, rng=None):
        rng = np.random.default_rng(self.seed) if rng is None else rng
        if self.scenario == "A":
            return heterogeneous_observations(self.p_base, self.parameter, self.n_max, rng)
        return bernoulli_observations(self.p_base, self.n_max, rng)

    def transform(self, y):
        if self.scenario == "A":
            return running_mean_path(y)
        if self.scenario == "B":
            return smoothed_path(y, self.parameter)
        return damped_jeffreys_path(y, self.parameter)

    def path(self, rng=None):
        return self.transform(self.observations(rng))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _logit(p):
    return np.log(p) - np.log1p(-p)


def bernoulli_observations(p_base, n_max, seed, size=None):
    """Plain Bernoulli(p_base) stream; ``size`` adds a leading replication axis."""
    rng = _rng(seed)
    shape = (n_max,) if size is None else (size, n_max)
    return (rng.random(shape) < p_base).astype(float)


def heterogeneous_observations(p_base, sigma, n_max, seed, size=None):
    """Bernoulli draws with iid logit-normal success probabilities.

    Uniforms are drawn before the latent normals so that ``sigma = 0`` reuses
    exactly the plain Bernoulli stream of the same seed.
    """
    if not sigma >= 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    rng = _rng(seed)
    shape = (n_max,) if size is None else (size, n_max)
    u = rng.random(shape)
    if sigma == 0:
        return (u < p_base).astype(float)
    z = rng.standard_normal(shape)
    p = expit(_logit(p_base) + sigma * z)
    return (u < p).astype(float)


def running_mean_path(y):
    y = np.asarray(y, dtype=float)
    n = np.arange(1, y.shape[-1] + 1)
    return np.cumsum(y, axis=-1) / n


def smoothed_path(y, gamma):
    """``M_n = a_n Y_n + (1 - a_n) M_{n-1}`` with ``a_n = n^-gamma`` and ``M_1 = Y_1``.

    With ``gamma = 1`` the recursion is algebraically the running mean; that
    case returns ``S_n / n`` directly so it matches the running mean bit for bit.
    """
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    y = np.asarray(y, dtype=float)
    if gamma == 1.0:
        return running_mean_path(y)
    out = np.empty_like(y)
    m = y[..., 0].copy()
    out[..., 0] = m
    for i in range(1, y.shape[-1]):
        a = (i + 1.0) ** (-gamma)
        m = a * y[..., i] + (1.0 - a) * m
        out[..., i] = m
    return out


def damped_jeffreys_path(y, kappa):
    """Pseudo-count update with forgetting, anchored at the Jeffreys base (1/2, 1/2).

    After ``Y_n`` each count's excess over 1/2 shrinks by ``1 - l_n`` with
    ``l_n = kappa / (n + kappa)`` before the new observation is added, and
    ``M_n = a / (a + b)``. ``kappa = 0`` gives the conjugate Jeffreys mean.
    """
    if not kappa >= 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa}")
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    base = 0.5
    a = np.full(y.shape[:-1], base)
    b = np.full(y.shape[:-1], base)
    for i in range(y.shape[-1]):
        n = i + 1.0
        keep = 1.0 - kappa / (n + kappa)
        a = keep * (a - base) + base + y[..., i]
        b = keep * (b - base) + base + (1.0 - y[..., i])
        out[..., i] = a / (a + b)
    return out


def scenario_a_path(p_base, sigma, n_max, seed):
    return running_mean_path(heterogeneous_observations(p_base, sigma, n_max, seed))


def scenario_b_path(p_base, gamma, n_max, seed):
    return smoothed_path(bernoulli_observations(p_base, n_max, seed), gamma)


def scenario_c_path(p_base, kappa, n_max, seed):
    return damped_jeffreys_path(bernoulli_observations(p_base, n_max, seed), kappa)


def defect_summary(paths, checkpoints=DEFAULT_CHECKPOINTS):
    """Cross-replication median of ``|M_n - M_{n-1}|`` at each checkpoint ``n``."""
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    length = paths.shape[-1]
    out = {}
    for c in checkpoints:
        if not 2 <= c <= length:
            raise DomainError(f"checkpoint {c} outside the path range [2, {length}]")
        out[int(c)] = float(np.median(np.abs(paths[:, c - 1] - paths[:, c - 2])))
    return out
