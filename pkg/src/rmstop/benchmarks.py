"""Classical comparators: Wald SPRT and one-sided upward CUSUM charts."""

import math
from dataclasses import dataclass, field
from functools import lru_cache
import numpy as np

from .errors import CalibrationError, ConfigError
from .scorecard import StopReport


@dataclass(frozen=True)
class SprtConfig:
    """Wald SPRT of ``H0: p = p0`` against the boundary-favoring ``H1: p = p1 < p0``.

    The same object parameterizes the Poisson test with ``p0, p1`` read as rates.
    """

    p0: float
    p1: float
    alpha: float = 0.05
    beta: float = 0.05

    def __post_init__(self):
        if self.p0 == self.p1:
            raise ConfigError("degenerate SPRT: p0 equals p1")
        if not 0.0 < self.p1 < self.p0:
            raise ConfigError(f"need 0 < p1 < p0, got p0={self.p0}, p1={self.p1}")
        if not (0.0 < self.alpha < 1.0 and 0.0 < self.beta < 1.0):
            raise ConfigError("alpha and beta must lie in (0, 1)")
        if not self.lower < 0.0 < self.upper:
            raise ConfigError(f"boundaries must satisfy a < 0 < b, got a={self.lower}, b={self.upper}")

    @property
    def lower(self):
        return math.log(self.beta / (1.0 - self.alpha))

    @property
    def upper(self):
        return math.log((1.0 - self.beta) / self.alpha)

    @classmethod
    def for_epsilon(cls, epsilon, alpha=0.05, beta=0.05):
        return cls(p0=epsilon, p1=epsilon / 2.0, alpha=alpha, beta=beta)


def _truncate(path, n_max):
    x = np.asarray(path, dtype=float)
    return x if n_max is None else x[:n_max]


def _sprt_report(llr, cfg):
    up = np.flatnonzero(llr >= cfg.upper)
    down = np.flatnonzero(llr <= cfg.lower)
    first_up = int(up[0]) if up.size else None
    first_down = int(down[0]) if down.size else None
    if first_up is not None and (first_down is None or first_up < first_down):
        return StopReport(rule="sprt", stopped=True, tau=first_up + 1, m_at_tau=float(llr[first_up]))
    if first_down is not None:
        return StopReport.censored("sprt", reason=f"accept_h0 at n={first_down + 1}")
    return StopReport.censored("sprt", reason="horizon")


def sprt_log_likelihood_bernoulli(path, cfg: SprtConfig):
    """Cumulative log-likelihood ratio of ``H1`` to ``H0`` along a binary path."""
    y = np.asarray(path, dtype=float)
    if np.any((y != 0.0) & (y != 1.0)):
        raise ConfigError("Bernoulli SPRT needs a binary path")
    if not cfg.p0 < 1.0:
        raise ConfigError("Bernoulli SPRT needs p0 < 1")
    s = np.cumsum(y)
    n = np.arange(1, y.size + 1)
    return s * math.log(cfg.p1 / cfg.p0) + (n - s) * math.log((1.0 - cfg.p1) / (1.0 - cfg.p0))


def sprt_bernoulli_run(path, cfg: SprtConfig, n_max=None) -> StopReport:
    """Run the Bernoulli SPRT; only acceptance of ``H1`` counts as a stop."""
    return _sprt_report(sprt_log_likelihood_bernoulli(_truncate(path, n_max), cfg), cfg)


def sprt_poisson_run(path, cfg: SprtConfig, n_max=None) -> StopReport:
    """Poisson SPRT with per-step increment ``x log(l1/l0) - (l1 - l0)``."""
    x = _truncate(path, n_max)
    s = np.cumsum(x)
    n = np.arange(1, x.size + 1)
    llr = s * math.log(cfg.p1 / cfg.p0) - n * (cfg.p1 - cfg.p0)
    return _sprt_report(llr, cfg)


def sprt_all_failure_time(cfg: SprtConfig):
    """Closed-form Bernoulli SPRT stop on an all-failure path."""
    return math.ceil(cfg.upper / math.log((1.0 - cfg.p1) / (1.0 - cfg.p0)))


def sprt_poisson_zero_time(cfg: SprtConfig):
    """Closed-form Poisson SPRT stop on an all-zero path."""
    return math.ceil(cfg.upper / (cfg.p0 - cfg.p1))


@dataclass(frozen=True)
class NormalCusumModel:
    """Upward CUSUM for a Gaussian mean with reference value ``k``; in control at N(0, 1)."""

    k: float

    def increments(self, x):
        return np.asarray(x, dtype=float) - self.k

    def in_control(self, rng, size):
        return rng.standard_normal(size)


@dataclass(frozen=True)
class PoissonCusumModel:
    """Upward Poisson CUSUM for a rate shift ``lam0 -> lam1``; in control at ``lam0``."""

    lam0: float
    lam1: float

    def __post_init__(self):
        if not self.lam1 > self.lam0 > 0:
            raise ConfigError(f"need lam1 > lam0 > 0, got lam0={self.lam0}, lam1={self.lam1}")

    def increments(self, x):
        return np.asarray(x, dtype=float) * math.log(self.lam1 / self.lam0) - (self.lam1 - self.lam0)

    def in_control(self, rng, size):
        return rng.poisson(self.lam0, size)


@dataclass(frozen=True)
class CusumConfig:
    model: object
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"CUSUM threshold must be positive, got {self.h!r}")


def cusum_statistic(z):
    """Reflected partial sums ``S_n = max(0, S_{n-1} + z_n)`` with ``S_0 = 0``.

    Uses ``S_n = C_n - min(0, min_{j<=n} C_j)`` with ``C`` the raw partial sums.
    """
    c = np.cumsum(np.asarray(z, dtype=float))
    return c - np.minimum(0.0, np.minimum.accumulate(c))


def _cusum_run(z, h):
    if not h > 0:
        raise ConfigError(f"CUSUM threshold must be positive, got {h!r}")
    stat = cusum_statistic(z)
    hits = np.flatnonzero(stat > h)
    if hits.size:
        i = int(hits[0])
        return StopReport(rule="cusum", stopped=True, tau=i + 1, m_at_tau=float(stat[i]))
    return StopReport.censored("cusum", reason="horizon")


def cusum_normal_run(path, k, h, n_max=None) -> StopReport:
    return _cusum_run(NormalCusumModel(k).increments(_truncate(path, n_max)), h)


def cusum_poisson_run(path, lam0, lam1, h, n_max=None) -> StopReport:
    return _cusum_run(PoissonCusumModel(lam0, lam1).increments(_truncate(path, n_max)), h)


@dataclass
class CalibrationResult:
    h: float
    arl: float
    target: float
    trace: list = field(default_factory=list)
    within_tol: bool = True


def estimate_arl(model, h, runs=4000, seed=1, cap=25000, block=256):
    """Monte Carlo in-control ARL with common random numbers across ``h``.

    Every run draws from the same per-block streams whatever ``h`` is, so the
    estimate is nondecreasing in ``h``. Runs reaching ``cap`` count at the cap.
    """
    stat = np.zeros(runs)
    run_length = np.full(runs, cap, dtype=np.int64)
    alive = np.ones(runs, dtype=bool)
    t = 0
    block_id = 0
    while t < cap and alive.any():
        width = min(block, cap - t)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block_id])))
        z = model.increments(model.in_control(rng, (runs, width)))
        for j in range(width):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            s = np.maximum(0.0, stat[idx] + z[idx, j])
            stat[idx] = s
            hit = idx[s > h]
            run_length[hit] = t + j + 1
            alive[hit] = False
        t += width
        block_id += 1
    return float(run_length.mean())


def calibrate_cusum_threshold(model, target_arl0=500.0, mc_runs=4000, seed=1, tol=0.05,
                              cap_factor=50, max_iter=40, h_start=1.0, strict=True) -> CalibrationResult:
    """Bisection for the threshold ``h`` whose in-control ARL matches ``target_arl0``.

    Returns the bracket endpoint whose estimated ARL is closest to the target
    after the bracket has shrunk below ``1e-4`` relative width or ``max_iter``
    halvings. Raises :class:`CalibrationError` if that estimate is not within
    ``tol`` relative error, unless ``strict`` is False, in which case the
    nearest attainable value is returned with ``within_tol`` cleared. Count
    charts have a lattice of attainable ARLs and may jump over the target.
    """
    if not target_arl0 > 1:
        raise ConfigError(f"target ARL must exceed 1, got {target_arl0!r}")
    cap = int(math.ceil(cap_factor * target_arl0))
    trace = []

    def arl(h):
        value = estimate_arl(model, h, runs=mc_runs, seed=seed, cap=cap)
        trace.append((h, value))
        return value

    lo, arl_lo = 0.0, 1.0
    hi = h_start
    arl_hi = arl(hi)
    expansions = 0
    while arl_hi < target_arl0:
        lo, arl_lo = hi, arl_hi
        hi *= 2.0
        arl_hi = arl(hi)
        expansions += 1
        if expansions > 30:
            raise CalibrationError("could not bracket the target ARL", trace)
    for _ in range(max_iter):
        if hi - lo <= 1e-4 * hi:
            break
        mid = 0.5 * (lo + hi)
        arl_mid = arl(mid)
        if arl_mid < target_arl0:
            lo, arl_lo = mid, arl_mid
        else:
            hi, arl_hi = mid, arl_mid
    if lo > 0 and abs(arl_lo - target_arl0) < abs(arl_hi - target_arl0):
        h, value = lo, arl_lo
    else:
        h, value = hi, arl_hi
    within = abs(value - target_arl0) <= tol * target_arl0
    if not within and strict:
        raise CalibrationError(
            f"calibrated ARL {value:.1f} is outside {tol:.0%} of target {target_arl0}", trace)
    return CalibrationResult(h=h, arl=value, target=target_arl0, trace=trace, within_tol=within)


@lru_cache(maxsize=None)
def calibrated_threshold(model, target_arl0=500.0, mc_runs=4000, seed=1, strict=True):
    """Cached :func:`calibrate_cusum_threshold` returning ``(h, estimated ARL)``."""
    result = calibrate_cusum_threshold(model, target_arl0, mc_runs=mc_runs, seed=seed, strict=strict)
    return result.h, result.arl

