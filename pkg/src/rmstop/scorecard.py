"""Scorecard data model and the boundary-only, two-condition and three-condition rules."""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError

RULES = ("boundary_only", "two_cond", "rm")


@dataclass(frozen=True)
class ScorecardConfig:
    """Tuning tuple for the stopping rules.

    Parameters
    ----------
    epsilon : float
        Boundary closeness threshold. Must lie in (0, 1/2) on the probability
        scale; any positive value is accepted when ``probability_scale`` is False.
    width_max : float
        Largest admissible uncertainty width ``w``.
    eta : float
        Stability tolerance. ``math.inf`` disables the stability condition.
    n_min, n_max : int
        Burn-in index and censoring horizon.
    alpha : float
        Miscoverage level of the credible intervals that produce the widths.
    """

    epsilon: float
    width_max: float
    eta: float
    n_min: int = 30
    n_max: int = 5000
    alpha: float = 0.05
    probability_scale: bool = True

    def __post_init__(self):
        if self.probability_scale:
            if not 0.0 < self.epsilon < 0.5:
                raise ConfigError(f"epsilon must lie in (0, 1/2), got {self.epsilon!r}")
        elif not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be positive, got {self.epsilon!r}")
        if not self.width_max > 0:
            raise ConfigError(f"width_max must be positive, got {self.width_max!r}")
        if not self.eta >= 0:
            raise ConfigError(f"eta must be nonnegative, got {self.eta!r}")
        if not 1 <= self.n_min <= self.n_max:
            raise ConfigError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    def as_dict(self):
        return {
            "epsilon": self.epsilon,
            "width_max": self.width_max,
            "eta": self.eta,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "alpha": self.alpha,
            "probability_scale": self.probability_scale,
        }


@dataclass(frozen=True)
class StepScore:
    n: int
    m: float
    b: float
    width: float
    r: float


@dataclass(frozen=True)
class StopReport:
    """Outcome of one rule on one path. ``tau`` is None when censored."""

    rule: str
    stopped: bool
    tau: Optional[int] = None
    m_at_tau: Optional[float] = None
    mle_at_tau: Optional[float] = None
    reason: str = ""

    def __post_init__(self):
        if self.stopped != (self.tau is not None):
            raise DomainError("stopped must be True exactly when tau is set")

    @property
    def tau_or_inf(self):
        return math.inf if self.tau is None else self.tau

    @classmethod
    def censored(cls, rule, reason="no qualifying step"):
        return cls(rule=rule, stopped=False, reason=reason)


class RuleReports(NamedTuple):
    boundary_only: StopReport
    two_cond: StopReport
    rm: StopReport


@dataclass(frozen=True)
class ScoreTrace:
    """Columnar score sequence indexed ``n = 1..N``.

    ``mle`` optionally carries the raw estimate at each step so that stop
    reports can record it.
    """

    n: np.ndarray
    m: np.ndarray
    b: np.ndarray
    width: np.ndarray
    r: np.ndarray
    mle: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        cols = [np.asarray(getattr(self, name), dtype=float) for name in ("m", "b", "width", "r")]
        size = len(self.n)
        if any(c.shape != (size,) for c in cols):
            raise DomainError("score columns must be one-dimensional and of equal length")
        if self.mle is not None and len(self.mle) != size:
            raise DomainError("mle column length mismatch")

    def __len__(self):
        return len(self.n)

    @classmethod
    def from_steps(cls, steps: Sequence[StepScore]):
        steps = list(steps)
        return cls(
            n=np.array([s.n for s in steps], dtype=np.int64),
            m=np.array([s.m for s in steps], dtype=float),
            b=np.array([s.b for s in steps], dtype=float),
            width=np.array([s.width for s in steps], dtype=float),
            r=np.array([s.r for s in steps], dtype=float),
        )

    def steps(self):
        return [StepScore(int(n), float(m), float(b), float(w), float(r))
                for n, m, b, w, r in zip(self.n, self.m, self.b, self.width, self.r)]


def boundary_distance(m):
    """``min(m, 1 - m)`` for probability-scale targets."""
    arr = np.asarray(m, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("boundary distance needs targets in [0, 1]")
    out = np.minimum(arr, 1.0 - arr)
    return float(out) if out.ndim == 0 else out


def distance_to_value(m, value=0.0):
    """``|m - value|`` for real-scale targets."""
    out = np.abs(np.asarray(m, dtype=float) - value)
    return float(out) if out.ndim == 0 else out


def stability_defect(m_curr, m_prev):
    """Observable stability proxy ``|M_n - M_{n-1}|``."""
    if not (math.isfinite(m_curr) and math.isfinite(m_prev)):
        raise DomainError("stability defect needs finite targets")
    return abs(m_curr - m_prev)


def increments(m):
    """``|M_n - M_{n-1}|`` along a path with ``r_1 = inf``."""
    m = np.asarray(m, dtype=float)
    r = np.empty_like(m)
    if m.size:
        r[0] = np.inf
        r[1:] = np.abs(np.diff(m))
    return r


def _as_trace(scores):
    if isinstance(scores, ScoreTrace):
        return scores
    return ScoreTrace.from_steps(scores)


def _report(rule, trace, idx):
    if idx is None:
        return StopReport.censored(rule)
    mle = None if trace.mle is None else float(trace.mle[idx])
    return StopReport(rule=rule, stopped=True, tau=int(trace.n[idx]),
                      m_at_tau=float(trace.m[idx]), mle_at_tau=mle)


def _first(mask):
    hits = np.flatnonzero(mask)
    return int(hits[0]) if hits.size else None


def _window(trace, config):
    n = np.asarray(trace.n)
    if not np.array_equal(n, np.arange(1, len(n) + 1)):
        raise DomainError("scores must be indexed 1..N contiguously")
    return (n >= config.n_min) & (n <= config.n_max)


def evaluate_rules(scores, config: ScorecardConfig) -> RuleReports:
    """Apply the three nested rules to a score sequence.

    Each rule stops at the first ``n`` in ``[n_min, n_max]`` where all of its
    conditions hold at that same ``n``; a rule with no such ``n`` is censored.
    """
    trace = _as_trace(scores)
    if len(trace) == 0:
        raise DomainError("empty score sequence")
    window = _window(trace, config)
    close = window & (np.asarray(trace.b) <= config.epsilon)
    narrow = close & (np.asarray(trace.width) <= config.width_max)
    stable = narrow & (np.asarray(trace.r) <= config.eta)
    return RuleReports(
        _report("boundary_only", trace, _first(close)),
        _report("two_cond", trace, _first(narrow)),
        _report("rm", trace, _first(stable)),
    )


def evaluate_rules_lazy(m, b, r, width_at: Callable[[int], float], config: ScorecardConfig,
                        mle=None) -> RuleReports:
    """Same result as :func:`evaluate_rules` but widths are computed on demand.

    ``width_at(i)`` returns the width at zero-based position ``i``. It is
    called only where the closeness condition holds, in increasing order,
    and never beyond the three-condition stop.
    """
    b = np.asarray(b, dtype=float)
    r = np.asarray(r, dtype=float)
    size = len(b)
    if size == 0:
        raise DomainError("empty score sequence")
    n = np.arange(1, size + 1)
    window = (n >= config.n_min) & (n <= config.n_max)
    candidates = np.flatnonzero(window & (b <= config.epsilon))
    idx_bdy = int(candidates[0]) if candidates.size else None
    idx_two = idx_rm = None
    for i in candidates:
        if width_at(int(i)) <= config.width_max:
            if idx_two is None:
                idx_two = int(i)
            if r[i] <= config.eta:
                idx_rm = int(i)
                break
    m = np.asarray(m, dtype=float)

    def report(rule, idx):
        if idx is None:
            return StopReport.censored(rule)
        return StopReport(rule=rule, stopped=True, tau=idx + 1, m_at_tau=float(m[idx]),
                          mle_at_tau=None if mle is None else float(mle[idx]))

    return RuleReports(report("boundary_only", idx_bdy), report("two_cond", idx_two),
                       report("rm", idx_rm))


def region_trace(grid_scores: Sequence) -> ScoreTrace:
    """Aggregate per-point traces over a finite covariate grid by step-wise maxima.

    ``m`` carries the target at the grid point farthest from the boundary.
    """
    traces = [_as_trace(g) for g in grid_scores]
    if not traces:
        raise DomainError("empty grid")
    size = len(traces[0])
    if any(not np.array_equal(t.n, traces[0].n) for t in traces):
        raise DomainError("grid points must share the same step indexing")
    b = np.vstack([t.b for t in traces])
    worst = np.argmax(b, axis=0)
    m = np.vstack([t.m for t in traces])[worst, np.arange(size)]
    return ScoreTrace(
        n=np.asarray(traces[0].n),
        m=m,
        b=b.max(axis=0),
        width=np.vstack([t.width for t in traces]).max(axis=0),
        r=np.vstack([t.r for t in traces]).max(axis=0),
    )


def region_scorecard(grid_scores: Sequence, config: ScorecardConfig) -> StopReport:
    """Three-condition rule for a region: sup over the grid of each score component."""
    return evaluate_rules(region_trace(grid_scores), config).rm
