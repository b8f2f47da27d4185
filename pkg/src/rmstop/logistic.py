"""Ridge-penalized logistic regression by damped Newton, plus separation detection."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NumericError
from .uncertainty import normal_upper_quantile

_TINY = np.finfo(float).tiny
_ONE_BELOW = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class LogisticDesign:
    """Covariates (without intercept), binary labels and ridge penalty."""

    features: np.ndarray
    labels: np.ndarray
    ridge: float = 1.0
    penalize_intercept: bool = True

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise DomainError(f"feature rows {x.shape} and labels {y.shape} do not match")
        if not np.all(np.isfinite(x)):
            raise DomainError("features must be finite")
        if np.any((y != 0.0) & (y != 1.0)):
            raise DomainError("labels must be 0 or 1")
        if not self.ridge >= 0:
            raise DomainError(f"ridge penalty must be nonnegative, got {self.ridge!r}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "_X", np.column_stack([np.ones(x.shape[0]), x]))
        pen = np.full(x.shape[1] + 1, float(self.ridge))
        if not self.penalize_intercept:
            pen[0] = 0.0
        object.__setattr__(self, "_penalty", pen)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def X(self):
        return self._X

    @property
    def penalty(self):
        """Per-coefficient ridge weights, intercept first."""
        return self._penalty

    def head(self, n):
        return LogisticDesign(self.features[:n], self.labels[:n], self.ridge, self.penalize_intercept)

    def with_ridge(self, ridge):
        return LogisticDesign(self.features, self.labels, ridge, self.penalize_intercept)


@dataclass
class FitResult:
    coefficients: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    separation_flag: bool = False
    hessian: Optional[np.ndarray] = None


def expit(t):
    t = np.asarray(t, dtype=float)
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0, e) / (1.0 + e)


def penalized_objective(beta, design: LogisticDesign, X=None):
    """``sum[y x'b - log(1 + exp(x'b))] - (lambda/2) |b|^2`` (to be maximized)."""
    X = design.X if X is None else X
    eta = X @ beta
    pen = design.penalty
    return float(design.labels @ eta - np.logaddexp(0.0, eta).sum() - 0.5 * (pen * beta) @ beta)


def penalized_gradient(beta, design: LogisticDesign, X=None):
    X = design.X if X is None else X
    p = expit(X @ beta)
    return X.T @ (design.labels - p) - design.penalty * beta


def penalized_hessian(beta, design: LogisticDesign, X=None):
    """Negative Hessian ``X' W X + lambda I`` of the objective (positive semidefinite)."""
    X = design.X if X is None else X
    p = expit(X @ beta)
    w = p * (1.0 - p)
    return (X * w[:, None]).T @ X + np.diag(design.penalty)


def _damped_newton(design, X, beta, max_iter, converged_fn, solve, diverge_norm=None):
    """Shared loop. Returns ``(beta, iterations, status)``.

    ``status`` is ``"converged"``, ``"stalled"`` (no ascent direction left at
    working precision), ``"diverged"`` or ``"max_iter"``. Accepted steps never
    decrease the objective.
    """
    obj = penalized_objective(beta, design, X)
    if not np.isfinite(obj):
        raise NumericError("objective is not finite at the starting point")
    for it in range(1, max_iter + 1):
        grad = penalized_gradient(beta, design, X)
        if converged_fn(beta, grad, None):
            return beta, it - 1, "converged"
        step = solve(penalized_hessian(beta, design, X), grad)
        t = 1.0
        candidate = beta + step
        new_obj = penalized_objective(candidate, design, X)
        while not new_obj >= obj and t > 1e-12:
            t *= 0.5
            candidate = beta + t * step
            new_obj = penalized_objective(candidate, design, X)
        if not new_obj >= obj:
            return beta, it, "stalled"
        beta, obj = candidate, new_obj
        if diverge_norm is not None and np.linalg.norm(beta) > diverge_norm:
            return beta, it, "diverged"
        if converged_fn(beta, None, t * step):
            return beta, it, "converged"
    return beta, max_iter, "max_iter"


def fit_ridge_logistic(design: LogisticDesign, tol=1e-8, max_iter=100, init=None) -> FitResult:
    """Maximize the ridge-penalized log-likelihood by Newton steps with step halving."""
    if design.n < 1:
        raise DomainError("need at least one observation")
    X = design.X
    beta = np.zeros(design.d + 1) if init is None else np.array(init, dtype=float)

    def done(b, grad, step):
        return grad is not None and np.linalg.norm(grad) <= tol

    beta, iterations, status = _damped_newton(design, X, beta, max_iter, done, np.linalg.solve)
    grad_norm = float(np.linalg.norm(penalized_gradient(beta, design, X)))
    converged = grad_norm <= tol
    return FitResult(coefficients=beta, converged=converged, iterations=iterations,
                     grad_norm=grad_norm, hessian=penalized_hessian(beta, design, X))


def detect_separation(design: LogisticDesign, diverge_norm=50.0, max_iter=100, step_tol=1e-9):
    """True when the unpenalized MLE iterates escape past ``diverge_norm``.

    Newton runs with the same damping as the ridge fit but no penalty. The
    Hessian may be singular under separation, so steps come from least squares.
    Convergence is declared on a vanishing step, since the gradient of a
    separated likelihood decays to zero without a finite maximizer. Running out
    of iterations with a growing norm also counts as separation.
    """
    unpenalized = design.with_ridge(0.0)
    X = unpenalized.X
    norms = []

    def done(b, grad, step):
        if step is None:
            return False
        norms.append(np.linalg.norm(b))
        return np.linalg.norm(step) <= step_tol * (1.0 + np.linalg.norm(b))

    def solve(h, g):
        return np.linalg.lstsq(h, g, rcond=None)[0]

    beta, _, status = _damped_newton(unpenalized, X, np.zeros(design.d + 1), max_iter, done,
                                     solve, diverge_norm=diverge_norm)
    if status == "diverged":
        return True
    if status == "max_iter":
        return len(norms) >= 2 and norms[-1] > norms[-2]
    return False


def predict_prob(coefficients, x):
    """Predicted probability at a covariate point ``x`` (intercept added), kept inside (0, 1)."""
    beta = np.asarray(coefficients, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size + 1 != beta.size:
        raise DomainError(f"covariate point has {x.size} entries, coefficients need {beta.size - 1}")
    score = beta[0] + x @ beta[1:]
    return float(np.clip(expit(score), _TINY, _ONE_BELOW))


def predictive_width(fit: FitResult, design: LogisticDesign, x0, alpha=0.05):
    """Delta-method width ``2 z sqrt(x0' H^-1 x0) p (1 - p)`` at the covariate point ``x0``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != design.d:
        raise DomainError(f"x0 has {x0.size} entries, design has {design.d} covariates")
    beta = fit.coefficients
    H = fit.hessian if fit.hessian is not None else penalized_hessian(beta, design)
    xt = np.concatenate([[1.0], x0])
    try:
        v = float(xt @ np.linalg.solve(H, xt))
    except np.linalg.LinAlgError as exc:
        raise NumericError("penalized Hessian is singular") from exc
    if not (np.isfinite(v) and v >= 0):
        raise NumericError("penalized Hessian is not positive definite")
    p = predict_prob(beta, x0)
    return 2.0 * normal_upper_quantile(alpha) * np.sqrt(v) * p * (1.0 - p)


def simulate_logistic_scenario(d, rho, n_max, seed, ridge=1.0) -> LogisticDesign:
    """Standard normal covariates with labels drawn from the intercept-only model ``expit(logit(rho))``.

    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if d < 1:
        raise DomainError(f"d must be at least 1, got {d}")
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    features = rng.standard_normal((n_max, d))
    labels = (rng.random(n_max) < rho).astype(float)
    return LogisticDesign(features, labels, ridge)
