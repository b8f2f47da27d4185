"""Regularized incomplete beta/gamma functions and their quantile inverses.

Pure-Python scalar routines built on ``math``. The continued fractions use the
modified Lentz algorithm; the incomplete gamma switches between the power
series (``x < a + 1``) and the continued fraction for the upper tail.
"""

import math
from statistics import NormalDist

from .errors import DomainError, NumericError

_EPS = 1e-16
_FPMIN = 1e-300
_CF_MAXIT = 20000

QUANTILE_MAX_ITER = 200
QUANTILE_XTOL = 4e-16


def _check_shape(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360, 1.0 / 156)
_LARGE = 8.0


def _stirling_delta(z):
    """lgamma(z) minus its Stirling main term ``(z - 1/2) ln z - z + ln(2 pi)/2``."""
    if z >= _LARGE:
        zi = 1.0 / z
        zi2 = zi * zi
        total = 0.0
        power = zi
        for coef in _STIRLING:
            total += coef * power
            power *= zi2
        return total
    return math.lgamma(z) - ((z - 0.5) * math.log(z) - z + _HALF_LOG_2PI)


def log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _log_front_small_large(a, b, log_x, log_1mx):
    # a small, b large: lgamma(b) - lgamma(a+b) expanded to avoid cancellation
    diff = (-(b - 0.5) * math.log1p(a / b) - a * math.log(a + b) + a
            + _stirling_delta(b) - _stirling_delta(a + b))
    return a * log_x + b * log_1mx - math.lgamma(a) - diff


def _log_ratio(y, y0):
    """``log(y / y0)``, through ``log1p`` when ``y`` is near ``y0``."""
    t = (y - y0) / y0
    if abs(t) < 0.5:
        return math.log1p(t)
    return math.log(y) - math.log(y0)


def _log_beta_front(x, a, b):
    """``log(x^a (1-x)^b / B(a, b))`` without lgamma cancellation at large shapes."""
    if a >= _LARGE and b >= _LARGE:
        total = a + b
        x0 = a / total
        return (a * _log_ratio(x, x0) + b * _log_ratio(1.0 - x, 1.0 - x0)
                + 0.5 * math.log(a * b / total) - _HALF_LOG_2PI
                - _stirling_delta(a) - _stirling_delta(b) + _stirling_delta(total))
    log_x = math.log(x)
    log_1mx = math.log1p(-x)
    if b >= _LARGE:
        return _log_front_small_large(a, b, log_x, log_1mx)
    if a >= _LARGE:
        return _log_front_small_large(b, a, log_1mx, log_x)
    return a * log_x + b * log_1mx - log_beta(a, b)


def _betacf(x, a, b):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericError(f"incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})")


def beta_tails(x, a, b):
    """Return ``(I_x(a, b), 1 - I_x(a, b))`` with the smaller tail computed directly."""
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    _check_shape("a", a)
    _check_shape("b", b)
    if x == 0.0:
        return 0.0, 1.0
    if x == 1.0:
        return 1.0, 0.0
    front = math.exp(_log_beta_front(x, a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _betacf(x, a, b) / a
        return lower, 1.0 - lower
    upper = front * _betacf(1.0 - x, b, a) / b
    return 1.0 - upper, upper


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    return beta_tails(x, a, b)[0]


def _gamma_series(a, x):
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(_CF_MAXIT):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise NumericError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gamma_tails(a, x):
    """Return ``(P(a, x), Q(a, x))``, the regularized lower and upper incomplete gamma."""
    _check_shape("a", a)
    if not (x >= 0.0) or math.isnan(x):
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if a >= _LARGE:
        t = (x - a) / a
        log_front = (a * (math.log1p(t) - t) + 0.5 * math.log(a)
                     - _HALF_LOG_2PI - _stirling_delta(a))
    else:
        log_front = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        lower = math.exp(log_front) * _gamma_series(a, x)
        return lower, 1.0 - lower
    upper = math.exp(log_front) * _gamma_cf(a, x)
    return 1.0 - upper, upper


def reg_inc_gamma(a, x):
    """Regularized lower incomplete gamma function ``P(a, x)``."""
    return gamma_tails(a, x)[0]


def _polish(residual, x, lo, hi, max_steps=64):
    """Walk to the adjacent double with the smallest residual.

    Where the CDF is steep the converged root can sit a few ulps from the
    best representable answer.
    """
    best = abs(residual(x))
    for direction in (lo, hi):
        y = x
        for _ in range(max_steps):
            y = math.nextafter(y, direction)
            if not lo < y < hi:
                break
            err = abs(residual(y))
            if err >= best:
                break
            x, best = y, err
    return x


def _invert(tail, pdf, p, lo, hi, x0, max_iter, xtol):
    """Solve ``F(x) = p`` on ``[lo, hi]`` by Newton steps guarded by bisection.

    ``tail(x)`` returns ``(F(x), 1 - F(x))``. For ``p > 1/2`` the residual is
    formed from the upper tail so precision is kept near 1.
    """
    use_upper = p > 0.5
    q = 1.0 - p

    def residual(x):
        lower, upper = tail(x)
        return q - upper if use_upper else lower - p

    lo0, hi0 = lo, hi
    x = min(max(x0, lo), hi)
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = residual(x)
        if g == 0.0:
            return x
        if g < 0.0:
            lo = x
        else:
            hi = x
        dens = pdf(x)
        x_new = None
        if dens > 0.0 and math.isfinite(dens):
            x_new = x - g / dens
            if not (lo < x_new < hi):
                x_new = None
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= xtol * max(abs(x), 1e-300) or hi - lo <= xtol * max(abs(lo), 1e-300):
            return _polish(residual, x_new, lo0, hi0)
        x = x_new
    raise NumericError(f"quantile inversion did not converge within {max_iter} iterations (p={p})")


def beta_quantile(p, a, b, max_iter=QUANTILE_MAX_ITER, xtol=QUANTILE_XTOL):
    """Inverse of ``I_x(a, b)`` in ``x`` for ``0 < p < 1``."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    _check_shape("a", a)
    _check_shape("b", b)
    lb = log_beta(a, b)

    def pdf(x):
        if x <= 0.0 or x >= 1.0:
            return 0.0
        return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - lb)

    # power-law tail approximations give a good start in the extreme tails
    if p <= 0.5:
        x0 = math.exp((math.log(p) + math.log(a) + lb) / a)
    else:
        x0 = 1.0 - math.exp((math.log1p(-p) + math.log(b) + lb) / b)
    if not (0.0 < x0 < 1.0):
        x0 = a / (a + b)
    return _invert(lambda x: beta_tails(x, a, b), pdf, p, 0.0, 1.0, x0, max_iter, xtol)


def gamma_quantile(p, shape, rate=1.0, max_iter=QUANTILE_MAX_ITER, xtol=QUANTILE_XTOL):
    """Quantile of the Gamma(shape, rate) distribution."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    _check_shape("shape", shape)
    _check_shape("rate", rate)
    a = shape
    lg = math.lgamma(a)

    def pdf(x):
        if x <= 0.0:
            return 0.0
        return math.exp((a - 1.0) * math.log(x) - x - lg)

    z = NormalDist().inv_cdf(p)
    c = 1.0 / (9.0 * a)
    x0 = a * (1.0 - c + z * math.sqrt(c)) ** 3
    if not (x0 > 0.0):
        # Wilson-Hilferty fails deep in the lower tail; use P(a, x) ~ x^a / Gamma(a + 1)
        x0 = math.exp((math.log(p) + math.lgamma(a + 1.0)) / a)
    hi = max(2.0 * x0, a + 1.0)
    expansions = 0
    while gamma_tails(a, hi)[1] > 1.0 - p:
        hi *= 2.0
        expansions += 1
        if expansions > 2000:
            raise NumericError("could not bracket gamma quantile")
    return _invert(lambda x: gamma_tails(a, x), pdf, p, 0.0, hi, x0, max_iter, xtol) / rate
