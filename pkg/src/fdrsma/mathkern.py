"""Special functions used by the outage closed forms and the quadrature oracle.

All functions are pure. The incomplete gamma uses the
usual regime split: power series below ``x = a + 1`` and a Lentz continued
fraction for the upper tail above it.
"""

import math

import numpy as np
from scipy.special import gammaln

__all__ = [
    "lower_regularized_gamma",
    "erlang_cdf",
    "log_binomial",
    "logsumexp",
]

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


def _gamma_series(a, x):
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"gamma series did not converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # Q(a, x) by modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"gamma continued fraction did not converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def lower_regularized_gamma(shape, x):
    """Regularized lower incomplete gamma ``P(shape, x) = gamma(shape, x) / Gamma(shape)``.

    This is the CDF of a unit-scale Gamma(shape) variable at ``x``.
    """
    shape = float(shape)
    x = float(x)
    _check_finite("shape", shape)
    _check_finite("x", x)
    if shape <= 0.0:
        raise ValueError(f"shape must be positive, got {shape}")
    if x < 0.0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    if x < shape + 1.0:
        return min(1.0, _gamma_series(shape, x))
    return max(0.0, 1.0 - _gamma_contfrac(shape, x))


def logsumexp(values):
    """Stable ``log(sum(exp(v)))`` over an iterable of floats (``-inf`` allowed)."""
    values = list(values)
    if not values:
        return -math.inf
    top = max(values)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def erlang_cdf(shape, x):
    """CDF of the unit-rate Erlang distribution, ``1 - exp(-x) * sum_{k<shape} x^k / k!``.

    Below the mode region (``x < shape``) the complement is formed from the
    upper Poisson tail so that small probabilities keep full relative
    precision. Otherwise the partial sum is accumulated in the log domain.
    """
    if isinstance(shape, bool) or int(shape) != shape:
        raise ValueError(f"Erlang shape must be a positive integer, got {shape!r}")
    m = int(shape)
    if m < 1:
        raise ValueError(f"Erlang shape must be a positive integer, got {shape!r}")
    x = float(x)
    _check_finite("x", x)
    if x < 0.0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    log_x = math.log(x)
    if x < m:
        # e^-x sum_{k>=m} x^k/k!, ratio of consecutive terms x/(k+1) < 1
        term = 1.0
        total = 1.0
        k = m
        while term > total * _EPS:
            k += 1
            term *= x / k
            total += term
        return math.exp(-x + m * log_x - math.lgamma(m + 1) + math.log(total))
    log_head = logsumexp(k * log_x - math.lgamma(k + 1) for k in range(m)) - x
    return -math.expm1(log_head)


def log_binomial(n, k):
    """Natural log of the binomial coefficient C(n, k); broadcasts over arrays."""
    if np.ndim(n) == 0 and np.ndim(k) == 0:
        if k < 0 or k > n:
            raise ValueError(f"log_binomial needs 0 <= k <= n, got n={n}, k={k}")
        return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or np.any(k > n):
        raise ValueError("log_binomial needs 0 <= k <= n elementwise")
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
