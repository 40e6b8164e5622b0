"""Gamma-family special functions on the positive reals.

All functions accept a scalar or an array and return the same shape.
Arguments that are non-positive or non-finite raise :class:`DomainError`
instead of propagating NaN.
"""

import math

import numpy as np

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.5772156649015329

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_2n for n = 1..8
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)

# Stirling series for ln Gamma: B_2n / (2n (2n - 1) x^(2n-1))
_LGAMMA_COEFS = tuple(b / ((2 * n) * (2 * n - 1)) for n, b in enumerate(_BERNOULLI, 1))
# Asymptotic digamma: -sum B_2n / (2n x^2n)
_DIGAMMA_COEFS = tuple(b / (2 * n) for n, b in enumerate(_BERNOULLI, 1))
# Asymptotic trigamma: sum B_2n / x^(2n+1)
_TRIGAMMA_COEFS = _BERNOULLI

_LGAMMA_SHIFT = 10.0
_DIGAMMA_SHIFT = 6.0
_TRIGAMMA_SHIFT = 10.0


def _as_positive(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite, got {x!r}")
    if np.any(arr <= 0.0):
        raise DomainError(f"{name}: argument must be > 0, got {x!r}")
    return arr


def _wrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def _poly(coefs, z):
    # Horner in z for sum_n coefs[n] * z^n, n starting at 0
    acc = np.zeros_like(z)
    for c in reversed(coefs):
        acc = acc * z + c
    return acc


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``.

    Arguments below 10 are shifted upward with ``Gamma(x+1) = x Gamma(x)``
    and the Stirling series is evaluated at the shifted point.
    """
    arr = _as_positive(x, "log_gamma")
    z = np.array(arr, dtype=float, ndmin=1)
    correction = np.zeros_like(z)
    small = z < _LGAMMA_SHIFT
    while np.any(small):
        correction[small] += np.log(z[small])
        z[small] += 1.0
        small = z < _LGAMMA_SHIFT
    inv = 1.0 / z
    series = inv * _poly(_LGAMMA_COEFS, inv * inv)
    out = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series - correction
    return _wrap(out[0] if np.ndim(arr) == 0 else out.reshape(arr.shape), arr)


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for ``x > 0``.

    Uses psi(x) = psi(x + 1) - 1/x until x >= 6, then the asymptotic
    expansion ln x - 1/(2x) - sum_n B_2n / (2n x^2n).
    """
    arr = _as_positive(x, "digamma")
    z = np.array(arr, dtype=float, ndmin=1)
    correction = np.zeros_like(z)
    small = z < _DIGAMMA_SHIFT
    while np.any(small):
        correction[small] += 1.0 / z[small]
        z[small] += 1.0
        small = z < _DIGAMMA_SHIFT
    inv2 = 1.0 / (z * z)
    series = inv2 * _poly(_DIGAMMA_COEFS, inv2)
    out = np.log(z) - 0.5 / z - series - correction
    return _wrap(out[0] if np.ndim(arr) == 0 else out.reshape(arr.shape), arr)


def trigamma(x):
    """First derivative of digamma, strictly positive on ``x > 0``."""
    arr = _as_positive(x, "trigamma")
    z = np.array(arr, dtype=float, ndmin=1)
    correction = np.zeros_like(z)
    small = z < _TRIGAMMA_SHIFT
    while np.any(small):
        correction[small] += 1.0 / (z[small] * z[small])
        z[small] += 1.0
        small = z < _TRIGAMMA_SHIFT
    inv = 1.0 / z
    inv2 = inv * inv
    series = inv * inv2 * _poly(_TRIGAMMA_COEFS, inv2)
    out = inv + 0.5 * inv2 + series + correction
    return _wrap(out[0] if np.ndim(arr) == 0 else out.reshape(arr.shape), arr)


def digamma_inverse(y, tol=1e-10, max_iter=50):
    """Solve ``digamma(x) = y`` for ``x > 0``.

    Starts from Minka's guess (``exp(y) + 1/2`` for ``y >= -2.22``, else
    ``-1/(y + gamma)``) and applies Newton steps with the trigamma slope.

    Raises
    ------
    ConvergenceError
        If ``|digamma(x) - y| > tol`` after ``max_iter`` Newton steps. The
        exception carries the last iterate and residual.
    """
    y_arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y_arr)):
        raise DomainError(f"digamma_inverse: argument must be finite, got {y!r}")
    t = np.array(y_arr, ndmin=1)
    x = np.exp(np.minimum(t, 700.0)) + 0.5
    low = t < -2.22
    x[low] = -1.0 / (t[low] + EULER_GAMMA)
    residual = digamma(x) - t
    for _ in range(max_iter):
        if np.all(np.abs(residual) <= tol):
            break
        step = residual / trigamma(x)
        x_new = x - step
        # Newton on the concave psi can overshoot below zero from the right
        x = np.where(x_new > 0.0, x_new, 0.5 * x)
        residual = digamma(x) - t
    else:
        if not np.all(np.abs(residual) <= tol):
            worst = float(np.max(np.abs(residual)))
            raise ConvergenceError(
                f"digamma_inverse did not converge in {max_iter} steps "
                f"(residual {worst:.3e})",
                last_iterate=x,
                residual=worst,
            )
    # one polishing step: a residual of tol in psi is an x error of tol/trigamma(x)
    x_pol = x - residual / trigamma(x)
    ok = x_pol > 0.0
    if np.any(ok):
        res_pol = np.where(ok, digamma(np.where(ok, x_pol, x)) - t, residual)
        x = np.where(ok & (np.abs(res_pol) <= np.abs(residual)), x_pol, x)
    return _wrap(x[0] if np.ndim(y_arr) == 0 else x.reshape(y_arr.shape), y_arr)


def log_multivariate_beta(alpha):
    """``sum_k ln Gamma(alpha_k) - ln Gamma(sum_k alpha_k)``.

    ``alpha`` may be a vector of length D >= 2 or a stack of such vectors
    along the last axis.
    """
    a = _as_positive(alpha, "log_multivariate_beta")
    if a.ndim == 0 or a.shape[-1] < 2:
        raise DomainError("log_multivariate_beta: need at least 2 components")
    out = np.sum(log_gamma(a), axis=-1) - log_gamma(np.sum(a, axis=-1))
    return float(out) if np.ndim(out) == 0 else out
