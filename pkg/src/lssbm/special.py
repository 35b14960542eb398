"""Scalar special functions used throughout the package.

``digamma`` and ``gammaln`` are implemented with the classic
shift-recurrence-plus-asymptotic-series scheme so that they can be called
from inside compiled kernels; accuracy is better than 1e-12 relative over
the domains used here (tests cross-check against mpmath and scipy).
The logistic helpers use branch forms that do not overflow for large |x|.
"""

import math

import numpy as np

from ._backend import njit

# Asymptotic (Stirling) series coefficients: B_{2n} / (2n (2n-1)) for gammaln
# and B_{2n} / (2n) for digamma.
_LGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_DIGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit
def gammaln(x):
    """Natural log of the gamma function for x > 0."""
    if x <= 0.0:
        return np.nan
    # Shift into the asymptotic regime: ln G(x) = ln G(x + m) - sum ln(x + i)
    shift = 0.0
    y = x
    while y < 10.0:
        shift += np.log(y)
        y += 1.0
    r = 1.0 / (y * y)
    series = 0.0
    p = 1.0 / y
    for c in _LGAMMA_COEF:
        series += c * p
        p *= r
    return (y - 0.5) * np.log(y) - y + _HALF_LOG_2PI + series - shift


@njit
def digamma(x):
    """Logarithmic derivative of the gamma function for x > 0."""
    if x <= 0.0:
        return np.nan
    # psi(x) = psi(x + m) - sum 1/(x + i)
    shift = 0.0
    y = x
    while y < 10.0:
        shift += 1.0 / y
        y += 1.0
    r = 1.0 / (y * y)
    series = 0.0
    p = r
    for c in _DIGAMMA_COEF:
        series += c * p
        p *= r
    return np.log(y) - 0.5 / y - series - shift


@njit
def trigamma(x):
    """Second derivative of gammaln, psi'(x), for x > 0."""
    if x <= 0.0:
        return np.nan
    shift = 0.0
    y = x
    while y < 10.0:
        shift += 1.0 / (y * y)
        y += 1.0
    r = 1.0 / (y * y)
    # psi'(y) ~ 1/y + 1/(2 y^2) + sum B_2n / y^(2n+1)
    series = 1.0 / y + 0.5 * r
    p = r / y
    series += (1.0 / 6.0) * p
    p *= r
    series += (-1.0 / 30.0) * p
    p *= r
    series += (1.0 / 42.0) * p
    p *= r
    series += (-1.0 / 30.0) * p
    p *= r
    series += (5.0 / 66.0) * p
    return series + shift


@njit
def expit(x):
    """Inverse logit, stable for any finite x."""
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit
def log_expit(x):
    """log(expit(x)) without overflow for large |x|."""
    if x >= 0.0:
        return -np.log1p(np.exp(-x))
    return x - np.log1p(np.exp(x))


@njit
def bernoulli_loglik(y, eta):
    """Log-mass of a Bernoulli(expit(eta)) outcome y in {0, 1}."""
    if y:
        return log_expit(eta)
    return log_expit(-eta)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@njit
def gamma_half_ratio(D):
    """Gamma((D + 1) / 2) / Gamma(D / 2) for integer D >= 1."""
    return np.exp(gammaln((D + 1.0) / 2.0) - gammaln(D / 2.0))
