"""Seed-stream management and non-standard samplers.

All randomness in the package flows from a single master seed through named
substreams, so any artifact can be reproduced from its manifest.  Substream
derivation hashes the (master seed, name parts) tuple into a
``numpy.random.SeedSequence`` spawn key.
"""

import zlib

import numpy as np
from scipy.special import ndtr, ndtri

_TAIL_CUTOFF = 5.0


def _key_part(part):
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode("utf-8"))


def substream(master_seed, *parts):
    """Return a Generator for the named substream of ``master_seed``.

    Parts may be strings ("chain", "fold", ...) or integers; the same
    (seed, parts) always yields the same stream.
    """
    key = tuple(_key_part(p) for p in parts)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=key))


def trunc_norm_lower(rng, mean, sd, lower, size=None):
    """Sample N(mean, sd^2) conditioned on x >= lower.

    Uses inverse-CDF sampling for moderate truncation and an exponential
    rejection sampler (Robert 1995) when the bound is more than 5 standard
    deviations above the mean, where the CDF loses resolution.
    """
    a = (float(lower) - mean) / sd
    if size is None:
        return mean + sd * _std_trunc_lower_scalar(rng, a)
    out = np.array([_std_trunc_lower_scalar(rng, a) for _ in range(size)])
    return mean + sd * out


def trunc_norm_upper(rng, mean, sd, upper, size=None):
    """Sample N(mean, sd^2) conditioned on x <= upper (mirror of the lower case)."""
    draw = trunc_norm_lower(rng, 0.0, 1.0, (mean - float(upper)) / sd, size=size)
    return mean - sd * draw


def _std_trunc_lower_scalar(rng, a):
    if a < _TAIL_CUTOFF:
        # inverse CDF on the surviving mass
        tail = ndtr(-a)  # P(X >= a), computed in the stable tail form
        u = rng.random()
        return -ndtri(tail * (1.0 - u))
    # exponential rejection in the far tail
    while True:
        alpha = 0.5 * (a + np.sqrt(a * a + 4.0))
        x = a + rng.exponential(1.0 / alpha)
        if rng.random() <= np.exp(-0.5 * (x - alpha) ** 2):
            return x


def sample_inv_wishart(rng, scale, df):
    """Draw from InvWishart(scale, df) via a Bartlett-decomposed Wishart draw.

    The returned matrix is symmetric positive-definite; requires df > p - 1.
    """
    scale = np.asarray(scale, dtype=np.float64)
    p = scale.shape[0]
    if df <= p - 1:
        raise ValueError(f"inverse-Wishart needs df > p - 1, got df={df}, p={p}")
    # W ~ Wishart(df, scale^{-1}); then W^{-1} ~ InvWishart(scale, df)
    inv_scale = np.linalg.inv(scale)
    L = np.linalg.cholesky(inv_scale)
    A = np.zeros((p, p))
    for i in range(p):
        A[i, i] = np.sqrt(rng.chisquare(df - i))
        for j in range(i):
            A[i, j] = rng.normal()
    LA = L @ A
    W = LA @ LA.T
    out = np.linalg.inv(W)
    return 0.5 * (out + out.T)
