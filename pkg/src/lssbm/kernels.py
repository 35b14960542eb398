"""Hot inner loops for the sampler and the variational fitter.

Each kernel is written once, in explicit-loop form, and compiled with
``numba.njit`` unless ``LSSBM_NO_NUMBA=1`` selects the uncompiled NumPy
fallback (see :mod:`lssbm._backend`).  Kernels draw no randomness: callers
pass pre-drawn uniforms/normals, so chains are bit-reproducible and the two
backends agree.

Conventions: ``adj`` is the dense uint8 adjacency, ``obs`` marks observed
dyads (0 = held out, diagonal 0), ``gamma`` holds 0-based block labels, and
``log_tau``/``log_1mtau`` are elementwise logs of the between-block rates.
"""

import numpy as np

from ._backend import njit
from .special import log_expit, expit, digamma, trigamma, gammaln


@njit
def softplus(x):
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit
def graph_loglik(adj, obs, gamma, z, beta, log_tau, log_1mtau):
    """Log-likelihood of all observed dyads."""
    n = adj.shape[0]
    D = z.shape[1]
    total = 0.0
    for i in range(n):
        gi = gamma[i]
        for j in range(i + 1, n):
            if not obs[i, j]:
                continue
            if gamma[j] == gi:
                d2 = 0.0
                for t in range(D):
                    dd = z[i, t] - z[j, t]
                    d2 += dd * dd
                e = beta[gi] - np.sqrt(d2)
                total += log_expit(e) if adj[i, j] else log_expit(-e)
            else:
                if adj[i, j]:
                    total += log_tau[gi, gamma[j]]
                else:
                    total += log_1mtau[gi, gamma[j]]
    return total


@njit
def membership_weights(adj, obs, gamma, sizes, i, eps):
    """Unnormalized membership proposal weights for node i.

    lambda_k = (eps + observed ties of i into block k) / (|S_k without i| + 1).
    """
    K = sizes.shape[0]
    n = adj.shape[0]
    ties = np.zeros(K)
    for j in range(n):
        if j != i and obs[i, j] and adj[i, j]:
            ties[gamma[j]] += 1.0
    lam = np.empty(K)
    for k in range(K):
        size_k = sizes[k] - 1 if k == gamma[i] else sizes[k]
        lam[k] = (eps + ties[k]) / (size_k + 1.0)
    return lam


@njit
def membership_position_sweep(
    adj, obs, gamma, z, sizes,
    beta, sigma, log_tau, log_1mtau, log_pi,
    eps, r_z, use_positions,
    u_cat, noise, u_acc,
):
    """Sequential joint (membership, position) Metropolis pass over all nodes.

    Mutates gamma, z, sizes in place.  u_cat/u_acc are per-node uniforms and
    noise contains the per-node standard-normal position innovations.
    Returns the per-node acceptance flags.
    """
    n = adj.shape[0]
    K = beta.shape[0]
    D = z.shape[1]
    accept = np.zeros(n, dtype=np.uint8)
    lam = np.empty(K)
    ties = np.empty(K)
    tie_zsum = np.empty((K, D))
    zstar = np.empty(D)

    for i in range(n):
        gi = gamma[i]
        for k in range(K):
            ties[k] = 0.0
            for t in range(D):
                tie_zsum[k, t] = 0.0
        for j in range(n):
            if j != i and obs[i, j] and adj[i, j]:
                gj = gamma[j]
                ties[gj] += 1.0
                for t in range(D):
                    tie_zsum[gj, t] += z[j, t]
        lam_sum = 0.0
        for k in range(K):
            size_k = sizes[k] - 1 if k == gi else sizes[k]
            lam[k] = (eps + ties[k]) / (size_k + 1.0)
            lam_sum += lam[k]

        u = u_cat[i] * lam_sum
        gstar = K - 1
        cum = 0.0
        for k in range(K):
            cum += lam[k]
            if u < cum:
                gstar = k
                break

        # position proposal and the proposal-density part of the ratio
        log_ratio = np.log(lam[gi]) - np.log(lam[gstar])
        if use_positions:
            if gstar == gi:
                for t in range(D):
                    zstar[t] = z[i, t] + r_z * noise[i, t]
                # symmetric random walk: q-terms cancel
            else:
                fwd_sq = 0.0
                rev_sq = 0.0
                for t in range(D):
                    if ties[gstar] > 0.0:
                        mfwd = tie_zsum[gstar, t] / ties[gstar]
                    else:
                        mfwd = 0.0
                    step = r_z * noise[i, t]
                    zstar[t] = mfwd + step
                    fwd_sq += step * step
                    if ties[gi] > 0.0:
                        mrev = tie_zsum[gi, t] / ties[gi]
                    else:
                        mrev = 0.0
                    dd = z[i, t] - mrev
                    rev_sq += dd * dd
                log_ratio += (fwd_sq - rev_sq) / (2.0 * r_z * r_z)
            # prior on (gamma_i, Z_i)
            znew = 0.0
            zold = 0.0
            for t in range(D):
                znew += zstar[t] * zstar[t]
                zold += z[i, t] * z[i, t]
            log_ratio += log_pi[gstar] - log_pi[gi]
            log_ratio += (
                -D * np.log(sigma[gstar]) - znew / (2.0 * sigma[gstar] * sigma[gstar])
                + D * np.log(sigma[gi]) + zold / (2.0 * sigma[gi] * sigma[gi])
            )
        else:
            for t in range(D):
                zstar[t] = z[i, t]
            log_ratio += log_pi[gstar] - log_pi[gi]

        # likelihood delta over node i's observed dyads
        for j in range(n):
            if j == i or not obs[i, j]:
                continue
            gj = gamma[j]
            y = adj[i, j]
            if gj == gstar:
                d2 = 0.0
                for t in range(D):
                    dd = zstar[t] - z[j, t]
                    d2 += dd * dd
                e = beta[gstar] - np.sqrt(d2)
                log_ratio += log_expit(e) if y else log_expit(-e)
            else:
                log_ratio += log_tau[gstar, gj] if y else log_1mtau[gstar, gj]
            if gj == gi:
                d2 = 0.0
                for t in range(D):
                    dd = z[i, t] - z[j, t]
                    d2 += dd * dd
                e = beta[gi] - np.sqrt(d2)
                log_ratio -= log_expit(e) if y else log_expit(-e)
            else:
                log_ratio -= log_tau[gi, gj] if y else log_1mtau[gi, gj]

        if np.log(u_acc[i]) < log_ratio:
            sizes[gi] -= 1
            sizes[gstar] += 1
            gamma[i] = gstar
            for t in range(D):
                z[i, t] = zstar[t]
            accept[i] = 1
    return accept


@njit
def position_refresh_sweep(adj, obs, gamma, z, beta, sigma, r_z, noise, u_acc,
                           sorted_nodes, block_ptr):
    """Within-block random-walk Metropolis pass over latent positions.

    sorted_nodes/block_ptr give each block's member list (nodes grouped by
    block), so the likelihood loop touches within-block dyads only.
    """
    n = adj.shape[0]
    D = z.shape[1]
    accept = np.zeros(n, dtype=np.uint8)
    zstar = np.empty(D)
    for i in range(n):
        gi = gamma[i]
        znew = 0.0
        zold = 0.0
        for t in range(D):
            zstar[t] = z[i, t] + r_z * noise[i, t]
            znew += zstar[t] * zstar[t]
            zold += z[i, t] * z[i, t]
        s2 = sigma[gi] * sigma[gi]
        log_ratio = -(znew - zold) / (2.0 * s2)
        for idx in range(block_ptr[gi], block_ptr[gi + 1]):
            j = sorted_nodes[idx]
            if j == i or not obs[i, j]:
                continue
            y = adj[i, j]
            d2n = 0.0
            d2o = 0.0
            for t in range(D):
                dn = zstar[t] - z[j, t]
                do = z[i, t] - z[j, t]
                d2n += dn * dn
                d2o += do * do
            en = beta[gi] - np.sqrt(d2n)
            eo = beta[gi] - np.sqrt(d2o)
            if y:
                log_ratio += log_expit(en) - log_expit(eo)
            else:
                log_ratio += log_expit(-en) - log_expit(-eo)
        if np.log(u_acc[i]) < log_ratio:
            for t in range(D):
                z[i, t] = zstar[t]
            accept[i] = 1
    return accept


@njit
def block_within_loglik(adj, obs, z, beta_k, members):
    """Bernoulli log-likelihood of the observed dyads among ``members``."""
    m = members.shape[0]
    D = z.shape[1]
    total = 0.0
    for a in range(m):
        i = members[a]
        for b in range(a + 1, m):
            j = members[b]
            if not obs[i, j]:
                continue
            d2 = 0.0
            for t in range(D):
                dd = z[i, t] - z[j, t]
                d2 += dd * dd
            e = beta_k - np.sqrt(d2)
            total += log_expit(e) if adj[i, j] else log_expit(-e)
    return total


@njit
def pair_counts(adj, obs, gamma, K):
    """Observed between-block edge and dyad counts; within counts on the diagonal."""
    n = adj.shape[0]
    edges = np.zeros((K, K))
    dyads = np.zeros((K, K))
    for i in range(n):
        gi = gamma[i]
        for j in range(i + 1, n):
            if not obs[i, j]:
                continue
            gj = gamma[j]
            a, b = (gi, gj) if gi <= gj else (gj, gi)
            dyads[a, b] += 1.0
            if adj[i, j]:
                edges[a, b] += 1.0
    return edges, dyads


# ---------------------------------------------------------------------------
# Variational fitter kernels (one block at a time; n is the block size).
# ---------------------------------------------------------------------------


@njit
def vb_elbo(y, obs, m, t, a, b, ell, s, a0, b0, m0, t0):
    """Evidence lower bound for one block under the factored approximation.

    The Bernoulli term uses the first-order surrogate
    eta_ij = m + 1/(2t) - sqrt(||l_i - l_j||^2 + (1/s_i + 1/s_j) D);
    the position-prior term keeps its 1/(2n) precision scaling.
    """
    n = y.shape[0]
    D = ell.shape[1]
    lik = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if not obs[i, j]:
                continue
            d2 = 0.0
            for td in range(D):
                dd = ell[i, td] - ell[j, td]
                d2 += dd * dd
            eta = m + 0.5 / t - np.sqrt(d2 + (1.0 / s[i] + 1.0 / s[j]) * D)
            lik += (y[i, j] * eta) - softplus(eta)

    zterm = 0.0
    dg_a = digamma(a)
    logb = np.log(b)
    for i in range(n):
        ell_sq = 0.0
        for td in range(D):
            ell_sq += ell[i, td] * ell[i, td]
        zterm += 0.5 * dg_a - 0.5 * logb
        zterm += -(a / (2.0 * n * b)) * (D / s[i] + ell_sq) - 0.5 * np.log(s[i])

    kl = (
        -a * logb
        + gammaln(a)
        + (a0 - a) * (dg_a - logb)
        - (b0 - b) * (a / b)
        - 0.5 * np.log(t)
        - 0.5 * t0 * ((m - m0) * (m - m0) + 1.0 / t)
    )
    return lik + zterm + kl


@njit
def vb_grads(y, obs, m, t, a, b, ell, s, a0, b0, m0, t0):
    """Analytic ELBO gradients in the natural coordinates (m, t, a, b, l, s)."""
    n = y.shape[0]
    D = ell.shape[1]
    g_ell = np.zeros((n, D))
    g_s = np.zeros(n)
    resid_sum = 0.0  # sum of (y - p) over observed dyads
    for i in range(n):
        for j in range(i + 1, n):
            if not obs[i, j]:
                continue
            d2 = 0.0
            for td in range(D):
                dd = ell[i, td] - ell[j, td]
                d2 += dd * dd
            root = np.sqrt(d2 + (1.0 / s[i] + 1.0 / s[j]) * D)
            eta = m + 0.5 / t - root
            r = y[i, j] - expit(eta)
            resid_sum += r
            for td in range(D):
                g = -(ell[i, td] - ell[j, td]) / root * r
                g_ell[i, td] += g
                g_ell[j, td] -= g
            g_s[i] += 0.5 * D / (s[i] * s[i]) / root * r
            g_s[j] += 0.5 * D / (s[j] * s[j]) / root * r

    sum_shrink = 0.0  # sum_i (D / s_i + ||l_i||^2)
    for i in range(n):
        ell_sq = 0.0
        for td in range(D):
            ell_sq += ell[i, td] * ell[i, td]
            g_ell[i, td] += -(a / (n * b)) * ell[i, td]
        sum_shrink += D / s[i] + ell_sq
        g_s[i] += a * D / (2.0 * n * b * s[i] * s[i]) - 0.5 / s[i]

    g_m = resid_sum - t0 * (m - m0)
    g_t = (t0 - resid_sum) / (2.0 * t * t) - 0.5 / t
    g_a = trigamma(a) * (a0 + 0.5 * n - a) - (b0 + sum_shrink / (2.0 * n)) / b + 1.0
    g_b = -(a0 + 0.5 * n) / b + (a * b0 + a * sum_shrink / (2.0 * n)) / (b * b)
    return g_m, g_t, g_a, g_b, g_ell, g_s
