"""Posterior post-processing: undo label switching with Hungarian matching,
summarize within-block geometry, embed it with weighted SMACOF, align
per-sample positions by Procrustes, and compute convergence diagnostics.

The likelihood is invariant to block relabelling and to rotation,
reflection, and translation of each block's latent space; everything here
operates inside those equivalence classes, so the per-sample likelihood is
unchanged by the transformations applied.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import BlockAssignment
from .rand import substream


@dataclass(frozen=True)
class AlignmentReference:
    """Reference memberships (one random draw) plus per-block weighted-MDS
    coordinates used as Procrustes targets."""

    gamma0: BlockAssignment
    z0_per_block: dict  # block k -> (nodes (m,), coords (m, D))


@dataclass
class DistanceSummary:
    """Per-block co-membership weights and mean within-block distances.

    nodes[k] lists (0-based) nodes with non-zero posterior membership
    probability in block k; weights count co-membership samples; distances
    hold mean Euclidean distances where the weight is positive (NaN
    elsewhere).
    """

    nodes: dict
    weights: dict
    distances: dict


def align_labels(sample_gamma, gamma0, rng=None):
    """Permutation of 1..K maximizing membership agreement with gamma0.

    Solved as a linear assignment on the label contingency table; exact ties
    between equally good permutations are broken at random by an
    infinitesimal seeded perturbation of the table.
    Returns perm with perm[a-1] = the reference label assigned to sample
    label a.
    """
    if sample_gamma.n_blocks != gamma0.n_blocks:
        raise ValueError("assignments must use the same number of blocks")
    if sample_gamma.n_nodes != gamma0.n_nodes:
        raise ValueError("assignments must cover the same nodes")
    K = sample_gamma.n_blocks
    table = np.zeros((K, K))
    np.add.at(table, (sample_gamma.zero_based(), gamma0.zero_based()), 1.0)
    if rng is not None:
        table = table + rng.random((K, K)) * (1e-7 / K)
    _, cols = linear_sum_assignment(-table)
    return cols + 1


def agreement_count(sample_gamma, gamma0, perm):
    relabelled = np.asarray(perm)[sample_gamma.zero_based()]
    return int(np.sum(relabelled == gamma0.labels))


def apply_label_permutation(chain, s, perm):
    """Relabel sample s of a chain in place according to perm (1-based)."""
    perm0 = np.asarray(perm) - 1
    inv = np.empty_like(perm0)
    inv[perm0] = np.arange(perm0.size)
    chain.gammas[s] = perm0[chain.gammas[s] - 1] + 1
    chain.betas[s] = chain.betas[s][inv]
    chain.log_sigmas[s] = chain.log_sigmas[s][inv]
    chain.pis[s] = chain.pis[s][inv]
    chain.taus[s] = chain.taus[s][np.ix_(inv, inv)]


def choose_reference(chains, seed):
    """A random post-burn-in membership draw from one of the chains."""
    rng = substream(seed, "alignment-reference")
    c = int(rng.integers(len(chains)))
    chain = chains[c]
    lo = chain.burn_in
    s = int(rng.integers(lo, chain.n_samples))
    return BlockAssignment(labels=chain.gammas[s].astype(np.int64), n_blocks=chain.n_blocks)


def align_chains(chains, gamma0, seed):
    """Permute every post-burn-in sample of every chain toward gamma0."""
    rng = substream(seed, "alignment-ties")
    for chain in chains:
        for s in range(chain.burn_in, chain.n_samples):
            g = BlockAssignment(labels=chain.gammas[s].astype(np.int64), n_blocks=chain.n_blocks)
            perm = align_labels(g, gamma0, rng=rng)
            apply_label_permutation(chain, s, perm)
    return chains


def build_distance_summary(chains):
    """Co-membership weights and mean within-block distances over all
    post-burn-in samples of the (aligned) chains."""
    if not isinstance(chains, (list, tuple)):
        chains = [chains]
    K = chains[0].n_blocks
    n = chains[0].gammas.shape[1]
    nodes, weights, distances = {}, {}, {}
    for k in range(1, K + 1):
        w = np.zeros((n, n))
        dsum = np.zeros((n, n))
        seen = np.zeros(n, dtype=bool)
        for chain in chains:
            for s in range(chain.burn_in, chain.n_samples):
                members = np.flatnonzero(chain.gammas[s] == k)
                if members.size == 0:
                    continue
                seen[members] = True
                if members.size == 1:
                    continue
                pos = chain.zs[s][members]
                d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
                ix = np.ix_(members, members)
                w[ix] += 1.0
                dsum[ix] += d
        np.fill_diagonal(w, 0.0)
        sel = np.flatnonzero(seen)
        wk = w[np.ix_(sel, sel)]
        with np.errstate(invalid="ignore"):
            dk = np.where(wk > 0, dsum[np.ix_(sel, sel)] / np.where(wk > 0, wk, 1.0), np.nan)
        nodes[k] = sel
        weights[k] = wk
        distances[k] = dk
    return DistanceSummary(nodes=nodes, weights=weights, distances=distances)


def weighted_mds(distance, weights, n_dims, max_iter=300, tol=1e-9, init=None, seed=0):
    """Weighted least-squares MDS by SMACOF stress majorization.

    Minimizes sum_{i<j} w_ij (d_ij(X) - delta_ij)^2; entries with zero
    weight (including missing deltas) are ignored.  The stress sequence is
    non-increasing; iteration stops when its relative decrease falls below
    tol.  Returns (coords, stress_trace).
    """
    delta = np.array(distance, dtype=np.float64)
    w = np.array(weights, dtype=np.float64)
    n = delta.shape[0]
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    w[~np.isfinite(delta)] = 0.0
    delta = np.where(np.isfinite(delta), delta, 0.0)
    if not np.any(w > 0):
        raise ValueError("weighted MDS needs at least one positive weight")

    if init is None:
        fill = delta[w > 0].mean()
        dfull = np.where(w > 0, delta, fill)
        np.fill_diagonal(dfull, 0.0)
        from .embedding import classical_mds

        x = classical_mds(dfull, n_dims)
        if not np.any(np.abs(x) > 1e-12):
            x = substream(seed, "smacof-init").standard_normal((n, n_dims)) * max(fill, 1.0)
    else:
        x = np.array(init, dtype=np.float64)

    v = np.diag(w.sum(axis=1)) - w
    v_pinv = np.linalg.pinv(v)

    def stress_of(coords):
        d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
        return float(np.sum(np.triu(w * (d - delta) ** 2, k=1)))

    trace = [stress_of(x)]
    for _ in range(max_iter):
        d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0, delta / np.where(d > 0, d, 1.0), 0.0)
        bmat = -w * ratio
        np.fill_diagonal(bmat, 0.0)
        np.fill_diagonal(bmat, -bmat.sum(axis=1))
        x = v_pinv @ (bmat @ x)
        trace.append(stress_of(x))
        prev, cur = trace[-2], trace[-1]
        if prev - cur < tol * max(prev, 1e-30):
            break
    return x, np.asarray(trace)


def procrustes_align(source, target):
    """Best rotation/reflection + translation of source onto target
    (no scaling), via the SVD of the centered cross-covariance."""
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape:
        raise ValueError("source and target must have matching shapes")
    if source.shape[0] < 1:
        raise ValueError("need at least one point")
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    a = (source - mu_s).T @ (target - mu_t)
    u, _, vt = np.linalg.svd(a)
    rot = u @ vt
    return (source - mu_s) @ rot + mu_t


def align_positions(chains, summary, n_dims, seed=0):
    """Procrustes-align every sample's within-block positions toward the
    weighted-MDS embedding of the mean distance matrices.

    Returns the per-block reference coordinates used as targets.
    """
    refs = {}
    for k, sel in summary.nodes.items():
        if sel.size == 0:
            refs[k] = (sel, np.zeros((0, n_dims)))
            continue
        if sel.size == 1:
            refs[k] = (sel, np.zeros((1, n_dims)))
            continue
        coords, _ = weighted_mds(summary.distances[k], summary.weights[k], n_dims,
                                 seed=seed + k)
        refs[k] = (sel, coords)
    for chain in chains:
        K = chain.n_blocks
        for s in range(chain.burn_in, chain.n_samples):
            for k in range(1, K + 1):
                sel, coords = refs[k]
                members = np.flatnonzero(chain.gammas[s] == k)
                if members.size < 1:
                    continue
                idx = np.searchsorted(sel, members)
                target = coords[idx]
                chain.zs[s][members] = procrustes_align(chain.zs[s][members], target)
    return refs


def gelman_rubin(traces):
    """Potential scale reduction factor over >= 2 equal-length scalar traces.

    Returns NaN when every chain is constant (zero within-chain variance).
    """
    traces = np.asarray(traces, dtype=np.float64)
    if traces.ndim != 2 or traces.shape[0] < 2:
        raise ValueError("need >= 2 chains of equal length")
    m, n = traces.shape
    if n < 2:
        raise ValueError("chains too short for a variance decomposition")
    means = traces.mean(axis=1)
    w = np.mean(np.var(traces, axis=1, ddof=1))
    b = n * np.var(means, ddof=1)
    if w == 0:
        return float("nan")
    var_hat = (n - 1) / n * w + b / n
    return float(np.sqrt(var_hat / w))


def membership_posterior(chains):
    """(N, K) matrix of posterior inclusion frequencies plus the per-node
    marginal posterior mode labels (1-based)."""
    if not isinstance(chains, (list, tuple)):
        chains = [chains]
    K = chains[0].n_blocks
    n = chains[0].gammas.shape[1]
    counts = np.zeros((n, K))
    for chain in chains:
        for s in range(chain.burn_in, chain.n_samples):
            counts[np.arange(n), chain.gammas[s] - 1] += 1.0
    probs = counts / counts.sum(axis=1, keepdims=True)
    modes = probs.argmax(axis=1) + 1
    return probs, modes


def diagnostics_report(chains):
    """Gelman-Rubin statistics for the scalar traces of aligned chains."""
    report = {}
    K = chains[0].n_blocks
    lo = min(c.burn_in for c in chains)
    length = min(c.n_samples for c in chains)

    def stat(name, pull):
        traces = [np.array([pull(c, s) for s in range(lo, length)]) for c in chains]
        report[name] = gelman_rubin(np.asarray(traces))

    stat("mu1", lambda c, s: c.mus[s, 0])
    stat("mu2", lambda c, s: c.mus[s, 1])
    stat("sigma_mat_11", lambda c, s: c.sigma_mats[s, 0, 0])
    stat("sigma_mat_22", lambda c, s: c.sigma_mats[s, 1, 1])
    stat("log_likelihood", lambda c, s: c.logliks[s])
    for k in range(K):
        stat(f"beta_{k + 1}", lambda c, s, k=k: c.betas[s, k])
        stat(f"log_sigma_{k + 1}", lambda c, s, k=k: c.log_sigmas[s, k])
    return report


def postprocess_chains(chains, seed=0):
    """Full pipeline: choose a reference draw, align labels, summarize
    distances, Procrustes-align positions, and assemble diagnostics.

    Mutates the chains in place (post-burn-in samples only) and returns
    (reference, distance summary, inclusion probabilities, mode labels,
    diagnostics dict).
    """
    gamma0 = choose_reference(chains, seed)
    align_chains(chains, gamma0, seed)
    summary = build_distance_summary(chains)
    n_dims = chains[0].zs.shape[2]
    refs = align_positions(chains, summary, n_dims, seed=seed)
    probs, modes = membership_posterior(chains)
    diag = diagnostics_report(chains)
    reference = AlignmentReference(gamma0=gamma0, z0_per_block=refs)
    return reference, summary, probs, modes, diag
