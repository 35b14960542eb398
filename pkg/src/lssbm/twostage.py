"""Scalable two-stage fitting: assortative graph clustering for memberships,
then an independent variational Bayes latent-space fit inside each block.

Stage 1 offers spectral clustering (Bethe-Hessian embedding + k-means,
good under ~1,000 nodes) and label propagation (for large graphs).  Stage 2
ascends the per-block evidence lower bound in coordinate blocks: BFGS over
the intercept and position means, BFGS over the position precisions, then
the information fixed point for the intercept precision and the exact
coordinate optimum of the Gamma rate; the Gamma shape is pinned at its
closed form a = a0 + n/2.  See vb_fit for why the blocks are separated.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize

from . import kernels
from .embedding import classical_mds, subgraph_distances
from .graph import BlockAssignment, canonical_labels
from .rand import substream
from .special import logit


@dataclass(frozen=True)
class VbPriors:
    """Priors for one block: Gamma(a0, b0) on the position precision and
    N(m0, 1/t0) on the intercept."""

    a0: float = 1.0
    b0: float = 1.0
    m0: float = 0.0
    t0: float = 0.01

    def __post_init__(self):
        if min(self.a0, self.b0, self.t0) <= 0:
            raise ValueError("a0, b0, t0 must be positive")


@dataclass
class VbState:
    m: float          # intercept posterior mean (raw variational coordinate)
    t: float          # intercept posterior precision
    a: float          # Gamma shape of the position precision
    b: float          # Gamma rate of the position precision
    ell: np.ndarray   # (n, D) position means
    s: np.ndarray     # (n,) position precisions

    def validate(self):
        if self.t <= 0 or self.a <= 0 or self.b <= 0 or np.any(self.s <= 0):
            raise ValueError("t, a, b, s must all be positive")
        return self

    @property
    def n_nodes(self):
        return self.ell.shape[0]

    @property
    def D(self):
        return self.ell.shape[1]

    def eta(self, i, j):
        """Fitted tie logit of dyad (i, j) under the likelihood surrogate."""
        d2 = float(np.sum((self.ell[i] - self.ell[j]) ** 2))
        root = np.sqrt(d2 + (1.0 / self.s[i] + 1.0 / self.s[j]) * self.D)
        return self.m + 0.5 / self.t - root

    def eta_matrix(self):
        d2 = ((self.ell[:, None, :] - self.ell[None, :, :]) ** 2).sum(axis=2)
        inv = 1.0 / self.s
        root = np.sqrt(d2 + (inv[:, None] + inv[None, :]) * self.D)
        return self.m + 0.5 / self.t - root

    def intercept(self):
        """Identified maximum tie logit.

        The raw coordinate m absorbs the surrogate's uncertainty inflation
        sqrt((1/s_i + 1/s_j) D) that is present even at coincident position
        means, so the interpretable intercept subtracts the average
        zero-distance inflation (and adds back the 1/(2t) offset).
        """
        n = self.n_nodes
        if n < 2:
            return self.m
        inv = 1.0 / self.s
        pair_inflation = np.sqrt((inv[:, None] + inv[None, :]) * self.D)
        iu = np.triu_indices(n, k=1)
        return float(self.m + 0.5 / self.t - pair_inflation[iu].mean())

    def latent_scale_sq(self):
        """Posterior mean of the within-block position variance, b/(a-1)."""
        return float(self.b / (self.a - 1.0)) if self.a > 1.0 else float("nan")


# ---------------------------------------------------------------------------
# Stage 1: clustering
# ---------------------------------------------------------------------------


def bethe_hessian_matrix(adj, r=None):
    """H(r) = (r^2 - 1) I - r A + D with r = sqrt(mean degree) by default."""
    if sp.issparse(adj):
        adj = adj.tocsr()
        deg = np.asarray(adj.sum(axis=1)).ravel()
        n = adj.shape[0]
        if r is None:
            r = np.sqrt(max(deg.mean(), 1.0))
        return (r * r - 1.0) * sp.eye(n, format="csr") - r * adj + sp.diags(deg), r
    adj = np.asarray(adj, dtype=np.float64)
    deg = adj.sum(axis=1)
    if r is None:
        r = np.sqrt(max(deg.mean(), 1.0))
    h = (r * r - 1.0) * np.eye(adj.shape[0]) - r * adj + np.diag(deg)
    return h, r


def bethe_hessian_embedding(adj, n_vectors):
    """Eigenvectors of the n_vectors smallest Bethe-Hessian eigenvalues."""
    h, _ = bethe_hessian_matrix(adj)
    n = h.shape[0]
    if sp.issparse(h) and n > 500 and n_vectors < n - 1:
        vals, vecs = spla.eigsh(h, k=n_vectors, which="SA")
        order = np.argsort(vals)
        return vecs[:, order]
    h = h.toarray() if sp.issparse(h) else h
    vals, vecs = np.linalg.eigh(h)
    return vecs[:, :n_vectors]


def _kmeans_once(x, K, rng, max_iter=100):
    """One k-means++ initialized Lloyd run; returns (labels, inertia)."""
    n = x.shape[0]
    centers = np.empty((K, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            centers[k] = x[rng.integers(n)]
            continue
        centers[k] = x[np.searchsorted(np.cumsum(d2 / total), rng.random())]
        d2 = np.minimum(d2, np.sum((x - centers[k]) ** 2, axis=1))
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        for k in range(K):
            members = new_labels == k
            if np.any(members):
                centers[k] = x[members].mean(axis=0)
            else:
                # reseed an empty cluster at the farthest point
                far = int(dist.min(axis=1).argmax())
                centers[k] = x[far]
                new_labels[far] = k
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = float(((x - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans_labels(embedding, K, seed, n_restarts=10):
    """Seeded k-means++ with 10 restarts; returns 0-based labels."""
    x = np.asarray(embedding, dtype=np.float64)
    rng = np.random.default_rng(int(seed) % (2 ** 31))
    best = None
    for _ in range(n_restarts):
        labels, inertia = _kmeans_once(x, K, rng)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best[0]


def bethe_hessian_cluster(graph, K, seed=0):
    """Assortative spectral clustering of a graph into K canonical blocks."""
    if K > graph.n_nodes:
        raise ValueError(f"K={K} exceeds the {graph.n_nodes} nodes")
    if K == 1:
        return BlockAssignment(labels=np.ones(graph.n_nodes, dtype=np.int64), n_blocks=1)
    emb = bethe_hessian_embedding(graph.csr(), K)
    labels = kmeans_labels(emb, K, substream(seed, "bh-kmeans").integers(2 ** 31))
    return canonical_labels(labels)


def label_propagation(graph, seed=0, max_sweeps=100):
    """Asynchronous label propagation with random node order per sweep.

    Runs until no label changes; ties between equally frequent neighbor
    labels are broken at random.  Blocks can never straddle disconnected
    components since labels only move along edges.
    """
    rng = substream(seed, "label-prop")
    n = graph.n_nodes
    csr = graph.csr()
    indptr, indices = csr.indptr, csr.indices
    labels = np.arange(n, dtype=np.int64)
    for _ in range(max_sweeps):
        changed = False
        for i in rng.permutation(n):
            lo, hi = indptr[i], indptr[i + 1]
            if lo == hi:
                continue
            counts = {}
            for j in indices[lo:hi]:
                lab = labels[j]
                counts[lab] = counts.get(lab, 0) + 1
            best = max(counts.values())
            top = [lab for lab, c in counts.items() if c == best]
            new = top[0] if len(top) == 1 else top[rng.integers(len(top))]
            if new != labels[i]:
                labels[i] = new
                changed = True
        if not changed:
            break
    return canonical_labels(labels)


# ---------------------------------------------------------------------------
# Stage 2: per-block variational fit
# ---------------------------------------------------------------------------


def vb_elbo(state, y_block, priors, D, obs=None):
    """Evidence lower bound of one block under the factored approximation."""
    y = np.ascontiguousarray(y_block, dtype=np.uint8)
    obs = _block_obs(y.shape[0]) if obs is None else np.ascontiguousarray(obs, dtype=np.uint8)
    return float(kernels.vb_elbo(
        y, obs, state.m, state.t, state.a, state.b,
        np.ascontiguousarray(state.ell, dtype=np.float64),
        np.ascontiguousarray(state.s, dtype=np.float64),
        priors.a0, priors.b0, priors.m0, priors.t0,
    ))


def vb_gradients(state, y_block, priors, D, obs=None):
    """Analytic ELBO gradients over (m, t, a, b, ell, s)."""
    y = np.ascontiguousarray(y_block, dtype=np.uint8)
    obs = _block_obs(y.shape[0]) if obs is None else np.ascontiguousarray(obs, dtype=np.uint8)
    g_m, g_t, g_a, g_b, g_ell, g_s = kernels.vb_grads(
        y, obs, state.m, state.t, state.a, state.b,
        np.ascontiguousarray(state.ell, dtype=np.float64),
        np.ascontiguousarray(state.s, dtype=np.float64),
        priors.a0, priors.b0, priors.m0, priors.t0,
    )
    return {"m": g_m, "t": g_t, "a": g_a, "b": g_b, "ell": g_ell, "s": g_s}


def _block_obs(n):
    obs = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(obs, 0)
    return obs


def _ascend_block(negelbo, x0, rng, max_iter, label):
    """One quasi-Newton pass over a coordinate block.

    A line-search failure that made no progress restarts from a perturbed
    point (up to 3 retries); a failure after real progress is accepted as
    converged-to-tolerance.  Returns (best point, clean flag).
    """
    best_x, best_f = x0, negelbo(x0)[0]
    x_start, f_start = x0, best_f
    for attempt in range(4):
        res = minimize(negelbo, x_start, jac=True, method="BFGS",
                       options={"maxiter": max_iter, "gtol": 1e-8})
        f_res = negelbo(res.x)[0]
        if f_res < best_f:
            best_f, best_x = f_res, res.x
        if res.status == 0 or res.nit >= max_iter or f_res < f_start - 1e-10:
            return best_x, True
        x_start = best_x + 1e-4 * rng.standard_normal(best_x.shape)
        f_start = negelbo(x_start)[0]
    warnings.warn(f"{label} pass kept best-so-far after line-search retries", stacklevel=3)
    return best_x, False


def vb_fit(y_block, priors, D, max_iter=200, tol=1e-6, seed=0, obs=None, init=None,
           max_outer=25):
    """Fit one block's variational posterior.

    The Gamma shape is pinned at its closed form a = a0 + n/2.  Each outer
    round runs two quasi-Newton ascent passes (intercept + position means,
    then position precisions), followed by the information fixed point for
    the intercept precision, t = t0 + sum of fitted dyad probabilities, and
    the exact coordinate optimum of the Gamma rate,
    b = b0 + sum_i(D/s_i + ||l_i||^2) / (2n).  Rounds stop when the ELBO
    improves by less than tol (relative).

    The intercept and the position precisions are deliberately kept in
    separate ascent passes, and (t, b) out of the quasi-Newton vector: the
    likelihood surrogate leaves (m, s) and (t, b) pairs with compensating
    ridge directions along which a joint maximizer drifts indefinitely
    while the position geometry degrades.

    Returns (VbState, per-round ELBO trace, converged_flag).
    """
    y = np.ascontiguousarray(y_block, dtype=np.uint8)
    n = y.shape[0]
    if n < 1:
        raise ValueError("block must contain at least one node")
    obs_m = _block_obs(n) if obs is None else np.ascontiguousarray(obs, dtype=np.uint8)
    a_hat = priors.a0 + 0.5 * n
    iu = np.triu_indices(n, k=1)

    if init is None:
        n_edges = float(np.triu(y * obs_m, 1).sum())
        n_dyads = max(float(np.triu(obs_m, 1).sum()), 1.0)
        dens = np.clip(n_edges / n_dyads, 0.01, 0.99)
        if n > 1:
            dmat = subgraph_distances(sp.csr_matrix((y * obs_m).astype(np.float64)), np.arange(n))
            ell0 = classical_mds(dmat, D)
        else:
            ell0 = np.zeros((1, D))
        init = VbState(m=float(logit(dens)), t=1.0, a=a_hat, b=a_hat,
                       ell=ell0, s=np.ones(n))
    m, t, b = float(init.m), float(init.t), float(init.b)
    ell = np.ascontiguousarray(init.ell, dtype=np.float64)
    s = np.ascontiguousarray(init.s, dtype=np.float64)

    def elbo_at(m, t, b, ell, s):
        return float(kernels.vb_elbo(y, obs_m, m, t, a_hat, b, ell, s,
                                     priors.a0, priors.b0, priors.m0, priors.t0))

    rng = substream(seed, "vb-restarts")
    trace = [elbo_at(m, t, b, ell, s)]
    clean = True
    for _ in range(max_outer):
        def neg_geom(x, t=t, b=b, s=s):
            mm = x[0]
            el = x[1:].reshape(n, D)
            v = kernels.vb_elbo(y, obs_m, mm, t, a_hat, b, el, s,
                                priors.a0, priors.b0, priors.m0, priors.t0)
            gm, _, _, _, gel, _ = kernels.vb_grads(
                y, obs_m, mm, t, a_hat, b, el, s,
                priors.a0, priors.b0, priors.m0, priors.t0)
            return -v, -np.concatenate([[gm], gel.ravel()])

        x_geom, ok1 = _ascend_block(neg_geom, np.concatenate([[m], ell.ravel()]),
                                    rng, max_iter, "intercept/position")
        m = float(x_geom[0])
        ell = x_geom[1:].reshape(n, D)
        clean &= ok1

        if n > 1:
            def neg_prec(x, m=m, t=t, b=b, ell=ell):
                ss = np.exp(x)
                v = kernels.vb_elbo(y, obs_m, m, t, a_hat, b, ell, ss,
                                    priors.a0, priors.b0, priors.m0, priors.t0)
                _, _, _, _, _, gs = kernels.vb_grads(
                    y, obs_m, m, t, a_hat, b, ell, ss,
                    priors.a0, priors.b0, priors.m0, priors.t0)
                return -v, -gs * ss

            x_prec, ok2 = _ascend_block(neg_prec, np.log(s), rng, max_iter, "precision")
            s = np.exp(x_prec)
            clean &= ok2
            state_now = VbState(m=m, t=t, a=a_hat, b=b, ell=ell, s=s)
            eta = state_now.eta_matrix()[iu]
            mask = obs_m[iu].astype(bool)
            p = np.where(eta >= 0, 1.0 / (1.0 + np.exp(-eta)), np.exp(eta) / (1.0 + np.exp(eta)))
            t = priors.t0 + float(p[mask].sum())
        else:
            t = priors.t0
        b = priors.b0 + float(np.sum(D / s + np.sum(ell ** 2, axis=1))) / (2.0 * n)

        trace.append(elbo_at(m, t, b, ell, s))
        if abs(trace[-1] - trace[-2]) < tol * max(1.0, abs(trace[-2])):
            break

    state = VbState(m=m, t=t, a=float(a_hat), b=b, ell=ell, s=s).validate()
    return state, np.asarray(trace), clean


# ---------------------------------------------------------------------------
# The combined pipeline
# ---------------------------------------------------------------------------


@dataclass
class TwoStageFit:
    assignment: BlockAssignment
    states: list            # VbState per block (1-based block k at index k-1)
    elbo_traces: list
    tau_hat: np.ndarray     # (K, K) posterior-mean between rates, diagonal 0
    block_table: list       # dicts: block, n_nodes, n_edges, density, m, t, a, b
    converged: np.ndarray   # bool per block


def _fit_block_task(args):
    y_block, priors, D, max_iter, tol, seed, max_outer = args
    return vb_fit(y_block, priors, D, max_iter=max_iter, tol=tol, seed=seed,
                  max_outer=max_outer)


def fit_twostage(graph, method="spectral", K=None, priors=None, D=2,
                 tie_prior=(1.0, 1.0), seed=0, max_iter=200, tol=1e-6, n_jobs=1,
                 max_outer=25):
    """Cluster, then fit each block's latent space independently.

    method "spectral" requires K; "label-propagation" infers it.  Between
    rates are conjugate posterior means under Beta(tie_prior).
    """
    priors = priors or VbPriors()
    if method == "spectral":
        if K is None:
            raise ValueError("spectral clustering needs K")
        assignment = bethe_hessian_cluster(graph, K, seed=seed)
    elif method == "label-propagation":
        assignment = label_propagation(graph, seed=seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    K = assignment.n_blocks
    labels0 = assignment.zero_based()
    csr = graph.csr()

    tasks = []
    members_by_block = []
    for k in range(K):
        members = np.flatnonzero(labels0 == k)
        members_by_block.append(members)
        y_block = np.asarray(csr[members][:, members].todense(), dtype=np.uint8)
        tasks.append((y_block, priors, D, max_iter, tol,
                      int(substream(seed, "vb-block", k).integers(2 ** 31)), max_outer))
    if n_jobs > 1 and K > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_fit_block_task, tasks))
    else:
        results = [_fit_block_task(t) for t in tasks]

    states = [r[0] for r in results]
    traces = [r[1] for r in results]
    converged = np.array([r[2] for r in results])

    # between-block conjugate posterior means
    a0, b0 = tie_prior
    edge_kl = np.zeros((K, K))
    e0 = graph.edges - 1
    glo = labels0[e0[:, 0]]
    ghi = labels0[e0[:, 1]]
    lo = np.minimum(glo, ghi)
    hi = np.maximum(glo, ghi)
    between = lo != hi
    np.add.at(edge_kl, (lo[between], hi[between]), 1.0)
    sizes = np.bincount(labels0, minlength=K).astype(np.float64)
    tau_hat = np.zeros((K, K))
    for k in range(K):
        for l in range(k + 1, K):
            trials = sizes[k] * sizes[l]
            tau_hat[k, l] = tau_hat[l, k] = (a0 + edge_kl[k, l]) / (a0 + b0 + trials)

    block_table = []
    for k in range(K):
        members = members_by_block[k]
        nk = members.size
        within = int(((lo == k) & (hi == k)).sum())
        dy = nk * (nk - 1) / 2
        sig2 = states[k].latent_scale_sq()
        block_table.append({
            "block": k + 1, "n_nodes": int(nk), "n_edges": within,
            "density": within / dy if dy else 0.0,
            "m": states[k].m, "t": states[k].t, "a": states[k].a, "b": states[k].b,
            "beta_hat": states[k].intercept(),
            "log_sigma_hat": 0.5 * np.log(sig2) if np.isfinite(sig2) and sig2 > 0 else float("nan"),
        })
    return TwoStageFit(assignment=assignment, states=states, elbo_traces=traces,
                       tau_hat=tau_hat, block_table=block_table, converged=converged)
