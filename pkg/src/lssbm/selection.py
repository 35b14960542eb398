"""Choosing the number of blocks by repeated ten-fold cross-validation.

Held-out dyads are imputed from observed degree fractions, a
degree-corrected blockmodel is fit on the imputed matrix by assortative
spectral clustering, and imputations are refined until the predicted
probabilities stabilize.  Predictions are scored by AUC, MSE, and MPI
(mean held-out log-likelihood), and K is chosen as the smallest value
whose mean score lands inside the 95% CI of the best K's mean.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .graph import make_folds
from .rand import substream
from .twostage import bethe_hessian_embedding, kmeans_labels

PROB_CLAMP = (1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class CvConfig:
    n_folds: int = 10
    n_repeats: int = 20
    k_min: int = 2
    k_max: int = None  # defaults to floor(N / 4)
    imputation_tol: float = 1e-5
    max_em_iters: int = 30
    seed: int = 0

    def k_grid(self, n_nodes):
        k_max = self.k_max if self.k_max is not None else n_nodes // 4
        if not (2 <= self.k_min <= k_max):
            raise ValueError(f"need 2 <= k_min <= k_max, got [{self.k_min}, {k_max}]")
        return list(range(self.k_min, k_max + 1))


@dataclass
class CvResult:
    records: list         # dicts: repeat, K, auc, mse, mpi
    summary: dict         # K -> {metric: (mean, lo, hi)}
    selected: dict        # metric -> K
    final_k: int
    k_grid: list


def impute_initial(graph, mask):
    """Initial held-out probabilities d_i * d_j from observed degree
    fractions (a node with no observed dyads gets d = 0).

    Returns an array parallel to mask.pairs_array().
    """
    pairs = mask.pairs_array()
    if pairs.shape[0] == 0:
        raise ValueError("mask holds no dyads")
    n = graph.n_nodes
    adj = graph.dense().astype(np.float64)
    obs = mask.observation_matrix().astype(np.float64)
    obs_edges = (adj * obs).sum(axis=1)
    obs_dyads = obs.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(obs_dyads > 0, obs_edges / obs_dyads, 0.0)
    return d[pairs[:, 0] - 1] * d[pairs[:, 1] - 1]


def _dcsbm_predict(y_tilde, labels0, K, pairs0):
    """Degree-corrected predictions theta_i theta_j omega for given dyads.

    theta is the node degree relative to its cluster's mean degree;
    omega is the block-pair edge density of the (imputed) matrix.
    """
    n = y_tilde.shape[0]
    deg = y_tilde.sum(axis=1)
    theta = np.ones(n)
    sizes = np.bincount(labels0, minlength=K).astype(np.float64)
    for k in range(K):
        members = labels0 == k
        mean_deg = deg[members].mean() if np.any(members) else 0.0
        if mean_deg > 0:
            theta[members] = deg[members] / mean_deg
    omega = np.zeros((K, K))
    for k in range(K):
        mk = labels0 == k
        nk = sizes[k]
        if nk >= 2:
            mass = np.triu(y_tilde[np.ix_(mk, mk)], k=1).sum()
            omega[k, k] = mass / (nk * (nk - 1) / 2.0)
        for l in range(k + 1, K):
            ml = labels0 == l
            nl = sizes[l]
            if nk and nl:
                omega[k, l] = omega[l, k] = y_tilde[np.ix_(mk, ml)].sum() / (nk * nl)
    gi = labels0[pairs0[:, 0]]
    gj = labels0[pairs0[:, 1]]
    p = theta[pairs0[:, 0]] * theta[pairs0[:, 1]] * omega[gi, gj]
    return np.clip(p, *PROB_CLAMP)


def em_spectral_fit(graph, mask, K, config, seed=0):
    """Held-out probability predictions from the EM-like imputation loop.

    Alternates spectral clustering of the imputed matrix, degree-corrected
    rate estimation, and re-imputation, until the summed squared change of
    the predictions drops below the tolerance.  Returns (probabilities
    parallel to mask.pairs_array(), info dict).
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    pairs0 = mask.pairs_array() - 1
    y_tilde = graph.dense().astype(np.float64)
    p = impute_initial(graph, mask)
    y_tilde[pairs0[:, 0], pairs0[:, 1]] = p
    y_tilde[pairs0[:, 1], pairs0[:, 0]] = p
    info = {"iters": 0, "converged": False, "effective_k": K, "degenerate": False}
    rng = substream(seed, "em-spectral", mask.fold_id)
    for it in range(config.max_em_iters):
        labels0, eff_k = _cluster_imputed(y_tilde, K, rng, info)
        p_new = _dcsbm_predict(y_tilde, labels0, eff_k, pairs0)
        delta = float(np.sum((p_new - p) ** 2))
        p = p_new
        y_tilde[pairs0[:, 0], pairs0[:, 1]] = p
        y_tilde[pairs0[:, 1], pairs0[:, 0]] = p
        info["iters"] = it + 1
        if delta < config.imputation_tol:
            info["converged"] = True
            break
    return p, info


def _cluster_imputed(y_tilde, K, rng, info):
    """Spectral clustering with the jitter-then-shrink degeneracy fallback."""
    for attempt in range(2):
        try:
            emb = bethe_hessian_embedding(y_tilde, K)
            if attempt == 1:
                emb = emb + 1e-8 * rng.standard_normal(emb.shape)
            labels0 = kmeans_labels(emb, K, int(rng.integers(2 ** 31)))
            if np.unique(labels0).size == K:
                return labels0, K
        except np.linalg.LinAlgError:
            continue
    warnings.warn(f"cluster degeneracy at K={K}; falling back to K-1", stacklevel=2)
    info["degenerate"] = True
    if K - 1 >= 1:
        labels0, eff = _cluster_imputed(y_tilde, K - 1, rng, info)
        info["effective_k"] = eff
        return labels0, eff
    return np.zeros(y_tilde.shape[0], dtype=np.int64), 1


def score_predictions(truth, probs):
    """(auc, mse, mpi) for held-out 0/1 outcomes and predicted probabilities.

    AUC is the Mann-Whitney statistic (rank-based, tie-aware); MSE the mean
    squared error; MPI the mean per-dyad log-likelihood with probabilities
    clamped away from 0/1.  AUC is NaN when only one class is present.
    """
    truth = np.asarray(truth, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if truth.shape != probs.shape or truth.size < 1:
        raise ValueError("truth and predictions must be equal-length, non-empty")
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        auc = float("nan")
    else:
        ranks = stats.rankdata(probs)
        auc = (ranks[truth == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    mse = float(np.mean((truth - probs) ** 2))
    pc = np.clip(probs, *PROB_CLAMP)
    mpi = float(np.mean(truth * np.log(pc) + (1 - truth) * np.log1p(-pc)))
    return float(auc), mse, mpi


# metric direction: +1 = larger is better
METRICS = {"auc": 1, "mse": -1, "mpi": 1}


def _repeat_task(args):
    graph, config, k_grid, repeat = args
    rng_seed = int(substream(config.seed, "cv-repeat", repeat).integers(2 ** 31))
    folds = make_folds(graph, config.n_folds, seed=rng_seed)
    adj = graph.dense()
    records = []
    preds = {k: [] for k in k_grid}
    truths = []
    for mask in folds:
        pairs0 = mask.pairs_array() - 1
        truths.append(adj[pairs0[:, 0], pairs0[:, 1]].astype(np.float64))
        for k in k_grid:
            p, _ = em_spectral_fit(graph, mask, k, config,
                                   seed=rng_seed + 7919 * k)
            preds[k].append(p)
    truth = np.concatenate(truths)
    for k in k_grid:
        auc, mse, mpi = score_predictions(truth, np.concatenate(preds[k]))
        records.append({"repeat": repeat, "K": k, "auc": auc, "mse": mse, "mpi": mpi})
    return records


def run_cv(graph, config, n_jobs=1):
    """The full repeated-CV grid; returns a CvResult."""
    k_grid = config.k_grid(graph.n_nodes)
    tasks = [(graph, config, k_grid, r) for r in range(config.n_repeats)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            batches = list(pool.map(_repeat_task, tasks))
    else:
        batches = [_repeat_task(t) for t in tasks]
    records = [rec for batch in batches for rec in batch]
    return select_k(records, k_grid)


def select_k(records, k_grid=None):
    """Apply the smallest-K-within-best-CI rule per metric and aggregate.

    The CI is mean +/- t_{0.975, n-1} * SE over repeat-level values.  The
    final K is the median of the three per-metric selections, ties broken
    downward.
    """
    if k_grid is None:
        k_grid = sorted({rec["K"] for rec in records})
    by_k = {k: {m: [] for m in METRICS} for k in k_grid}
    for rec in records:
        for m in METRICS:
            if np.isfinite(rec[m]):
                by_k[rec["K"]][m].append(rec[m])
    summary = {}
    for k in k_grid:
        summary[k] = {}
        for m in METRICS:
            vals = np.asarray(by_k[k][m])
            if vals.size < 2:
                raise ValueError("need at least 2 repeats per K for a CI")
            mean = vals.mean()
            half = stats.t.ppf(0.975, vals.size - 1) * vals.std(ddof=1) / np.sqrt(vals.size)
            summary[k][m] = (float(mean), float(mean - half), float(mean + half))
    selected = {}
    for m, sign in METRICS.items():
        best_k = max(k_grid, key=lambda k: sign * summary[k][m][0])
        _, lo, hi = summary[best_k][m]
        chosen = best_k
        for k in sorted(k_grid):
            if lo <= summary[k][m][0] <= hi:
                chosen = k
                break
        selected[m] = chosen
    picks = sorted(selected.values())
    final = int(picks[1])  # median of three, ties resolve downward
    return CvResult(records=records, summary=summary, selected=selected,
                    final_k=final, k_grid=list(k_grid))
