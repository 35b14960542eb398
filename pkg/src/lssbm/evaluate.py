"""Held-out prediction and evaluation: posterior-mean dyad probabilities,
precision-recall areas with per-category breakdown, and posterior interval
summaries for reporting."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .selection import score_predictions


@dataclass
class PredictionReport:
    pairs: np.ndarray        # (M, 2) held-out dyads, 1-based
    truth: np.ndarray        # (M,) 0/1
    probs: np.ndarray        # (M,) predictions
    category: np.ndarray     # (M,) "within" / "between" by modal memberships
    metrics: dict            # category -> {auprc, auc, mse, mpi, n, prevalence}


def chain_predictions(chains, pairs):
    """Posterior-mean tie probabilities for the given dyads.

    Each kept sample contributes expit(beta_k - distance) when the pair is
    co-membered in that sample and tau_kl otherwise; the mean is taken over
    all post-burn-in samples of all chains.
    """
    pairs0 = np.asarray(pairs, dtype=np.int64) - 1
    total = np.zeros(pairs0.shape[0])
    count = 0
    for chain in chains:
        for s in range(chain.burn_in, chain.n_samples):
            g = chain.gammas[s].astype(np.int64) - 1
            gi = g[pairs0[:, 0]]
            gj = g[pairs0[:, 1]]
            z = chain.zs[s]
            d = np.linalg.norm(z[pairs0[:, 0]] - z[pairs0[:, 1]], axis=1)
            p_within = expit(chain.betas[s][gi] - d)
            p_between = chain.taus[s][gi, gj]
            total += np.where(gi == gj, p_within, p_between)
            count += 1
    return total / count


def twostage_predictions(fit, pairs):
    """Plug-in tie probabilities from a two-stage fit.

    Within a block the fitted surrogate logit is used (position means,
    precisions, and the intercept offset); between blocks the conjugate
    posterior-mean rate.
    """
    pairs0 = np.asarray(pairs, dtype=np.int64) - 1
    labels0 = fit.assignment.zero_based()
    # map nodes to their index inside their block
    K = fit.assignment.n_blocks
    within_index = np.zeros(labels0.shape[0], dtype=np.int64)
    for k in range(K):
        members = np.flatnonzero(labels0 == k)
        within_index[members] = np.arange(members.size)
    p = np.empty(pairs0.shape[0])
    for row, (i, j) in enumerate(pairs0):
        ki, kj = labels0[i], labels0[j]
        if ki == kj:
            st = fit.states[ki]
            p[row] = expit(st.eta(within_index[i], within_index[j]))
        else:
            p[row] = fit.tau_hat[ki, kj]
    return p


def auprc(truth, scores):
    """Area under the precision-recall curve via a threshold sweep over the
    unique scores, integrated by the trapezoid rule over recall.

    The curve starts at (recall 0, precision at the strictest threshold), so
    a constant predictor scores exactly the positive-class prevalence.
    """
    truth = np.asarray(truth, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = truth.sum()
    if n_pos == 0:
        return float("nan")
    order = np.argsort(-scores, kind="stable")
    truth_sorted = truth[order]
    scores_sorted = scores[order]
    tp = np.cumsum(truth_sorted)
    n_pred = np.arange(1, truth.size + 1, dtype=np.float64)
    # threshold boundaries: last index of each unique score
    last = np.flatnonzero(np.diff(scores_sorted) != 0)
    idx = np.concatenate([last, [truth.size - 1]])
    recall = tp[idx] / n_pos
    precision = tp[idx] / n_pred[idx]
    recall = np.concatenate([[0.0], recall])
    precision = np.concatenate([[precision[0]], precision])
    return float(np.trapezoid(precision, recall))


def categorize_pairs(pairs, labels):
    """"within"/"between" tags for dyads under a 1-based labelling."""
    pairs0 = np.asarray(pairs, dtype=np.int64) - 1
    labels = np.asarray(labels)
    same = labels[pairs0[:, 0]] == labels[pairs0[:, 1]]
    return np.where(same, "within", "between")


def prediction_report(pairs, truth, probs, modal_labels):
    """Assemble per-category metrics (all / within / between)."""
    category = categorize_pairs(pairs, modal_labels)
    metrics = {}
    for name in ("all", "within", "between"):
        sel = np.ones(len(truth), dtype=bool) if name == "all" else category == name
        if not np.any(sel):
            metrics[name] = {"n": 0, "missing": True}
            continue
        t, p = np.asarray(truth, dtype=np.float64)[sel], np.asarray(probs)[sel]
        auc, mse, mpi = score_predictions(t, p)
        metrics[name] = {
            "n": int(sel.sum()),
            "prevalence": float(t.mean()),
            "auprc": auprc(t, p),
            "auc": auc,
            "mse": mse,
            "mpi": mpi,
            "missing": False,
        }
    return PredictionReport(pairs=np.asarray(pairs), truth=np.asarray(truth),
                            probs=np.asarray(probs), category=category, metrics=metrics)


def hpd_interval(samples, mass=0.95):
    """Shortest interval containing the given posterior mass (sorted sweep)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    m = max(1, int(np.ceil(mass * n)))  # points the interval must cover
    if m >= n:
        return float(x[0]), float(x[-1])
    widths = x[m - 1:] - x[: n - m + 1]
    lo = int(np.argmin(widths))
    return float(x[lo]), float(x[lo + m - 1])
