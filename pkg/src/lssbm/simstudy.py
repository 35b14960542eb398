"""Simulation-study harness: generate networks from the five-block
reference configuration, hold out dyads, fit the latent-space model and
the positions-off blockmodel baseline, and compare held-out AUPRC."""

from dataclasses import dataclass

import numpy as np

from .evaluate import auprc, categorize_pairs, chain_predictions
from .graph import BlockAssignment, DyadMask, all_dyads
from .mcmc import SamplerConfig, run_chain
from .model import BetweenParams, BlockParams, Hyperparams, default_tie_prior, sample_network
from .rand import substream

# Reference generative configuration: 300 nodes in five equal blocks,
# uniform 0.3 between-block rates, heterogeneous within-block spaces.
REF_N = 300
REF_BETA = (0.6, 2.0, 2.1, 4.0, 4.0)
REF_SIGMA = (0.4, 0.8, 1.2, 1.6, 2.0)
REF_TAU = 0.3


def reference_truth(n_nodes=REF_N, n_blocks=5):
    """(gamma, eta, tau) of the reference configuration."""
    size = n_nodes // n_blocks
    labels = np.repeat(np.arange(1, n_blocks + 1), size)
    gamma = BlockAssignment(labels=labels, n_blocks=n_blocks)
    eta = [BlockParams(beta=REF_BETA[k], log_sigma=float(np.log(REF_SIGMA[k])))
           for k in range(n_blocks)]
    tau = BetweenParams(tau=np.full((n_blocks, n_blocks), REF_TAU))
    return gamma, eta, tau


def simulate_reference(seed, n_nodes=REF_N, D=2):
    """One draw from the reference configuration."""
    gamma, eta, tau = reference_truth(n_nodes)
    hyper = Hyperparams(D=D)
    graph, z, eta_out, tau_out = sample_network(gamma, hyper, seed=seed, eta=eta, tau=tau)
    return graph, gamma, z, eta_out, tau_out


def holdout_mask(graph, fraction, seed):
    """A single mask holding out the given fraction of dyads."""
    dyads = all_dyads(graph.n_nodes)
    rng = substream(seed, "holdout")
    m = max(1, int(round(fraction * dyads.shape[0])))
    rows = rng.choice(dyads.shape[0], size=m, replace=False)
    return DyadMask.from_pairs(dyads[rows], fold_id=0, n_nodes=graph.n_nodes)


@dataclass
class ReplicateResult:
    seed: int
    auprc_ls: dict
    auprc_sbm: dict
    relative: dict            # category -> AUPRC_LS / AUPRC_SBM


def run_replicate(seed, n_iter=20000, n_chains=4, thin=20, holdout=0.10,
                  n_nodes=REF_N, D=2):
    """Simulate, fit both engines on the observed 90%, and score the rest.

    Dyad categories (within/between) come from the true block structure.
    """
    graph, gamma_true, _, _, _ = simulate_reference(substream(seed, "sim").integers(2 ** 31),
                                                    n_nodes=n_nodes, D=D)
    mask = holdout_mask(graph, holdout, substream(seed, "mask").integers(2 ** 31))
    pairs = mask.pairs_array()
    adj = graph.dense()
    truth = adj[pairs[:, 0] - 1, pairs[:, 1] - 1].astype(np.float64)
    category = categorize_pairs(pairs, gamma_true.labels)

    a0, b0 = default_tie_prior(graph.density)
    hyper = Hyperparams(a0=a0, b0=b0, D=D)
    K = gamma_true.n_blocks

    def fit(engine_positions, tag):
        chains = []
        for c in range(n_chains):
            cfg = SamplerConfig(n_iter=n_iter, thin=thin, n_chains=1,
                                use_positions=engine_positions, seed=seed)
            chain_seed = int(substream(seed, "chain-seed", tag, c).integers(2 ** 31))
            chains.append(run_chain(graph, K, hyper, cfg, seed=chain_seed, mask=mask))
        return chains

    chains_ls = fit(True, "ls")
    p_ls = chain_predictions(chains_ls, pairs)
    del chains_ls
    chains_sbm = fit(False, "sbm")
    p_sbm = chain_predictions(chains_sbm, pairs)
    del chains_sbm

    res_ls, res_sbm, rel = {}, {}, {}
    for name in ("all", "within", "between"):
        sel = np.ones(truth.size, dtype=bool) if name == "all" else category == name
        res_ls[name] = auprc(truth[sel], p_ls[sel])
        res_sbm[name] = auprc(truth[sel], p_sbm[sel])
        rel[name] = res_ls[name] / res_sbm[name]
    return ReplicateResult(seed=seed, auprc_ls=res_ls, auprc_sbm=res_sbm, relative=rel)
