"""Multiresolution network models: latent spaces within blocks, block-pair
Bernoulli rates between them; MCMC and two-stage variational fitting."""

__version__ = "0.1.0"

from ._backend import NUMBA_ENABLED, backend_name
from .graph import (
    BlockAssignment,
    BlockView,
    DyadMask,
    Graph,
    block_view,
    canonical_labels,
    degree,
    load_edgelist,
    make_folds,
    save_edgelist,
)
from .model import (
    BetweenParams,
    BlockParams,
    GlobalParams,
    Hyperparams,
    LatentPositions,
    edge_prob_within,
    expected_latent_distance,
    log_likelihood,
    mu1_lower_bound,
    mu2_upper_bound,
    prior_log_density,
    sample_network,
)
from .mcmc import PosteriorChain, SamplerConfig, run_chain, run_chains
from .twostage import VbPriors, VbState, bethe_hessian_cluster, fit_twostage, label_propagation, vb_elbo, vb_fit, vb_gradients
from .selection import CvConfig, CvResult, run_cv, select_k, score_predictions
from .postprocess import (
    align_labels,
    build_distance_summary,
    gelman_rubin,
    membership_posterior,
    postprocess_chains,
    procrustes_align,
    weighted_mds,
)
from .evaluate import auprc, hpd_interval, prediction_report
