"""Metropolis-within-Gibbs sampler.

Each iteration runs, in order: (1) a joint membership/position Metropolis
pass over nodes, (2) one base plus ``n_extra_z_steps`` unsaved
position-refresh passes, (3) a Dirichlet draw for the membership weights,
(4) conjugate Beta draws for the between-block rates, (5) a bivariate
random-walk Metropolis update of each block's (beta, log sigma), (6)
component-wise truncated-normal draws of the population mean subject to the
assortativity bounds, and (7) an inverse-Wishart draw of the population
covariance.

Per-step toggles exist so degenerate variants (fixed memberships, no latent
positions, prior-only) can be run for calibration tests and the
positions-off blockmodel baseline.
"""

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph import BlockAssignment, GraphValidationError
from .model import (
    BetweenParams,
    BlockParams,
    InfeasibleBoundError,
    mu1_lower_bound,
    mu2_upper_bound,
)
from .rand import sample_inv_wishart, substream, trunc_norm_lower, trunc_norm_upper
from .special import logit
from .embedding import mds_block_init


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings; the defaults are the desk-scale configuration
    (keep every 20th of 20,000 iterations, discard the first quarter)."""

    n_iter: int = 20000
    thin: int = 20
    burn_in_fraction: float = 0.25
    n_chains: int = 4
    epsilon: float = 0.1
    r_z: float = 0.5
    a_alpha: np.ndarray = field(default_factory=lambda: np.diag([0.05, 0.05]))
    n_extra_z_steps: int = 5
    seed: int = 0
    # structural/testing toggles
    use_positions: bool = True   # False = plain blockmodel baseline (z == 0)
    sample_membership: bool = True
    sample_positions: bool = True
    sample_pi: bool = True
    sample_tau: bool = True
    sample_eta: bool = True
    sample_mu_sigma: bool = True
    likelihood_off: bool = False  # prior-only runs

    def __post_init__(self):
        if self.n_iter <= 0:
            raise ValueError("n_iter must be positive")
        if not (0.0 <= self.burn_in_fraction < 1.0):
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        a = np.asarray(self.a_alpha, dtype=np.float64)
        if a.shape != (2, 2) or np.linalg.eigvalsh(a)[0] <= 0:
            raise ValueError("a_alpha must be 2x2 SPD")
        object.__setattr__(self, "a_alpha", a)


@dataclass(frozen=True)
class ChainState:
    """One saved posterior draw."""

    gamma: BlockAssignment
    z: np.ndarray
    eta: list
    tau: BetweenParams
    pi: np.ndarray
    mu: np.ndarray
    sigma_mat: np.ndarray


@dataclass
class PosteriorChain:
    """Thinned draws of one chain, stored as stacked arrays.

    All ``floor(n_iter / thin)`` thinned states are kept; the burn-in
    fraction is recorded and applied by :meth:`kept_slice` (and by the
    post-processing stage), mirroring the keep-then-discard convention.
    """

    gammas: np.ndarray      # (S, N) 1-based labels
    zs: np.ndarray          # (S, N, D)
    betas: np.ndarray       # (S, K)
    log_sigmas: np.ndarray  # (S, K)
    taus: np.ndarray        # (S, K, K)
    pis: np.ndarray         # (S, K)
    mus: np.ndarray         # (S, 2)
    sigma_mats: np.ndarray  # (S, 2, 2)
    logliks: np.ndarray     # (S,)
    acceptance_rates: dict
    seed: int
    thin: int
    burn_in_fraction: float
    n_iter: int
    wall_time: float = 0.0

    @property
    def n_samples(self):
        return self.gammas.shape[0]

    @property
    def n_blocks(self):
        return self.betas.shape[1]

    @property
    def burn_in(self):
        return int(np.floor(self.burn_in_fraction * self.n_samples))

    def kept_slice(self):
        return slice(self.burn_in, self.n_samples)

    def state(self, s):
        K = self.n_blocks
        return ChainState(
            gamma=BlockAssignment(labels=self.gammas[s].astype(np.int64), n_blocks=K),
            z=self.zs[s],
            eta=[BlockParams(beta=float(self.betas[s, k]), log_sigma=float(self.log_sigmas[s, k]))
                 for k in range(K)],
            tau=BetweenParams(tau=self.taus[s]),
            pi=self.pis[s],
            mu=self.mus[s],
            sigma_mat=self.sigma_mats[s],
        )


def observed_graph(graph, mask):
    """Copy of the graph with held-out edges removed (initialization must
    not see masked dyads)."""
    if mask is None:
        return graph
    keep = [row for row in graph.edges.tolist() if tuple(row) not in mask]
    from .graph import Graph

    edges = np.asarray(keep, dtype=np.int64) if keep else np.zeros((0, 2), dtype=np.int64)
    return Graph(n_nodes=graph.n_nodes, edges=edges)


def initial_state(graph, K, hyper, seed, mask=None, use_positions=True):
    """Spectral memberships, per-block MDS positions, moment-matched block
    parameters, and a feasible population mean.  All quantities are computed
    from the observed (non-masked) dyads only."""
    from .twostage import bethe_hessian_cluster  # deferred: avoids cycle at import

    n = graph.n_nodes
    seen = observed_graph(graph, mask)
    if K == 1:
        labels0 = np.zeros(n, dtype=np.int64)
    else:
        assignment = bethe_hessian_cluster(seen, K, seed=seed)
        labels0 = assignment.zero_based()
    adj = graph.dense()
    obs = mask.observation_matrix() if mask is not None else _default_obs(n)
    edge_counts, dyad_counts = kernels.pair_counts(adj, obs, labels0, K)

    n_obs_dyads = max(float(np.triu(obs, 1).sum()), 1.0)
    density = max(float((adj * obs).sum() / 2.0) / n_obs_dyads, 1e-4)
    beta = np.empty(K)
    for k in range(K):
        if dyad_counts[k, k] > 0:
            d_k = edge_counts[k, k] / dyad_counts[k, k]
        else:
            d_k = density
        beta[k] = logit(np.clip(d_k, 0.01, 0.99))
    log_sigma = np.full(K, np.log(0.5))

    if use_positions:
        z = mds_block_init(seen, labels0, K, hyper.D)
    else:
        z = np.zeros((n, hyper.D))

    tau = np.full((K, K), density)
    for k in range(K):
        for l in range(k + 1, K):
            if dyad_counts[k, l] > 0:
                tau[k, l] = tau[l, k] = edge_counts[k, l] / dyad_counts[k, l]
    tau = np.clip(tau, 1e-4, 1.0 - 1e-4)
    np.fill_diagonal(tau, 0.0)

    counts = np.bincount(labels0, minlength=K).astype(np.float64)
    pi = (counts + 1.0) / (counts.sum() + K)

    mu = np.array([beta.mean(), log_sigma.mean()])
    lower = mu1_lower_bound(hyper.a0, hyper.b0, mu[1], hyper.D)
    if mu[0] < lower:
        mu[0] = lower + 1e-6
    sigma_mat = np.eye(2)
    return {
        "gamma0": labels0,
        "z": z,
        "beta": beta,
        "log_sigma": log_sigma,
        "tau": tau,
        "pi": pi,
        "mu": mu,
        "sigma_mat": sigma_mat,
    }


def _default_obs(n):
    obs = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(obs, 0)
    return obs


def gibbs_pi(gamma, upsilon0, rng, n_blocks=None):
    """Dirichlet(upsilon0 + n_1, ..., upsilon0 + n_K) draw."""
    if isinstance(gamma, BlockAssignment):
        counts = gamma.counts()
    else:
        K = n_blocks if n_blocks is not None else int(np.max(gamma)) + 1
        counts = np.bincount(np.asarray(gamma), minlength=K)
    return rng.dirichlet(upsilon0 + counts.astype(np.float64))


def gibbs_tau(graph, gamma, a0, b0, rng, mask=None):
    """Independent Beta(a0 + s_kl, b0 + observed_kl - s_kl) draws per pair."""
    labels0 = gamma.zero_based() if isinstance(gamma, BlockAssignment) else np.asarray(gamma)
    K = gamma.n_blocks if isinstance(gamma, BlockAssignment) else int(labels0.max()) + 1
    adj = graph.dense()
    obs = mask.observation_matrix() if mask is not None else _default_obs(graph.n_nodes)
    edge_counts, dyad_counts = kernels.pair_counts(adj, obs, labels0.astype(np.int64), K)
    tau = np.zeros((K, K))
    for k in range(K):
        for l in range(k + 1, K):
            s = edge_counts[k, l]
            trials = dyad_counts[k, l]
            tau[k, l] = tau[l, k] = rng.beta(a0 + s, b0 + trials - s)
    return BetweenParams(tau=tau) if K > 1 else BetweenParams(tau=np.zeros((1, 1)))


def update_mu(mu, alpha_bar, sigma_mat, hyper, rng):
    """Component-wise truncated-normal draws of (mu1, mu2).

    The full conditional is N(m_tilde, Sigma / (K + s0)) with
    m_tilde = (K alpha_bar + s0 m0) / (K + s0); mu1 is truncated below at
    its assortativity bound given mu2, and mu2 above at the inverse bound.
    K is inferred from the caller via alpha_bar's weight (passed as a pair).
    """
    K, abar = alpha_bar
    m_tilde = (K * abar + hyper.s0 * hyper.m0) / (K + hyper.s0)
    cov = sigma_mat / (K + hyper.s0)
    sd1, sd2 = np.sqrt(cov[0, 0]), np.sqrt(cov[1, 1])
    rho = cov[0, 1] / (sd1 * sd2)
    mu = np.array(mu, dtype=np.float64)

    lower = mu1_lower_bound(hyper.a0, hyper.b0, mu[1], hyper.D)
    cond_mean = m_tilde[0] + (sd1 / sd2) * rho * (mu[1] - m_tilde[1])
    cond_sd = np.sqrt(max(1.0 - rho ** 2, 1e-12)) * sd1
    mu[0] = trunc_norm_lower(rng, cond_mean, cond_sd, lower)

    try:
        upper = mu2_upper_bound(hyper.a0, hyper.b0, mu[0], hyper.D)
    except InfeasibleBoundError:
        warnings.warn("mu2 bound infeasible; keeping current mu2", stacklevel=2)
        return mu
    cond_mean = m_tilde[1] + (sd2 / sd1) * rho * (mu[0] - m_tilde[0])
    cond_sd = np.sqrt(max(1.0 - rho ** 2, 1e-12)) * sd2
    mu[1] = trunc_norm_upper(rng, cond_mean, cond_sd, upper)
    return mu


def gibbs_sigma_mat(alpha, hyper, rng):
    """InvWishart(Psi0 + S_alpha + (K s0/(K+s0))(abar-m0)(abar-m0)^T, K + nu0)."""
    alpha = np.asarray(alpha, dtype=np.float64).reshape(-1, 2)
    K = alpha.shape[0]
    abar = alpha.mean(axis=0)
    centered = alpha - abar
    s_alpha = centered.T @ centered
    dev = (abar - hyper.m0).reshape(2, 1)
    scale = hyper.psi0 + s_alpha + (K * hyper.s0 / (K + hyper.s0)) * (dev @ dev.T)
    scale = 0.5 * (scale + scale.T)
    if np.linalg.eigvalsh(scale)[0] <= 0:
        warnings.warn("jittering non-SPD inverse-Wishart scale", stacklevel=2)
        scale = scale + 1e-10 * np.eye(2)
    return sample_inv_wishart(rng, scale, K + hyper.nu0)


def eta_log_ratio(adj, obs, gamma0, z, block, alpha_cur, alpha_star, mu, sigma_mat,
                  D, use_positions=True):
    """Log Metropolis ratio of the per-block (beta, log sigma) update.

    Three factor groups: within-block Bernoulli terms at the two intercepts,
    the latent-position normal prior at the two scales, and the bivariate
    normal population density ratio.
    """
    inv_sig = np.linalg.inv(sigma_mat)
    logdet = np.linalg.slogdet(sigma_mat)[1]

    def log_n2(a):
        d = np.asarray(a, dtype=np.float64) - mu
        return -0.5 * (d @ inv_sig @ d) - 0.5 * logdet

    members = np.flatnonzero(np.asarray(gamma0) == block)
    log_ratio = log_n2(alpha_star) - log_n2(alpha_cur)
    log_ratio += kernels.block_within_loglik(adj, obs, z, alpha_star[0], members)
    log_ratio -= kernels.block_within_loglik(adj, obs, z, alpha_cur[0], members)
    if use_positions:
        n_k = members.size
        if n_k:
            zsq = float(np.sum(z[members] ** 2))
            s_star = np.exp(alpha_star[1])
            s_cur = np.exp(alpha_cur[1])
            log_ratio += (
                -n_k * D * np.log(s_star) - zsq / (2.0 * s_star ** 2)
                + n_k * D * np.log(s_cur) + zsq / (2.0 * s_cur ** 2)
            )
    return float(log_ratio)


def membership_proposal_weights(graph, gamma, node, epsilon, mask=None):
    """Normalized membership proposal probabilities for a 1-based node."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    labels0 = gamma.zero_based()
    adj = graph.dense()
    obs = mask.observation_matrix() if mask is not None else _default_obs(graph.n_nodes)
    sizes = np.bincount(labels0, minlength=gamma.n_blocks).astype(np.int64)
    lam = kernels.membership_weights(adj, obs, labels0.astype(np.int64), sizes, node - 1, epsilon)
    return lam / lam.sum()


class _Runner:
    """Mutable sampler state for one chain."""

    def __init__(self, graph, K, hyper, config, seed, init=None, mask=None):
        if K < 1:
            raise GraphValidationError("K must be at least 1")
        self.graph = graph
        self.K = K
        self.hyper = hyper
        self.config = config
        self.rng = substream(seed, "chain")
        self.adj = np.ascontiguousarray(graph.dense())
        obs = mask.observation_matrix() if mask is not None else _default_obs(graph.n_nodes)
        if config.likelihood_off:
            obs = np.zeros_like(obs)
        self.obs = np.ascontiguousarray(obs)

        state = init if init is not None else initial_state(
            graph, K, hyper, seed, mask=mask, use_positions=config.use_positions
        )
        self.gamma0 = np.ascontiguousarray(state["gamma0"], dtype=np.int64)
        self.z = np.ascontiguousarray(state["z"], dtype=np.float64)
        self.beta = np.asarray(state["beta"], dtype=np.float64).copy()
        self.log_sigma = np.asarray(state["log_sigma"], dtype=np.float64).copy()
        self.tau = np.asarray(state["tau"], dtype=np.float64).copy()
        self.pi = np.asarray(state["pi"], dtype=np.float64).copy()
        self.mu = np.asarray(state["mu"], dtype=np.float64).copy()
        self.sigma_mat = np.asarray(state["sigma_mat"], dtype=np.float64).copy()
        self.sizes = np.bincount(self.gamma0, minlength=K).astype(np.int64)
        self.chol_a = np.linalg.cholesky(config.a_alpha)
        self._refresh_member_lists()
        self.accept = {"membership_position": [0, 0], "position": [0, 0], "eta": [0, 0]}
        n = graph.n_nodes
        # observed edge/held-out pair index arrays for the tau update
        iu, ju = np.nonzero(np.triu(self.adj, k=1))
        keep = self.obs[iu, ju].astype(bool)
        self.obs_edges = np.column_stack([iu[keep], ju[keep]])
        hi, hj = np.nonzero(np.triu(self.obs == 0, k=1))
        self.held_pairs = np.column_stack([hi, hj])

    # -- individual steps -------------------------------------------------

    def step_membership(self):
        n = self.graph.n_nodes
        cfg = self.config
        u_cat = self.rng.random(n)
        noise = self.rng.standard_normal((n, self.hyper.D))
        u_acc = self.rng.random(n)
        with np.errstate(divide="ignore"):
            log_tau = np.log(self.tau)
            log_1mtau = np.log1p(-self.tau)
            log_pi = np.log(self.pi)
        acc = kernels.membership_position_sweep(
            self.adj, self.obs, self.gamma0, self.z, self.sizes,
            self.beta, np.exp(self.log_sigma), log_tau, log_1mtau, log_pi,
            cfg.epsilon, cfg.r_z, cfg.use_positions,
            u_cat, noise, u_acc,
        )
        self.accept["membership_position"][0] += int(acc.sum())
        self.accept["membership_position"][1] += n
        return acc

    def _refresh_member_lists(self):
        self.sorted_nodes = np.argsort(self.gamma0, kind="stable")
        counts = np.bincount(self.gamma0, minlength=self.K)
        self.block_ptr = np.zeros(self.K + 1, dtype=np.int64)
        np.cumsum(counts, out=self.block_ptr[1:])

    def step_positions(self, n_sweeps):
        n = self.graph.n_nodes
        sigma = np.exp(self.log_sigma)
        for _ in range(n_sweeps):
            noise = self.rng.standard_normal((n, self.hyper.D))
            u_acc = self.rng.random(n)
            acc = kernels.position_refresh_sweep(
                self.adj, self.obs, self.gamma0, self.z, self.beta, sigma,
                self.config.r_z, noise, u_acc, self.sorted_nodes, self.block_ptr,
            )
            self.accept["position"][0] += int(acc.sum())
            self.accept["position"][1] += n

    def step_pi(self):
        counts = np.bincount(self.gamma0, minlength=self.K).astype(np.float64)
        self.pi = self.rng.dirichlet(self.hyper.upsilon0 + counts)

    def step_tau(self):
        K = self.K
        if K < 2:
            return
        s = np.zeros((K, K))
        ge = self.gamma0[self.obs_edges]
        lo = np.minimum(ge[:, 0], ge[:, 1])
        hi = np.maximum(ge[:, 0], ge[:, 1])
        np.add.at(s, (lo, hi), 1.0)
        nk = self.sizes.astype(np.float64)
        trials = np.outer(nk, nk)
        if self.held_pairs.size:
            gh = self.gamma0[self.held_pairs]
            hlo = np.minimum(gh[:, 0], gh[:, 1])
            hhi = np.maximum(gh[:, 0], gh[:, 1])
            held = np.zeros((K, K))
            np.add.at(held, (hlo, hhi), 1.0)
        else:
            held = np.zeros((K, K))
        for k in range(K):
            for l in range(k + 1, K):
                n_obs = trials[k, l] - held[k, l] - held[l, k]
                draw = self.rng.beta(self.hyper.a0 + s[k, l], self.hyper.b0 + n_obs - s[k, l])
                self.tau[k, l] = self.tau[l, k] = draw

    def step_eta(self):
        cfg = self.config
        xi = self.rng.standard_normal((self.K, 2))
        u = self.rng.random(self.K)
        for k in range(self.K):
            alpha_cur = np.array([self.beta[k], self.log_sigma[k]])
            alpha_star = alpha_cur + self.chol_a @ xi[k]
            log_ratio = eta_log_ratio(
                self.adj, self.obs, self.gamma0, self.z, k, alpha_cur, alpha_star,
                self.mu, self.sigma_mat, self.hyper.D,
                use_positions=cfg.use_positions,
            )
            if np.log(u[k]) < log_ratio:
                self.beta[k] = alpha_star[0]
                self.log_sigma[k] = alpha_star[1]
                self.accept["eta"][0] += 1
            self.accept["eta"][1] += 1

    def step_mu(self):
        alpha = np.column_stack([self.beta, self.log_sigma])
        self.mu = update_mu(self.mu, (self.K, alpha.mean(axis=0)), self.sigma_mat,
                            self.hyper, self.rng)

    def step_sigma_mat(self):
        alpha = np.column_stack([self.beta, self.log_sigma])
        self.sigma_mat = gibbs_sigma_mat(alpha, self.hyper, self.rng)

    def loglik(self):
        with np.errstate(divide="ignore"):
            log_tau = np.log(self.tau)
            log_1mtau = np.log1p(-self.tau)
        return float(kernels.graph_loglik(
            self.adj, self.obs, self.gamma0, self.z, self.beta, log_tau, log_1mtau))

    def iterate(self):
        cfg = self.config
        if cfg.sample_membership:
            self.step_membership()
        self._refresh_member_lists()
        if cfg.sample_positions and cfg.use_positions:
            self.step_positions(1 + cfg.n_extra_z_steps)
        if cfg.sample_pi:
            self.step_pi()
        if cfg.sample_tau:
            self.step_tau()
        if cfg.sample_eta:
            self.step_eta()
        if cfg.sample_mu_sigma:
            self.step_mu()
            self.step_sigma_mat()


def run_chain(graph, K, hyper, config, seed=None, init=None, mask=None):
    """Run one chain; fully deterministic under the seed."""
    t0 = time.time()
    seed = config.seed if seed is None else seed
    runner = _Runner(graph, K, hyper, config, seed, init=init, mask=mask)
    n, D = graph.n_nodes, hyper.D
    n_save = config.n_iter // config.thin
    gammas = np.empty((n_save, n), dtype=np.int16)
    zs = np.empty((n_save, n, D))
    betas = np.empty((n_save, K))
    log_sigmas = np.empty((n_save, K))
    taus = np.empty((n_save, K, K))
    pis = np.empty((n_save, K))
    mus = np.empty((n_save, 2))
    sigma_mats = np.empty((n_save, 2, 2))
    logliks = np.empty(n_save)

    s = 0
    for it in range(config.n_iter):
        runner.iterate()
        if (it + 1) % config.thin == 0 and s < n_save:
            gammas[s] = runner.gamma0 + 1
            zs[s] = runner.z
            betas[s] = runner.beta
            log_sigmas[s] = runner.log_sigma
            taus[s] = runner.tau
            pis[s] = runner.pi
            mus[s] = runner.mu
            sigma_mats[s] = runner.sigma_mat
            logliks[s] = runner.loglik()
            s += 1

    rates = {
        name: (cnt / tot if tot else np.nan)
        for name, (cnt, tot) in runner.accept.items()
    }
    return PosteriorChain(
        gammas=gammas, zs=zs, betas=betas, log_sigmas=log_sigmas, taus=taus,
        pis=pis, mus=mus, sigma_mats=sigma_mats, logliks=logliks,
        acceptance_rates=rates, seed=seed, thin=config.thin,
        burn_in_fraction=config.burn_in_fraction, n_iter=config.n_iter,
        wall_time=time.time() - t0,
    )


def _chain_task(args):
    graph, K, hyper, config, seed, init, mask = args
    return run_chain(graph, K, hyper, config, seed=seed, init=init, mask=mask)


def _fmt(v):
    """Plain repr of a numeric value for CSV output."""
    return repr(float(v))


def chain_field_names(n, K, D):
    """Flattened per-state field names, in serialization order."""
    names = [f"gamma_{i}" for i in range(1, n + 1)]
    names += [f"z_{i}_{d}" for i in range(1, n + 1) for d in range(1, D + 1)]
    names += [f"beta_{k}" for k in range(1, K + 1)]
    names += [f"log_sigma_{k}" for k in range(1, K + 1)]
    names += [f"tau_{k}_{l}" for k in range(1, K + 1) for l in range(k + 1, K + 1)]
    names += [f"pi_{k}" for k in range(1, K + 1)]
    names += ["mu_1", "mu_2", "sigma_mat_11", "sigma_mat_12", "sigma_mat_22"]
    names += ["log_likelihood"]
    return names


def write_chain(chain, path):
    """One saved state per line (CSV) with a header row naming every field."""
    S, n = chain.gammas.shape
    D = chain.zs.shape[2]
    K = chain.n_blocks
    iu = np.triu_indices(K, k=1)
    with open(path, "w") as fh:
        fh.write(",".join(chain_field_names(n, K, D)) + "\n")
        for s in range(S):
            row = np.concatenate([
                chain.gammas[s].astype(np.float64),
                chain.zs[s].ravel(),
                chain.betas[s],
                chain.log_sigmas[s],
                chain.taus[s][iu],
                chain.pis[s],
                chain.mus[s],
                [chain.sigma_mats[s, 0, 0], chain.sigma_mats[s, 0, 1],
                 chain.sigma_mats[s, 1, 1]],
                [chain.logliks[s]],
            ])
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def chain_manifest(chain, n, D):
    return {
        "n_nodes": n,
        "n_blocks": chain.n_blocks,
        "latent_dim": D,
        "n_iter": chain.n_iter,
        "thin": chain.thin,
        "burn_in_fraction": chain.burn_in_fraction,
        "seed": chain.seed,
        "acceptance_rates": chain.acceptance_rates,
        "wall_time": chain.wall_time,
        "fields": chain_field_names(n, chain.n_blocks, D),
    }


def read_chain(path, manifest):
    """Inverse of write_chain, given the chain's manifest dict."""
    n, K, D = manifest["n_nodes"], manifest["n_blocks"], manifest["latent_dim"]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    S = data.shape[0]
    pos = 0

    def take(count):
        nonlocal pos
        block = data[:, pos:pos + count]
        pos += count
        return block

    gammas = take(n).astype(np.int16)
    zs = take(n * D).reshape(S, n, D)
    betas = take(K)
    log_sigmas = take(K)
    n_pairs = K * (K - 1) // 2
    tau_flat = take(n_pairs)
    taus = np.zeros((S, K, K))
    iu = np.triu_indices(K, k=1)
    for s in range(S):
        taus[s][iu] = tau_flat[s]
        taus[s] += taus[s].T
    pis = take(K)
    mus = take(2)
    sig = take(3)
    sigma_mats = np.zeros((S, 2, 2))
    sigma_mats[:, 0, 0] = sig[:, 0]
    sigma_mats[:, 0, 1] = sigma_mats[:, 1, 0] = sig[:, 1]
    sigma_mats[:, 1, 1] = sig[:, 2]
    logliks = take(1).ravel()
    return PosteriorChain(
        gammas=gammas, zs=zs, betas=betas, log_sigmas=log_sigmas, taus=taus,
        pis=pis, mus=mus, sigma_mats=sigma_mats, logliks=logliks,
        acceptance_rates=manifest.get("acceptance_rates", {}),
        seed=manifest["seed"], thin=manifest["thin"],
        burn_in_fraction=manifest["burn_in_fraction"], n_iter=manifest["n_iter"],
    )


def run_chains(graph, K, hyper, config, mask=None, n_jobs=1):
    """Run ``config.n_chains`` chains on substreams of the master seed,
    merged deterministically by chain index."""
    seeds = [int(substream(config.seed, "chain-seed", c).integers(2 ** 31)) for c in range(config.n_chains)]
    tasks = [(graph, K, hyper, config, sd, None, mask) for sd in seeds]
    if n_jobs > 1 and config.n_chains > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_chain_task, tasks))
    return [_chain_task(t) for t in tasks]
