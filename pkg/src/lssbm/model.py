"""The probability model: within-block latent-distance ties, between-block
Erdos-Renyi ties, and the hierarchical priors with the assortativity
restriction on the population mean.

Blocks k carry parameters eta_k = (beta_k, log sigma_k): beta_k is the
maximum within-block tie logit (attained at coincident latent positions)
and sigma_k scales the spherical normal latent positions.  Between blocks
k != l every dyad is Bernoulli(tau_kl).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph import Graph, BlockAssignment, GraphValidationError
from .rand import substream
from .special import digamma, expit, gammaln, gamma_half_ratio, logit


class InfeasibleBoundError(ValueError):
    """The mu2 upper bound is undefined: mu1 <= psi(a0) - psi(b0)."""


@dataclass(frozen=True)
class BlockParams:
    """Within-block random effect (beta, log sigma)."""

    beta: float
    log_sigma: float

    @property
    def sigma(self):
        return float(np.exp(self.log_sigma))


@dataclass(frozen=True)
class LatentPositions:
    z: np.ndarray  # (n_nodes, D)

    @property
    def D(self):
        return self.z.shape[1]


@dataclass(frozen=True)
class BetweenParams:
    """Symmetric K x K tie-probability matrix; the diagonal is unused."""

    tau: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        off = ~np.eye(tau.shape[0], dtype=bool)
        if tau.shape[0] != tau.shape[1]:
            raise GraphValidationError("tau must be square")
        if not np.allclose(tau, tau.T):
            raise GraphValidationError("tau must be symmetric")
        if tau.shape[0] > 1 and (np.any(tau[off] <= 0) or np.any(tau[off] >= 1)):
            raise GraphValidationError("off-diagonal tau entries must lie in (0, 1)")
        object.__setattr__(self, "tau", tau)

    @property
    def n_blocks(self):
        return self.tau.shape[0]


@dataclass(frozen=True)
class GlobalParams:
    pi: np.ndarray  # simplex over blocks
    mu: np.ndarray  # population mean of (beta, log sigma)
    sigma_mat: np.ndarray  # 2x2 SPD population covariance

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        mu = np.asarray(self.mu, dtype=np.float64)
        sm = np.asarray(self.sigma_mat, dtype=np.float64)
        if not np.isclose(pi.sum(), 1.0):
            raise GraphValidationError("pi must sum to 1")
        if mu.shape != (2,):
            raise GraphValidationError("mu must be a 2-vector")
        if sm.shape != (2, 2) or not np.allclose(sm, sm.T) or np.linalg.eigvalsh(sm)[0] <= 0:
            raise GraphValidationError("sigma_mat must be 2x2 SPD")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma_mat", sm)


@dataclass(frozen=True)
class Hyperparams:
    """Fixed hyperparameters; defaults are the package-wide weakly
    informative choices (D = 2 latent dimensions throughout)."""

    a0: float = 1.0
    b0: float = 1.0
    m0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    s0: float = 1.0
    psi0: np.ndarray = field(default_factory=lambda: np.eye(2))
    nu0: float = 4.0
    upsilon0: float = 1.0
    D: int = 2

    def __post_init__(self):
        if self.a0 <= 0 or self.b0 <= 0 or self.s0 <= 0 or self.upsilon0 <= 0:
            raise GraphValidationError("a0, b0, s0, upsilon0 must be positive")
        if self.nu0 <= 1:
            raise GraphValidationError("nu0 must exceed 1")
        if self.D < 1:
            raise GraphValidationError("D must be at least 1")
        object.__setattr__(self, "m0", np.asarray(self.m0, dtype=np.float64))
        object.__setattr__(self, "psi0", np.asarray(self.psi0, dtype=np.float64))


def default_tie_prior(density, b0=1.0, max_mean=0.91):
    """(a0, b0) with the Beta mean pinned at 10x the observed density.

    b0 is fixed (default 1) and a0 solves a0/(a0+b0) = 10*density, clamped so
    a0 stays positive and finite for very dense graphs.
    """
    target = min(max(10.0 * float(density), 1e-4), max_mean)
    a0 = b0 * target / (1.0 - target)
    return max(a0, 1e-3), b0


def edge_prob_within(beta, z_i, z_j):
    """P(tie) = expit(beta - ||z_i - z_j||) for two nodes of the same block."""
    d = float(np.linalg.norm(np.asarray(z_i, dtype=np.float64) - np.asarray(z_j, dtype=np.float64)))
    return expit(beta - d)


def _eta_arrays(eta):
    if isinstance(eta, (list, tuple)) and len(eta) and isinstance(eta[0], BlockParams):
        beta = np.array([e.beta for e in eta], dtype=np.float64)
        log_sigma = np.array([e.log_sigma for e in eta], dtype=np.float64)
        return beta, log_sigma
    beta, log_sigma = eta
    return np.asarray(beta, dtype=np.float64), np.asarray(log_sigma, dtype=np.float64)


def log_likelihood(graph, gamma, z, eta, tau, mask=None):
    """Log-probability of the observed dyads given all latent quantities.

    Decomposes additively over within-block and between-block-pair terms;
    dyads in ``mask`` are excluded.
    """
    beta, _ = _eta_arrays(eta)
    tau_mat = tau.tau if isinstance(tau, BetweenParams) else np.asarray(tau, dtype=np.float64)
    off = ~np.eye(tau_mat.shape[0], dtype=bool)
    if tau_mat.shape[0] > 1 and (np.any(tau_mat[off] <= 0) or np.any(tau_mat[off] >= 1)):
        raise GraphValidationError("tau entries must lie strictly in (0, 1)")
    zmat = z.z if isinstance(z, LatentPositions) else np.asarray(z, dtype=np.float64)
    adj = graph.dense()
    obs = mask.observation_matrix() if mask is not None else _full_obs(graph.n_nodes)
    labels0 = gamma.zero_based() if isinstance(gamma, BlockAssignment) else np.asarray(gamma) - 1
    with np.errstate(divide="ignore"):
        log_tau = np.log(tau_mat)
        log_1mtau = np.log1p(-tau_mat)
    return float(
        kernels.graph_loglik(
            adj, obs, labels0.astype(np.int64), np.ascontiguousarray(zmat, dtype=np.float64),
            beta, log_tau, log_1mtau,
        )
    )


def _full_obs(n):
    obs = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(obs, 0)
    return obs


def sample_network(gamma, hyper, glob=None, seed=0, eta=None, tau=None):
    """Draw (graph, positions, eta, tau) from the generative model.

    Block parameters and between-block rates are drawn from their priors
    unless fixed values are supplied.  Deterministic under the seed.
    """
    rng = substream(seed, "simulate")
    labels0 = gamma.zero_based()
    K = gamma.n_blocks
    n = gamma.n_nodes
    D = hyper.D

    if eta is None:
        if glob is None:
            raise ValueError("either eta or global params must be provided")
        alpha = rng.multivariate_normal(glob.mu, glob.sigma_mat, size=K)
        beta, log_sigma = alpha[:, 0], alpha[:, 1]
    else:
        beta, log_sigma = _eta_arrays(eta)
    sigma = np.exp(log_sigma)

    if tau is None:
        tau_mat = np.zeros((K, K))
        for k in range(K):
            for l in range(k + 1, K):
                tau_mat[k, l] = tau_mat[l, k] = rng.beta(hyper.a0, hyper.b0)
    else:
        tau_mat = tau.tau if isinstance(tau, BetweenParams) else np.asarray(tau, dtype=np.float64)

    z = rng.standard_normal((n, D)) * sigma[labels0][:, None]

    iu, ju = np.triu_indices(n, k=1)
    same = labels0[iu] == labels0[ju]
    p = np.empty(iu.shape[0])
    if np.any(same):
        d = np.linalg.norm(z[iu[same]] - z[ju[same]], axis=1)
        x = beta[labels0[iu[same]]] - d
        p[same] = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                           np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    p[~same] = tau_mat[labels0[iu[~same]], labels0[ju[~same]]]
    y = rng.random(iu.shape[0]) < p
    edges = np.column_stack([iu[y] + 1, ju[y] + 1])
    graph = Graph(n_nodes=n, edges=edges)
    eta_out = [BlockParams(beta=float(beta[k]), log_sigma=float(log_sigma[k])) for k in range(K)]
    # returned as a plain matrix: degenerate rates (0 or 1) are legal in simulation
    return graph, LatentPositions(z=z), eta_out, np.clip(tau_mat, 0.0, 1.0)


def expected_latent_distance(sigma, D):
    """Mean Euclidean distance between two IID N_D(0, sigma^2 I) points:
    2 sigma Gamma((D+1)/2) / Gamma(D/2)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if D < 1:
        raise ValueError("D must be at least 1")
    return 2.0 * sigma * gamma_half_ratio(D)


def mu1_lower_bound(a0, b0, mu2, D):
    """Assortativity lower bound on mu1 given mu2:
    psi(a0) - psi(b0) + 2 exp(mu2) Gamma((D+1)/2)/Gamma(D/2)."""
    if a0 <= 0 or b0 <= 0:
        raise ValueError("a0 and b0 must be positive")
    return digamma(a0) - digamma(b0) + 2.0 * np.exp(mu2) * gamma_half_ratio(D)


def mu2_upper_bound(a0, b0, mu1, D):
    """Assortativity upper bound on mu2 given mu1 (inverse of the mu1 bound).

    Undefined when mu1 <= psi(a0) - psi(b0): no mu2 can satisfy the
    restriction, signalled with :class:`InfeasibleBoundError`.
    """
    if a0 <= 0 or b0 <= 0:
        raise ValueError("a0 and b0 must be positive")
    gap = mu1 - (digamma(a0) - digamma(b0))
    if gap <= 0:
        raise InfeasibleBoundError(
            f"mu1={mu1} is at or below psi(a0)-psi(b0)={digamma(a0) - digamma(b0)}"
        )
    return float(np.log(gap / (2.0 * gamma_half_ratio(D))))


def assortativity_satisfied(mu, a0, b0, D, atol=0.0):
    mu = np.asarray(mu, dtype=np.float64)
    return bool(mu[0] - 2.0 * np.exp(mu[1]) * gamma_half_ratio(D) >= digamma(a0) - digamma(b0) - atol)


def _log_normal2(x, mean, cov):
    diff = np.asarray(x, dtype=np.float64) - mean
    (sign, logdet) = np.linalg.slogdet(cov)
    if sign <= 0:
        return -np.inf
    sol = np.linalg.solve(cov, diff)
    return float(-np.log(2.0 * np.pi) - 0.5 * logdet - 0.5 * diff @ sol)


def _log_inv_wishart2(sigma_mat, psi0, nu0):
    p = 2
    (sign, logdet_psi) = np.linalg.slogdet(psi0)
    (sign_s, logdet_s) = np.linalg.slogdet(sigma_mat)
    if sign <= 0 or sign_s <= 0:
        return -np.inf
    mv_gammaln = 0.5 * np.log(np.pi) + gammaln(nu0 / 2.0) + gammaln(nu0 / 2.0 - 0.5)
    tr = np.trace(np.linalg.solve(sigma_mat, psi0))
    return float(
        0.5 * nu0 * logdet_psi
        - 0.5 * nu0 * p * np.log(2.0)
        - mv_gammaln
        - 0.5 * (nu0 + p + 1) * logdet_s
        - 0.5 * tr
    )


def prior_log_density(glob, eta, tau, gamma, hyper):
    """Joint log prior of (pi, gamma, tau, eta, mu, Sigma), -inf when the
    assortativity indicator rejects mu."""
    if not assortativity_satisfied(glob.mu, hyper.a0, hyper.b0, hyper.D):
        return -np.inf
    K = gamma.n_blocks
    total = 0.0
    # Dirichlet(pi; upsilon0) -- a point mass (density 1) when K = 1
    if K > 1:
        u = hyper.upsilon0
        total += gammaln(K * u) - K * gammaln(u) + np.sum((u - 1.0) * np.log(glob.pi))
    # categorical memberships
    total += float(np.sum(np.log(glob.pi[gamma.zero_based()])))
    # Beta between-block rates
    tau_mat = tau.tau if isinstance(tau, BetweenParams) else np.asarray(tau)
    lbeta = gammaln(hyper.a0 + hyper.b0) - gammaln(hyper.a0) - gammaln(hyper.b0)
    for k in range(K):
        for l in range(k + 1, K):
            t = tau_mat[k, l]
            total += lbeta + (hyper.a0 - 1.0) * np.log(t) + (hyper.b0 - 1.0) * np.log1p(-t)
    # block parameters
    beta, log_sigma = _eta_arrays(eta)
    for k in range(K):
        total += _log_normal2((beta[k], log_sigma[k]), glob.mu, glob.sigma_mat)
    # Normal-Inverse-Wishart on (mu, Sigma)
    total += _log_normal2(glob.mu, hyper.m0, glob.sigma_mat / hyper.s0)
    total += _log_inv_wishart2(glob.sigma_mat, hyper.psi0, hyper.nu0)
    return float(total)


def params_to_document(eta, tau, hyper, glob=None, gamma=None):
    """Serialize model parameters to one human-readable JSON-compatible dict.

    Field names (documented for the CLI): beta, log_sigma (per-block lists),
    tau (K x K nested list), hyper.{a0,b0,m0,s0,psi0,nu0,upsilon0,D}, and
    optionally pi/mu/sigma_mat and labels.
    """
    beta, log_sigma = _eta_arrays(eta)
    tau_mat = tau.tau if isinstance(tau, BetweenParams) else np.asarray(tau)
    doc = {
        "beta": beta.tolist(),
        "log_sigma": log_sigma.tolist(),
        "tau": tau_mat.tolist(),
        "hyper": {
            "a0": hyper.a0, "b0": hyper.b0, "m0": hyper.m0.tolist(), "s0": hyper.s0,
            "psi0": hyper.psi0.tolist(), "nu0": hyper.nu0,
            "upsilon0": hyper.upsilon0, "D": hyper.D,
        },
    }
    if glob is not None:
        doc["pi"] = glob.pi.tolist()
        doc["mu"] = glob.mu.tolist()
        doc["sigma_mat"] = glob.sigma_mat.tolist()
    if gamma is not None:
        doc["labels"] = gamma.labels.tolist()
    return doc


def params_from_document(doc):
    """Inverse of params_to_document; returns (eta, tau, hyper, glob, gamma)."""
    eta = [BlockParams(beta=b, log_sigma=ls)
           for b, ls in zip(doc["beta"], doc["log_sigma"])]
    tau = BetweenParams(tau=np.asarray(doc["tau"], dtype=np.float64))
    h = doc["hyper"]
    hyper = Hyperparams(a0=h["a0"], b0=h["b0"], m0=np.asarray(h["m0"]), s0=h["s0"],
                        psi0=np.asarray(h["psi0"]), nu0=h["nu0"],
                        upsilon0=h["upsilon0"], D=h["D"])
    glob = None
    if "pi" in doc:
        glob = GlobalParams(pi=np.asarray(doc["pi"]), mu=np.asarray(doc["mu"]),
                            sigma_mat=np.asarray(doc["sigma_mat"]))
    gamma = None
    if "labels" in doc:
        labels = np.asarray(doc["labels"], dtype=np.int64)
        gamma = BlockAssignment(labels=labels, n_blocks=int(labels.max()))
    return eta, tau, hyper, glob, gamma


def mc_marginal_graph_prob(graph, gamma, eta, tau, n_draws, seed):
    """Monte-Carlo estimate of P(Y | gamma, eta, tau), integrating the latent
    positions out numerically.  Returns (estimate, standard_error).

    Only intended for desk-scale graphs; the between-block factor is exact
    and the within-block factor is averaged over position draws.
    """
    beta, log_sigma = _eta_arrays(eta)
    sigma = np.exp(log_sigma)
    tau_mat = tau.tau if isinstance(tau, BetweenParams) else np.asarray(tau)
    labels0 = gamma.zero_based()
    n = graph.n_nodes
    D = 2
    adj = graph.dense()
    rng = substream(seed, "mc-marginal", n)

    between = 1.0
    within_pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if labels0[i] == labels0[j]:
                within_pairs.append((i, j))
            else:
                t = tau_mat[labels0[i], labels0[j]]
                between *= t if adj[i, j] else (1.0 - t)
    if not within_pairs:
        return between, 0.0

    zdraws = rng.standard_normal((n_draws, n, D)) * sigma[labels0][None, :, None]
    prod = np.ones(n_draws)
    for i, j in within_pairs:
        d = np.linalg.norm(zdraws[:, i, :] - zdraws[:, j, :], axis=1)
        x = beta[labels0[i]] - d
        p = np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)), np.exp(x) / (1.0 + np.exp(x)))
        prod *= p if adj[i, j] else (1.0 - p)
    est = float(between * prod.mean())
    se = float(between * prod.std(ddof=1) / np.sqrt(n_draws))
    return est, se
