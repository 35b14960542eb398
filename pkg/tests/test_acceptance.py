"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -v -s`` to see them
live).  The two long criteria (the simulation-study replication and the
repeated K selection) dominate the runtime; on a 2-core machine the whole
module takes a few hours, well inside the stated per-criterion budgets.

The two data-dependent checks use the village data when
``KARNATAKA_DATA_DIR`` points at it and otherwise fall back to the synthetic
construction (criterion 11) or skip with a visible message (criterion 12).
"""

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from lssbm.graph import BlockAssignment, Graph
from lssbm.mcmc import SamplerConfig, gibbs_pi, gibbs_sigma_mat, gibbs_tau, run_chain
from lssbm.model import (
    Hyperparams,
    expected_latent_distance,
    log_likelihood,
    mc_marginal_graph_prob,
    mu1_lower_bound,
    sample_network,
)
from lssbm.postprocess import (
    agreement_count,
    align_labels,
    procrustes_align,
    weighted_mds,
)
from lssbm.rand import substream
from lssbm.selection import CvConfig, run_cv
from lssbm.simstudy import run_replicate, simulate_reference
from lssbm.special import expit
from lssbm.twostage import VbPriors, VbState, fit_twostage, vb_elbo, vb_gradients


def report(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {number:>2} [{status}] {name}" + (f" -- {detail}" if detail else ""))
    assert passed, f"criterion {number} ({name}): {detail}"


# ----------------------------------------------------------------------
# 1. SBM-reduction exactness
# ----------------------------------------------------------------------


def test_criterion_01_sbm_reduction_exact():
    t0 = time.time()
    max_err = 0.0
    cases = [
        (4, [1, 1, 2, 2], np.array([0.7, -0.4]),
         np.array([[0.0, 0.15], [0.15, 0.0]])),
        (5, [1, 2, 1, 3, 2], np.array([0.7, -0.4, 1.2]),
         np.array([[0.0, 0.15, 0.3], [0.15, 0.0, 0.05], [0.3, 0.05, 0.0]])),
    ]
    for n, labels, beta, tau in cases:
        gamma = BlockAssignment(labels=np.asarray(labels), n_blocks=int(max(labels)))
        z = np.zeros((n, 2))
        dyads = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        for code in range(2 ** len(dyads)):
            edges = [dyads[b] for b in range(len(dyads)) if code >> b & 1]
            g = Graph(n_nodes=n, edges=np.array(edges) if edges else np.zeros((0, 2), int))
            model_p = math.exp(log_likelihood(
                g, gamma, z, (beta, np.full(beta.size, -745.0)), tau))
            adj = g.dense()
            direct = 1.0
            for (i, j) in dyads:
                li, lj = labels[i - 1], labels[j - 1]
                p = expit(beta[li - 1]) if li == lj else tau[li - 1, lj - 1]
                direct *= p if adj[i - 1, j - 1] else 1 - p
            max_err = max(max_err, abs(model_p - direct))
    elapsed = time.time() - t0
    report(1, "SBM-reduction exactness", max_err <= 1e-12 and elapsed < 1.0,
           f"max |diff| = {max_err:.2e} over all graphs on N=4,5 in {elapsed:.2f}s")


# ----------------------------------------------------------------------
# 2. Numerical projectivity
# ----------------------------------------------------------------------


def test_criterion_02_projectivity():
    t0 = time.time()
    # exact branch (sigma = 0)
    labels4 = [1, 1, 2, 2]
    beta = np.array([0.8, -0.2])
    tau = np.array([[0.0, 0.2], [0.2, 0.0]])
    gamma4 = BlockAssignment(labels=np.array(labels4), n_blocks=2)
    gamma3 = BlockAssignment(labels=np.array(labels4[:3]), n_blocks=2)
    eta0 = (beta, np.full(2, -745.0))
    y3_edges = [(1, 2), (2, 3)]
    g3 = Graph(n_nodes=3, edges=np.array(y3_edges))
    p3 = math.exp(log_likelihood(g3, gamma3, np.zeros((3, 2)), eta0, tau))
    node4 = [(1, 4), (2, 4), (3, 4)]
    marginal = 0.0
    for code in range(8):
        extra = [node4[b] for b in range(3) if code >> b & 1]
        g4 = Graph(n_nodes=4, edges=np.array(y3_edges + extra))
        marginal += math.exp(log_likelihood(g4, gamma4, np.zeros((4, 2)), eta0, tau))
    exact_err = abs(marginal - p3)

    # Monte-Carlo branch (sigma > 0), 10^6 draws per estimate
    eta1 = (np.array([1.0, 0.5]), np.log([0.8, 1.2]))
    labels4b = [1, 1, 1, 2]
    gamma4b = BlockAssignment(labels=np.array(labels4b), n_blocks=2)
    gamma3b = BlockAssignment(labels=np.array(labels4b[:3]), n_blocks=2)
    g3b = Graph(n_nodes=3, edges=np.array([[1, 2]]))
    est3, se3 = mc_marginal_graph_prob(g3b, gamma3b, eta1, tau, 10 ** 6, seed=21)
    marg, var = 0.0, 0.0
    for code in range(8):
        extra = [node4[b] for b in range(3) if code >> b & 1]
        g4 = Graph(n_nodes=4, edges=np.array([[1, 2]] + extra))
        est, se = mc_marginal_graph_prob(g4, gamma4b, eta1, tau, 10 ** 6, seed=37)
        marg += est
        var += se ** 2
    gap = abs(marg - est3)
    limit = 4 * math.sqrt(var + se3 ** 2)
    elapsed = time.time() - t0
    report(2, "numerical projectivity",
           exact_err <= 1e-12 and gap <= limit and elapsed < 120,
           f"exact err {exact_err:.2e}; MC gap {gap:.2e} <= {limit:.2e}; {elapsed:.0f}s")


# ----------------------------------------------------------------------
# 3. Expected latent distance
# ----------------------------------------------------------------------


def test_criterion_03_expected_distance():
    t0 = time.time()
    ok = True
    details = []
    for sigma in (0.5, 1.0, 2.0):
        for D in (1, 2, 3):
            rng = substream(7, "dist", int(sigma * 10), D)
            x = rng.standard_normal((10 ** 6, D)) * sigma
            y = rng.standard_normal((10 ** 6, D)) * sigma
            d = np.linalg.norm(x - y, axis=1)
            se = d.std(ddof=1) / 1000.0
            gap = abs(expected_latent_distance(sigma, D) - d.mean())
            ok &= gap <= 3 * se
            details.append(f"({sigma},{D}):{gap / se:.1f}se")
    elapsed = time.time() - t0
    report(3, "expected-distance formula", ok and elapsed < 30,
           "; ".join(details) + f"; {elapsed:.0f}s")


# ----------------------------------------------------------------------
# 4. Conjugate-step correctness
# ----------------------------------------------------------------------


def test_criterion_04_conjugate_steps():
    t0 = time.time()
    n_draws = 10 ** 5
    # pi | gamma ~ Dirichlet(1 + (2, 3))
    gamma = BlockAssignment(labels=np.array([1, 1, 2, 2, 2]), n_blocks=2)
    rng = substream(11, "acc-pi")
    pis = np.array([gibbs_pi(gamma, 1.0, rng) for _ in range(n_draws)])
    se = pis[:, 0].std(ddof=1) / math.sqrt(n_draws)
    ok_pi = abs(pis[:, 0].mean() - 3.0 / 7.0) <= 4 * se

    # tau | data ~ Beta(1 + 3, 1 + 7) on a crafted two-block graph
    labels = [1, 1, 2, 2, 2, 2, 2]
    between = [(i, j) for i in (1, 2) for j in range(3, 8)]
    g = Graph(n_nodes=7, edges=np.array(between[:3]))
    gam = BlockAssignment(labels=np.asarray(labels), n_blocks=2)
    rng = substream(11, "acc-tau")
    taus = np.array([gibbs_tau(g, gam, 1.0, 1.0, rng).tau[0, 1] for _ in range(n_draws)])
    se = taus.std(ddof=1) / math.sqrt(n_draws)
    ok_tau = abs(taus.mean() - 4.0 / 12.0) <= 4 * se

    # Sigma | alpha ~ InvWishart with the stated scale and K + nu0 dof
    hyper = Hyperparams(s0=2.0, nu0=6.0)
    alpha = np.array([[1.0, -0.5], [0.3, 0.4]])
    abar = alpha.mean(axis=0)
    dev = (abar - hyper.m0).reshape(2, 1)
    centered = alpha - abar
    scale = hyper.psi0 + centered.T @ centered + (2 * 2.0 / 4.0) * (dev @ dev.T)
    rng = substream(11, "acc-sigma")
    sigmas = np.array([gibbs_sigma_mat(alpha, hyper, rng) for _ in range(n_draws)])
    expected = scale / (2 + 6.0 - 3.0)
    se = sigmas.std(axis=0, ddof=1) / math.sqrt(n_draws)
    ok_sigma = bool(np.all(np.abs(sigmas.mean(axis=0) - expected) <= 4 * se))
    elapsed = time.time() - t0
    report(4, "conjugate-step moments", ok_pi and ok_tau and ok_sigma and elapsed < 60,
           f"pi {ok_pi}, tau {ok_tau}, Sigma {ok_sigma}; {elapsed:.0f}s")


# ----------------------------------------------------------------------
# 5. Joint MCMC grid oracle
# ----------------------------------------------------------------------


def test_criterion_05_joint_grid_oracle():
    t0 = time.time()
    beta = np.array([0.8, -0.3])
    sigma = np.array([0.6, 1.1])
    tau12 = 0.25
    pi = np.array([0.6, 0.4])
    g = Graph(n_nodes=3, edges=np.array([[1, 2]]))
    adj = g.dense()

    grid = np.linspace(-5.5, 5.5, 221)
    dz = grid[1] - grid[0]
    w = np.ones_like(grid)
    w[0] = w[-1] = 0.5
    Z = [grid[:, None, None], grid[None, :, None], grid[None, None, :]]
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    pairs = [(0, 1), (0, 2), (1, 2)]
    weights = {}
    for code in range(8):
        gam = [(code >> i) & 1 for i in range(3)]
        integrand = W.copy()
        for i in range(3):
            s = sigma[gam[i]]
            integrand = integrand * (np.exp(-Z[i] ** 2 / (2 * s * s)) /
                                     (math.sqrt(2 * math.pi) * s))
        for (i, j) in pairs:
            y = adj[i, j]
            if gam[i] == gam[j]:
                p = 1 / (1 + np.exp(-(beta[gam[i]] - np.abs(Z[i] - Z[j]))))
            else:
                p = tau12
            integrand = integrand * (p if y else (1 - p))
        weights[tuple(gam)] = float(integrand.sum() * dz ** 3) * \
            pi[gam[0]] * pi[gam[1]] * pi[gam[2]]
    total = sum(weights.values())
    oracle = {k: v / total for k, v in weights.items()}

    init = {
        "gamma0": np.array([0, 0, 1], dtype=np.int64),
        "z": np.zeros((3, 1)),
        "beta": beta.copy(),
        "log_sigma": np.log(sigma),
        "tau": np.array([[0.0, tau12], [tau12, 0.0]]),
        "pi": pi.copy(),
        "mu": np.array([4.0, 0.0]),
        "sigma_mat": np.eye(2),
    }
    cfg = SamplerConfig(n_iter=200000, thin=1, n_chains=1, seed=0, r_z=1.0,
                        n_extra_z_steps=1, sample_pi=False, sample_tau=False,
                        sample_eta=False, sample_mu_sigma=False)
    chain = run_chain(g, 2, Hyperparams(D=1), cfg, seed=123, init=init)
    counts = {}
    for s in range(chain.n_samples):
        key = tuple(int(v) - 1 for v in chain.gammas[s])
        counts[key] = counts.get(key, 0) + 1
    emp = {k: v / chain.n_samples for k, v in counts.items()}
    tv = 0.5 * sum(abs(emp.get(k, 0.0) - oracle[k]) for k in oracle)
    elapsed = time.time() - t0
    report(5, "joint MCMC vs grid oracle", tv < 0.05 and elapsed < 600,
           f"TV = {tv:.4f} over 2e5 kept samples; {elapsed:.0f}s")


# ----------------------------------------------------------------------
# 6. Assortativity constraint on saved draws
# ----------------------------------------------------------------------


def test_criterion_06_assortativity_always_holds():
    labels = np.repeat([1, 2, 3], 20)
    gamma = BlockAssignment(labels=labels, n_blocks=3)
    g, _, _, _ = sample_network(gamma, Hyperparams(), seed=5,
                                eta=([1.5, 2.0, 1.0], [-0.3, 0.0, -0.7]),
                                tau=np.full((3, 3), 0.1))
    hyper = Hyperparams(a0=2.0, b0=1.0)
    cfg = SamplerConfig(n_iter=4000, thin=2, n_chains=1, seed=0)
    chain = run_chain(g, 3, hyper, cfg, seed=19)
    violations = 0
    for s in range(chain.n_samples):
        bound = mu1_lower_bound(hyper.a0, hyper.b0, chain.mus[s, 1], hyper.D)
        violations += chain.mus[s, 0] < bound - 1e-12
    report(6, "assortativity restriction on all saved draws", violations == 0,
           f"{violations} violations in {chain.n_samples} draws")


# ----------------------------------------------------------------------
# 7. VB gradients
# ----------------------------------------------------------------------


def test_criterion_07_vb_gradients():
    t0 = time.time()
    pri = VbPriors()
    rng = substream(13, "acc-vb")
    h = 1e-5
    worst = 0.0
    for trial in range(20):
        n = int(rng.integers(2, 8))
        y = (rng.random((n, n)) < 0.4).astype(np.uint8)
        y = np.triu(y, 1)
        y = y + y.T
        state = VbState(m=float(rng.normal()), t=float(abs(rng.normal()) + 0.5),
                        a=float(abs(rng.normal()) + 1.0), b=float(abs(rng.normal()) + 0.5),
                        ell=rng.normal(size=(n, 2)) * 0.8,
                        s=np.abs(rng.normal(size=n)) + 0.4)
        grads = vb_gradients(state, y, pri, 2)

        def elbo_with(**kw):
            d = dict(m=state.m, t=state.t, a=state.a, b=state.b,
                     ell=state.ell, s=state.s)
            d.update(kw)
            return vb_elbo(VbState(**d), y, pri, 2)

        flat = [("m", grads["m"]), ("t", grads["t"]), ("a", grads["a"]),
                ("b", grads["b"])]
        for name, gval in flat:
            v = getattr(state, name)
            fd = (elbo_with(**{name: v + h}) - elbo_with(**{name: v - h})) / (2 * h)
            worst = max(worst, abs(gval - fd) / max(abs(fd), 1e-3))
        for i in range(n):
            for d_ in range(2):
                ell = state.ell.copy()
                ell[i, d_] += h
                up = elbo_with(ell=ell)
                ell[i, d_] -= 2 * h
                dn = elbo_with(ell=ell)
                fd = (up - dn) / (2 * h)
                worst = max(worst, abs(grads["ell"][i, d_] - fd) / max(abs(fd), 1e-3))
            s = state.s.copy()
            s[i] += h
            up = elbo_with(s=s)
            s[i] -= 2 * h
            dn = elbo_with(s=s)
            fd = (up - dn) / (2 * h)
            worst = max(worst, abs(grads["s"][i] - fd) / max(abs(fd), 1e-3))

    # a-hat = a0 + n/2 stationarity, exact
    n = 6
    y = (substream(14, "y").random((n, n)) < 0.4).astype(np.uint8)
    y = np.triu(y, 1)
    y = y + y.T
    state = VbState(m=0.3, t=1.0, a=pri.a0 + n / 2, b=1.0,
                    ell=substream(15, "l").normal(size=(n, 2)),
                    s=np.abs(substream(16, "s").normal(size=n)) + 0.5)
    shrink = float(np.sum(2 / state.s + np.sum(state.ell ** 2, axis=1)))
    state.b = pri.b0 + shrink / (2 * n)
    g_a = vb_gradients(state, y, pri, 2)["a"]
    elapsed = time.time() - t0
    report(7, "VB gradients vs finite differences",
           worst < 1e-4 and abs(g_a) < 1e-12 and elapsed < 10,
           f"max rel err {worst:.2e}; dL/da at closed form {g_a:.2e}; {elapsed:.1f}s")


# ----------------------------------------------------------------------
# 8. Simulation-study replication (the long one)
# ----------------------------------------------------------------------


def _replicate_task(seed):
    res = run_replicate(seed, n_iter=20000, n_chains=4)
    return seed, res.relative


def test_criterion_08_simulation_study():
    t0 = time.time()
    seeds = list(range(20))
    with ProcessPoolExecutor(max_workers=2) as pool:
        results = dict(
            (s, rel) for s, rel in pool.map(_replicate_task, seeds)
        )
    overall = sum(results[s]["all"] > 1.0 for s in seeds)
    within = sum(results[s]["within"] > 1.0 for s in seeds)
    elapsed = time.time() - t0
    detail = (f"relative AUPRC > 1: overall {overall}/20, within {within}/20; "
              f"{elapsed / 60:.0f} min")
    for s in seeds:
        print(f"  replicate {s}: " + ", ".join(
            f"{k}={results[s][k]:.3f}" for k in ("all", "within", "between")))
    report(8, "simulation-study replication", overall >= 18 and within >= 18
           and elapsed < 6 * 3600, detail)


# ----------------------------------------------------------------------
# 9. K selection on the reference configuration
# ----------------------------------------------------------------------


def test_criterion_09_k_selection():
    t0 = time.time()
    hits = 0
    picks = []
    for run_seed in range(10):
        graph, _, _, _, _ = simulate_reference(
            int(substream(100 + run_seed, "sim").integers(2 ** 31)))
        cfg = CvConfig(n_folds=10, n_repeats=20, k_min=2, k_max=8,
                       seed=100 + run_seed)
        result = run_cv(graph, cfg, n_jobs=2)
        picks.append(result.final_k)
        hits += result.final_k == 5
    elapsed = time.time() - t0
    report(9, "K selection recovers the generative structure", hits >= 7
           and elapsed < 7200, f"K=5 in {hits}/10 runs (picks: {picks}); "
           f"{elapsed / 60:.0f} min")


# ----------------------------------------------------------------------
# 10. Post-processing oracles
# ----------------------------------------------------------------------


def test_criterion_10_postprocessing_oracles():
    t0 = time.time()
    rng = substream(17, "acc-post")
    # Hungarian vs exhaustive search, 100 random instances, K <= 6
    hungarian_ok = True
    for trial in range(100):
        K = int(rng.integers(2, 7))
        n = int(rng.integers(K, 30))
        ref = BlockAssignment(labels=rng.integers(1, K + 1, n), n_blocks=K)
        sample = BlockAssignment(labels=rng.integers(1, K + 1, n), n_blocks=K)
        perm = align_labels(sample, ref, rng=rng)
        got = agreement_count(sample, ref, perm)
        best = max(
            int(np.sum(np.asarray(p)[sample.labels - 1] == ref.labels))
            for p in itertools.permutations(range(1, K + 1))
        )
        hungarian_ok &= got == best

    # Procrustes exact recovery of rotation + reflection + shift
    procrustes_ok = True
    for trial in range(20):
        x = rng.normal(size=(int(rng.integers(3, 12)), 2))
        theta = float(rng.random() * 2 * math.pi)
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        if trial % 2:
            rot = rot @ np.diag([1.0, -1.0])
        target = x @ rot + rng.normal(size=2)
        res = np.max(np.abs(procrustes_align(x, target) - target))
        procrustes_ok &= res <= 1e-10

    # SMACOF stress non-increasing, 100 random instances
    smacof_ok = True
    for trial in range(100):
        n = int(rng.integers(3, 12))
        d = np.abs(rng.normal(size=(n, n))) + 0.1
        d = (d + d.T) / 2
        np.fill_diagonal(d, 0)
        w = (rng.random((n, n)) < 0.7).astype(float)
        w = np.triu(w, 1)
        w = w + w.T
        if not w.any():
            continue
        _, trace = weighted_mds(d, w, 2, max_iter=60, seed=trial)
        smacof_ok &= bool(np.all(np.diff(trace) <= 1e-9 * np.maximum(trace[:-1], 1e-12)))
    elapsed = time.time() - t0
    report(10, "post-processing oracles",
           hungarian_ok and procrustes_ok and smacof_ok,
           f"hungarian {hungarian_ok}, procrustes {procrustes_ok}, "
           f"smacof {smacof_ok}; {elapsed:.0f}s")


# ----------------------------------------------------------------------
# 11. Two-stage scale run
# ----------------------------------------------------------------------


def _synthetic_villages(total_nodes=13009, n_components=75, seed=0):
    rng = substream(seed, "villages")
    sizes = rng.integers(80, 300, n_components)
    sizes = np.round(sizes * total_nodes / sizes.sum()).astype(int)
    sizes[-1] += total_nodes - sizes.sum()
    edge_chunks = []
    component_of = []
    offset = 0
    for c, size in enumerate(sizes):
        k = int(rng.integers(1, 8))
        labels = rng.integers(0, k, size)
        iu, ju = np.triu_indices(size, k=1)
        same = labels[iu] == labels[ju]
        p = np.where(same, 0.20, 0.015)
        keep = rng.random(iu.size) < p
        if keep.any():
            edge_chunks.append(np.column_stack([iu[keep] + 1 + offset,
                                                ju[keep] + 1 + offset]))
        component_of.extend([c] * size)
        offset += size
    edges = np.vstack(edge_chunks)
    return Graph(n_nodes=offset, edges=edges), np.asarray(component_of)


def test_criterion_11_twostage_scale():
    t0 = time.time()
    data_dir = os.environ.get("KARNATAKA_DATA_DIR", "data/karnataka")
    source = "synthetic 75-component graph"
    if os.path.isdir(data_dir):
        from lssbm.karnataka import load_all_villages

        graph, component_of = load_all_villages(data_dir)
        source = f"village composite ({graph.n_nodes} nodes)"
    else:
        graph, component_of = _synthetic_villages()
    fit = fit_twostage(graph, method="label-propagation", seed=3,
                       max_outer=10, max_iter=100)
    labels = fit.assignment.labels
    straddling = 0
    for k in range(1, fit.assignment.n_blocks + 1):
        members = np.flatnonzero(labels == k)
        straddling += np.unique(component_of[members]).size > 1
    elapsed = time.time() - t0
    report(11, "two-stage scale run", straddling == 0 and elapsed < 900,
           f"{source}: {graph.n_nodes} nodes, {fit.assignment.n_blocks} blocks, "
           f"{straddling} straddle components; {elapsed / 60:.1f} min")


# ----------------------------------------------------------------------
# 12. Village-59 smoke test (data-dependent)
# ----------------------------------------------------------------------


def test_criterion_12_village59_smoke():
    data_dir = os.environ.get("KARNATAKA_DATA_DIR", "data/karnataka")
    if not os.path.isdir(data_dir):
        print("\nACCEPTANCE 12 [SKIP] village-59 smoke test -- data not present "
              f"(set KARNATAKA_DATA_DIR; see lssbm.karnataka for the source URL)")
        pytest.skip("village data not downloaded")
    from lssbm.karnataka import load_karnataka
    from lssbm.model import default_tie_prior

    graph = load_karnataka(data_dir, 59, relation="visit")
    n_ok = graph.n_nodes == 293
    cfg = CvConfig(n_folds=10, n_repeats=20, k_min=2, k_max=10, seed=59)
    cv = run_cv(graph, cfg, n_jobs=2)
    print(f"  CV selection: {cv.selected} (final {cv.final_k}); "
          f"reference analysis chose 6")
    a0, b0 = default_tie_prior(graph.density)
    hyper = Hyperparams(a0=a0, b0=b0)
    scfg = SamplerConfig(n_iter=20000, thin=20, n_chains=2, seed=59)
    chains = [run_chain(graph, cv.final_k, hyper, scfg, seed=59 + c)
              for c in range(scfg.n_chains)]
    kept = slice(chains[0].burn_in, chains[0].n_samples)
    betas = np.concatenate([c.betas[kept] for c in chains]).mean(axis=0)
    taus = np.concatenate([c.taus[kept] for c in chains]).mean(axis=0)
    diag = expit(betas)
    assortative = all(
        diag[k] > taus[k, l]
        for k in range(cv.final_k) for l in range(cv.final_k) if k != l
    )
    report(12, "village-59 smoke test", n_ok and assortative,
           f"N={graph.n_nodes}; selected K={cv.final_k} (paper: 6); "
           f"assortative tau pattern: {assortative}")
