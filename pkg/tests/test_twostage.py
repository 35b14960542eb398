"""Two-stage fitting: clustering, the per-block variational fit, scaling."""

import math

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from lssbm.graph import BlockAssignment, Graph
from lssbm.model import Hyperparams, sample_network
from lssbm.rand import substream
from lssbm.special import expit, logit
from lssbm.twostage import (
    VbPriors,
    VbState,
    bethe_hessian_cluster,
    bethe_hessian_matrix,
    fit_twostage,
    label_propagation,
    vb_elbo,
    vb_fit,
    vb_gradients,
)


def two_cliques(size=15):
    edges = []
    for base in (0, size):
        for i in range(base + 1, base + size + 1):
            for j in range(i + 1, base + size + 1):
                edges.append((i, j))
    return Graph(n_nodes=2 * size, edges=np.array(edges))


def planted_sbm(sizes, p_in, p_out, seed):
    labels = np.concatenate([np.full(s, k + 1) for k, s in enumerate(sizes)])
    gamma = BlockAssignment(labels=labels, n_blocks=len(sizes))
    K = len(sizes)
    beta = [float(logit(p_in))] * K
    tau = np.full((K, K), p_out)
    g, _, _, _ = sample_network(gamma, Hyperparams(), seed=seed,
                                eta=(np.array(beta), np.full(K, -745.0)), tau=tau)
    return g, labels


class TestBetheHessian:
    def test_matrix_formula(self):
        g = two_cliques(3)
        h, r = bethe_hessian_matrix(g.csr())
        deg = np.asarray(g.csr().sum(axis=1)).ravel()
        assert r == pytest.approx(math.sqrt(deg.mean()))
        dense = h.toarray()
        expected = (r * r - 1) * np.eye(6) - r * g.dense() + np.diag(deg)
        assert np.allclose(dense, expected)

    def test_two_cliques_perfect(self):
        g = two_cliques()
        labels = bethe_hessian_cluster(g, 2, seed=0).labels
        truth = np.repeat([1, 2], 15)
        assert adjusted_rand_score(truth, labels) == 1.0

    def test_planted_recovery_rate(self):
        hits = 0
        for seed in range(20):
            g, truth = planted_sbm([50] * 4, 0.3, 0.02, seed=seed)
            labels = bethe_hessian_cluster(g, 4, seed=seed).labels
            hits += adjusted_rand_score(truth, labels) >= 0.9
        assert hits >= 18

    def test_k1_single_block(self):
        g = two_cliques(4)
        out = bethe_hessian_cluster(g, 1, seed=0)
        assert out.n_blocks == 1 and np.all(out.labels == 1)

    def test_k_exceeding_n_rejected(self):
        g = two_cliques(3)
        with pytest.raises(ValueError):
            bethe_hessian_cluster(g, 7, seed=0)


class TestLabelPropagation:
    def test_two_triangles(self):
        edges = [(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]
        g = Graph(n_nodes=6, edges=np.array(edges))
        out = label_propagation(g, seed=0)
        assert out.n_blocks == 2
        assert out.labels[0] == out.labels[1] == out.labels[2]
        assert out.labels[3] == out.labels[4] == out.labels[5]

    def test_complete_graph_single_block(self):
        g = two_cliques(1)  # no edges; use a real complete graph instead
        edges = [(i, j) for i in range(1, 8) for j in range(i + 1, 8)]
        g = Graph(n_nodes=7, edges=np.array(edges))
        out = label_propagation(g, seed=1)
        assert out.n_blocks == 1

    def test_components_never_merge(self):
        rng = substream(2, "lp")
        for trial in range(50):
            n1, n2 = int(rng.integers(3, 10)), int(rng.integers(3, 10))
            edges = []
            for base, n in ((0, n1), (n1, n2)):
                for i in range(base + 1, base + n + 1):
                    for j in range(i + 1, base + n + 1):
                        if rng.random() < 0.5:
                            edges.append((i, j))
            g = Graph(n_nodes=n1 + n2, edges=np.array(edges) if edges else
                      np.zeros((0, 2), dtype=np.int64))
            out = label_propagation(g, seed=trial)
            left = set(out.labels[:n1].tolist())
            right = set(out.labels[n1:].tolist())
            assert not (left & right)


def random_vb_state(rng, n, D, a_fixed=None):
    return VbState(
        m=float(rng.normal()),
        t=float(np.abs(rng.normal()) + 0.5),
        a=a_fixed if a_fixed is not None else float(np.abs(rng.normal()) + 1.0),
        b=float(np.abs(rng.normal()) + 0.5),
        ell=rng.normal(size=(n, D)) * 0.8,
        s=np.abs(rng.normal(size=n)) + 0.4,
    )


def random_block(rng, n, p=0.3):
    y = (rng.random((n, n)) < p).astype(np.uint8)
    y = np.triu(y, 1)
    return y + y.T


def reference_elbo(state, y, pri, D):
    """Independent second implementation of the three displayed components."""
    from scipy.special import digamma as dg, gammaln as gl

    n = y.shape[0]
    m, t, a, b = state.m, state.t, state.a, state.b
    ell, s = state.ell, state.s
    lik = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            eta = m + 1 / (2 * t) - math.sqrt(
                float(np.sum((ell[i] - ell[j]) ** 2)) + (1 / s[i] + 1 / s[j]) * D)
            lik += y[i, j] * eta - math.log1p(math.exp(eta)) if eta < 30 else \
                (y[i, j] * eta - eta)
    zterm = sum(
        0.5 * dg(a) - 0.5 * math.log(b)
        - a / (2 * n * b) * (D / s[i] + float(np.sum(ell[i] ** 2)))
        - 0.5 * math.log(s[i])
        for i in range(n)
    )
    kl = (-a * math.log(b) + gl(a) + (pri.a0 - a) * (dg(a) - math.log(b))
          - (pri.b0 - b) * (a / b) - 0.5 * math.log(t)
          - pri.t0 / 2 * ((m - pri.m0) ** 2 + 1 / t))
    return lik + zterm + kl


class TestVbElbo:
    def test_surrogate_logit_worked_example(self):
        # m=0, t=1, coincident means, unit precisions, D=2 -> eta = -1.5
        state = VbState(m=0.0, t=1.0, a=2.0, b=2.0,
                        ell=np.zeros((2, 2)), s=np.ones(2))
        assert state.eta(0, 1) == pytest.approx(-1.5)

    def test_matches_independent_reference(self):
        pri = VbPriors()
        rng = substream(3, "vb")
        for trial in range(5):
            n = 5
            y = random_block(rng, n)
            state = random_vb_state(rng, n, 2)
            got = vb_elbo(state, y, pri, 2)
            ref = reference_elbo(state, y, pri, 2)
            assert got == pytest.approx(ref, abs=1e-10)

    def test_empty_block_no_likelihood_term(self):
        # a single node has no dyads: the likelihood surrogate contributes 0
        pri = VbPriors()
        state = VbState(m=0.7, t=1.0, a=1.5, b=2.0, ell=np.zeros((1, 2)),
                        s=np.ones(1))
        got = vb_elbo(state, np.zeros((1, 1), dtype=np.uint8), pri, 2)
        assert got == pytest.approx(reference_elbo(state, np.zeros((1, 1)), pri, 2),
                                    abs=1e-12)


class TestVbGradients:
    def test_finite_differences_all_coordinates(self):
        pri = VbPriors()
        rng = substream(4, "vbg")
        h = 1e-5
        for trial in range(20):
            n = int(rng.integers(2, 7))
            y = random_block(rng, n)
            state = random_vb_state(rng, n, 2)
            grads = vb_gradients(state, y, pri, 2)

            def elbo_with(**kw):
                d = dict(m=state.m, t=state.t, a=state.a, b=state.b,
                         ell=state.ell, s=state.s)
                d.update(kw)
                return vb_elbo(VbState(**d), y, pri, 2)

            for name in ("m", "t", "a", "b"):
                v = getattr(state, name)
                fd = (elbo_with(**{name: v + h}) - elbo_with(**{name: v - h})) / (2 * h)
                assert grads[name] == pytest.approx(fd, rel=1e-4, abs=1e-7)
            for i in range(n):
                for d_ in range(2):
                    ell = state.ell.copy()
                    ell[i, d_] += h
                    up = elbo_with(ell=ell)
                    ell[i, d_] -= 2 * h
                    dn = elbo_with(ell=ell)
                    assert grads["ell"][i, d_] == pytest.approx(
                        (up - dn) / (2 * h), rel=1e-4, abs=1e-7)
                s = state.s.copy()
                s[i] += h
                up = elbo_with(s=s)
                s[i] -= 2 * h
                dn = elbo_with(s=s)
                assert grads["s"][i] == pytest.approx((up - dn) / (2 * h),
                                                      rel=1e-4, abs=1e-7)

    def test_closed_form_shape_stationarity_exact(self):
        # at a = a0 + n/2 with b at its own stationary point, dL/da = 0
        pri = VbPriors(a0=1.5, b0=2.0)
        rng = substream(5, "vbg")
        n = 6
        y = random_block(rng, n)
        state = random_vb_state(rng, n, 2, a_fixed=pri.a0 + n / 2)
        shrink = float(np.sum(2 / state.s + np.sum(state.ell ** 2, axis=1)))
        state.b = (pri.b0 + shrink / (2 * n))  # dL/db = 0 at this rate
        grads = vb_gradients(state, y, pri, 2)
        assert grads["b"] == pytest.approx(0.0, abs=1e-10)
        assert grads["a"] == pytest.approx(0.0, abs=1e-12)

    def test_zero_edges_centered_positions_stationary(self):
        pri = VbPriors()
        n = 4
        y = np.zeros((n, n), dtype=np.uint8)
        state = VbState(m=-3.0, t=1.0, a=3.0, b=3.0, ell=np.zeros((n, 2)),
                        s=np.ones(n))
        grads = vb_gradients(state, y, pri, 2)
        assert np.allclose(grads["ell"], 0.0, atol=1e-12)


class TestVbFit:
    def test_single_node_posterior_matches_prior(self):
        pri = VbPriors()
        state, trace, ok = vb_fit(np.zeros((1, 1), dtype=np.uint8), pri, 2, seed=0)
        assert state.m == pytest.approx(pri.m0, abs=1e-6)
        assert state.t == pytest.approx(pri.t0)
        assert state.a == pri.a0 + 0.5
        assert state.b == pytest.approx(pri.b0 + 2 / 2)  # the position term
        assert np.allclose(state.ell, 0.0, atol=1e-4)

    def test_two_node_edge_raises_fitted_probability(self):
        pri = VbPriors()
        y = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        state, _, _ = vb_fit(y, pri, 2, seed=1)
        # initialization: density clamp .99, MDS distance 1, s = 1, t = 1
        init_eta = float(logit(0.99)) + 0.5 - math.sqrt(1.0 + 4.0)
        assert expit(state.eta(0, 1)) > expit(init_eta)

    def test_elbo_trace_non_decreasing(self):
        pri = VbPriors()
        rng = substream(6, "vbfit")
        y = random_block(rng, 25, p=0.4)
        _, trace, _ = vb_fit(y, pri, 2, seed=2)
        assert np.all(np.diff(trace) >= -1e-7)

    def test_deterministic_under_seed(self):
        pri = VbPriors()
        rng = substream(7, "vbfit")
        y = random_block(rng, 15, p=0.3)
        s1, t1, _ = vb_fit(y, pri, 2, seed=5)
        s2, t2, _ = vb_fit(y, pri, 2, seed=5)
        assert s1.m == s2.m and np.array_equal(s1.ell, s2.ell)
        assert np.array_equal(t1, t2)

    def test_simulation_calibration(self):
        # 40-node blocks from the generative model (beta=2, sigma=1):
        # the identified intercept lands within +-0.75 of truth in >= 8/10
        pri = VbPriors()
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            n = 40
            z = rng.normal(size=(n, 2))
            dist = np.linalg.norm(z[:, None, :] - z[None, :, :], axis=2)
            p = 1 / (1 + np.exp(-(2.0 - dist)))
            y = (rng.random((n, n)) < p).astype(np.uint8)
            y = np.triu(y, 1)
            y = y + y.T
            state, _, _ = vb_fit(y, pri, 2, seed=seed)
            hits += abs(state.intercept() - 2.0) <= 0.75
        assert hits >= 8

    def test_degenerate_homogeneous_block(self):
        # sigma = 0 truth: intercept near logit(density), and the fitted
        # latent scale discriminates against a heterogeneous block
        pri = VbPriors()
        rng = np.random.default_rng(7)
        n = 40
        y0 = (rng.random((n, n)) < expit(1.0)).astype(np.uint8)
        y0 = np.triu(y0, 1)
        y0 = y0 + y0.T
        z2 = rng.normal(size=(n, 2)) * 2.0
        d2 = np.linalg.norm(z2[:, None, :] - z2[None, :, :], axis=2)
        y2 = (rng.random((n, n)) < 1 / (1 + np.exp(-(2.0 - d2)))).astype(np.uint8)
        y2 = np.triu(y2, 1)
        y2 = y2 + y2.T
        flat, _, _ = vb_fit(y0, pri, 2, seed=1)
        hetero, _, _ = vb_fit(y2, pri, 2, seed=1)
        dens = np.triu(y0, 1).sum() / (n * (n - 1) / 2)
        # mean fitted tie logit tracks the density for the flat block
        eta_mean = float(np.mean(flat.eta_matrix()[np.triu_indices(n, 1)]))
        assert abs(eta_mean - float(logit(dens))) <= 0.5
        assert flat.latent_scale_sq() < hetero.latent_scale_sq()


class TestFitTwostage:
    def test_block_table_and_tau(self):
        g = two_cliques(12)
        fit = fit_twostage(g, method="spectral", K=2, seed=0)
        assert fit.assignment.n_blocks == 2
        assert len(fit.block_table) == 2
        for row in fit.block_table:
            assert row["n_nodes"] == 12
            assert row["density"] == pytest.approx(1.0)
        # no between edges: posterior mean (a0 + 0) / (a0 + b0 + 144)
        assert fit.tau_hat[0, 1] == pytest.approx(1.0 / 146.0)

    def test_block_order_independence(self):
        g = two_cliques(10)
        fit1 = fit_twostage(g, method="spectral", K=2, seed=3)
        fit2 = fit_twostage(g, method="spectral", K=2, seed=3)
        for a, b in zip(fit1.states, fit2.states):
            assert a.m == b.m and np.array_equal(a.ell, b.ell)

    def test_loglog_regression_well_posed(self):
        # density-vs-size regression on a multi-block fit has finite slope
        labels = np.concatenate([np.full(s, k + 1) for k, s in
                                 enumerate([10, 15, 20, 25])])
        gamma = BlockAssignment(labels=labels, n_blocks=4)
        g, _, _, _ = sample_network(
            gamma, Hyperparams(), seed=8,
            eta=(np.array([2.0, 1.5, 1.0, 0.5]), np.log([0.5, 0.7, 0.9, 1.1])),
            tau=np.full((4, 4), 0.03))
        fit = fit_twostage(g, method="spectral", K=4, seed=1)
        sizes = np.array([row["n_nodes"] for row in fit.block_table], dtype=float)
        dens = np.array([max(row["density"], 1e-4) for row in fit.block_table])
        slope, intercept = np.polyfit(np.log10(sizes), np.log10(dens), 1)
        assert np.isfinite(slope) and np.isfinite(intercept)

    def test_label_propagation_path(self):
        edges = [(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)]
        g = Graph(n_nodes=6, edges=np.array(edges))
        fit = fit_twostage(g, method="label-propagation", seed=0)
        assert fit.assignment.n_blocks == 2
