"""Command-line front end.

Every command materializes its effective configuration (defaults, then the
optional JSON config file, then explicit flags), runs, and writes a
manifest (config, config hash, seeds, wall time, backend) into the output
directory so any artifact can be reproduced bit-for-bit.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._backend import backend_name
from .evaluate import hpd_interval, prediction_report
from .graph import (
    BlockAssignment,
    load_edgelist,
    load_masks,
    save_edgelist,
    save_masks,
    make_folds,
)
from .karnataka import load_all_villages, load_karnataka
from .mcmc import (
    SamplerConfig,
    chain_manifest,
    read_chain,
    write_chain,
)
from .model import BetweenParams, BlockParams, Hyperparams, default_tie_prior, sample_network
from .postprocess import postprocess_chains
from .rand import substream
from .selection import CvConfig, run_cv
from .simstudy import REF_BETA, REF_SIGMA, REF_TAU
from scipy.special import expit
from .twostage import VbPriors, fit_twostage
from . import evaluate


def _fmt(v):
    """Plain repr of a numeric value for CSV output."""
    return repr(float(v))


def _write_manifest(out_dir, command, config, t0, extra=None):
    payload = dict(config)
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    manifest = {
        "command": command,
        "config": payload,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "version": __version__,
        "backend": backend_name(),
        "wall_time_sec": round(time.time() - t0, 3),
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return manifest


def _load_config_file(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _effective(defaults, file_cfg, cli_pairs):
    cfg = dict(defaults)
    cfg.update({k: v for k, v in file_cfg.items() if k in defaults})
    cfg.update({k: v for k, v in cli_pairs.items() if v is not None})
    return cfg


def _csv_floats(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_k_grid(text):
    if ":" in text:
        lo, hi = text.split(":")
        return int(lo), int(hi)
    vals = sorted(int(t) for t in text.split(",") if t.strip())
    return vals[0], vals[-1]


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------


def cmd_simulate(args):
    t0 = time.time()
    defaults = {
        "n_nodes": 300, "n_blocks": 5,
        "beta": list(REF_BETA), "sigma": list(REF_SIGMA), "tau": REF_TAU,
        "latent_dim": 2, "seed": 0,
    }
    cli = {
        "n_nodes": args.n_nodes, "n_blocks": args.n_blocks,
        "beta": _csv_floats(args.beta) if args.beta else None,
        "sigma": _csv_floats(args.sigma) if args.sigma else None,
        "tau": args.tau, "seed": args.seed, "latent_dim": args.latent_dim,
    }
    cfg = _effective(defaults, _load_config_file(args.config), cli)
    out = _ensure_out(args.out)
    K = int(cfg["n_blocks"])
    n = int(cfg["n_nodes"])
    if len(cfg["beta"]) != K or len(cfg["sigma"]) != K:
        raise SystemExit("beta and sigma must list one value per block")
    size = n // K
    labels = np.concatenate([np.full(size, k + 1) for k in range(K)])
    labels = np.concatenate([labels, np.full(n - labels.size, K)])
    gamma = BlockAssignment(labels=labels.astype(np.int64), n_blocks=K)
    eta = [BlockParams(beta=cfg["beta"][k], log_sigma=float(np.log(cfg["sigma"][k])))
           if cfg["sigma"][k] > 0 else BlockParams(beta=cfg["beta"][k], log_sigma=-np.inf)
           for k in range(K)]
    sigma = np.array(cfg["sigma"], dtype=np.float64)
    hyper = Hyperparams(D=int(cfg["latent_dim"]))
    tau = BetweenParams(tau=np.full((K, K), float(cfg["tau"])))

    # sigma = 0 entries are legal in simulation: positions collapse to 0
    beta_arr = np.array(cfg["beta"])
    log_sigma = np.where(sigma > 0, np.log(np.where(sigma > 0, sigma, 1.0)), -np.inf)
    rng_graph, z, _, _ = sample_network(
        gamma, hyper, seed=int(cfg["seed"]),
        eta=(beta_arr, np.where(np.isfinite(log_sigma), log_sigma, -745.0)), tau=tau)

    save_edgelist(rng_graph, os.path.join(out, "graph.edgelist"))
    np.savetxt(os.path.join(out, "truth_gamma.csv"), labels[:, None], fmt="%d",
               header="block", comments="")
    np.savetxt(os.path.join(out, "truth_z.csv"), z.z, delimiter=",",
               header=",".join(f"z{d+1}" for d in range(z.z.shape[1])), comments="")
    np.savetxt(os.path.join(out, "truth_eta.csv"),
               np.column_stack([beta_arr, sigma]), delimiter=",",
               header="beta,sigma", comments="")
    np.savetxt(os.path.join(out, "truth_tau.csv"), tau.tau, delimiter=",")
    from .model import params_to_document

    with open(os.path.join(out, "params.json"), "w") as fh:
        json.dump(params_to_document(
            (beta_arr, np.where(np.isfinite(log_sigma), log_sigma, -745.0)),
            tau, hyper, gamma=gamma), fh, indent=2)
    _write_manifest(out, "simulate", cfg, t0,
                    extra={"n_edges": int(rng_graph.n_edges),
                           "density": rng_graph.density})
    print(f"simulated {n} nodes / {rng_graph.n_edges} edges -> {out}")


# ----------------------------------------------------------------------
# select-k
# ----------------------------------------------------------------------


def cmd_select_k(args):
    t0 = time.time()
    defaults = {"n_folds": 10, "n_repeats": 20, "k_min": 2, "k_max": None,
                "imputation_tol": 1e-5, "max_em_iters": 30, "seed": 0, "threads": 1}
    cli = {"n_folds": args.n_folds, "n_repeats": args.n_repeats, "seed": args.seed,
           "threads": args.threads}
    cfg = _effective(defaults, _load_config_file(args.config), cli)
    if args.k_grid:
        cfg["k_min"], cfg["k_max"] = _parse_k_grid(args.k_grid)
    out = _ensure_out(args.out)
    graph = load_edgelist(args.graph)
    cv_cfg = CvConfig(n_folds=int(cfg["n_folds"]), n_repeats=int(cfg["n_repeats"]),
                      k_min=int(cfg["k_min"]), k_max=cfg["k_max"],
                      imputation_tol=float(cfg["imputation_tol"]),
                      max_em_iters=int(cfg["max_em_iters"]), seed=int(cfg["seed"]))
    result = run_cv(graph, cv_cfg, n_jobs=int(cfg["threads"]))
    with open(os.path.join(out, "cv_grid.csv"), "w") as fh:
        fh.write("repeat,K,auc,mse,mpi\n")
        for rec in result.records:
            fh.write(f"{rec['repeat']},{rec['K']},{_fmt(rec['auc'])},{_fmt(rec['mse'])},{_fmt(rec['mpi'])}\n")
    summary = {
        "k_grid": result.k_grid,
        "summary": {str(k): result.summary[k] for k in result.k_grid},
        "selected": result.selected,
        "final_k": result.final_k,
    }
    with open(os.path.join(out, "cv_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    _write_manifest(out, "select-k", cfg, t0, extra={"final_k": result.final_k,
                                                     "selected": result.selected})
    print(f"selected K per metric: {result.selected}; final K = {result.final_k}")


# ----------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------


def _hyper_from_cfg(cfg, graph):
    if cfg.get("a0") is None:
        a0, b0 = default_tie_prior(graph.density)
    else:
        a0, b0 = float(cfg["a0"]), float(cfg.get("b0", 1.0))
    return Hyperparams(a0=a0, b0=b0, D=int(cfg["latent_dim"]),
                       upsilon0=float(cfg["upsilon0"]))


def cmd_fit(args):
    t0 = time.time()
    defaults = {
        "engine": "mcmc", "k": None, "n_iter": 20000, "thin": 20,
        "burn_in_fraction": 0.25, "n_chains": 4, "epsilon": 0.1, "r_z": 0.5,
        "n_extra_z_steps": 5, "seed": 0, "latent_dim": 2, "a0": None, "b0": 1.0,
        "upsilon0": 1.0, "method": "spectral", "threads": 1, "positions": True,
    }
    cli = {
        "engine": args.engine, "k": args.k, "n_iter": args.n_iter, "thin": args.thin,
        "burn_in_fraction": args.burn_in, "n_chains": args.chains, "seed": args.seed,
        "method": args.method, "threads": args.threads, "latent_dim": args.latent_dim,
        "positions": None if args.no_positions is False else False,
    }
    cfg = _effective(defaults, _load_config_file(args.config), cli)
    out = _ensure_out(args.out)
    graph = load_edgelist(args.graph)
    mask = None
    if args.mask:
        masks = load_masks(args.mask, graph.n_nodes)
        mask = masks[args.mask_fold] if args.mask_fold is not None else masks[0]

    if cfg["engine"] == "twostage":
        _fit_twostage(args, cfg, graph, out, t0)
        return
    if cfg["k"] is None:
        raise SystemExit("--k is required for the mcmc engine (run select-k first)")
    K = int(cfg["k"])
    hyper = _hyper_from_cfg(cfg, graph)
    scfg = SamplerConfig(
        n_iter=int(cfg["n_iter"]), thin=int(cfg["thin"]),
        burn_in_fraction=float(cfg["burn_in_fraction"]), n_chains=int(cfg["n_chains"]),
        epsilon=float(cfg["epsilon"]), r_z=float(cfg["r_z"]),
        n_extra_z_steps=int(cfg["n_extra_z_steps"]), seed=int(cfg["seed"]),
        use_positions=bool(cfg["positions"]),
    )
    from .mcmc import run_chains

    chains = run_chains(graph, K, hyper, scfg, mask=mask,
                        n_jobs=int(cfg["threads"]))
    manifests = {}
    for c, chain in enumerate(chains):
        write_chain(chain, os.path.join(out, f"chain_{c}.csv"))
        manifests[f"chain_{c}"] = chain_manifest(chain, graph.n_nodes, hyper.D)
    with open(os.path.join(out, "chains_manifest.json"), "w") as fh:
        json.dump(manifests, fh, indent=2)
    _postprocess_and_save(chains, out, seed=int(cfg["seed"]))
    _write_manifest(out, "fit", cfg, t0, extra={
        "k": K, "hyper": {"a0": hyper.a0, "b0": hyper.b0, "D": hyper.D},
        "acceptance_rates": {f"chain_{c}": chains[c].acceptance_rates
                             for c in range(len(chains))},
    })
    print(f"mcmc fit (K={K}, {scfg.n_chains} chains x {scfg.n_iter} iters) -> {out}")


def _fit_twostage(args, cfg, graph, out, t0):
    fit = fit_twostage(graph, method=cfg["method"],
                       K=int(cfg["k"]) if cfg["k"] else None,
                       priors=VbPriors(), D=int(cfg["latent_dim"]),
                       seed=int(cfg["seed"]), n_jobs=int(cfg["threads"]))
    with open(os.path.join(out, "blocks.csv"), "w") as fh:
        cols = ["block", "n_nodes", "n_edges", "density", "m", "t", "a", "b",
                "beta_hat", "log_sigma_hat"]
        fh.write(",".join(cols) + "\n")
        for row in fit.block_table:
            fh.write(",".join(_fmt(row[c]) if c != "block" and c != "n_nodes" and c != "n_edges" else str(row[c]) for c in cols) + "\n")
    with open(os.path.join(out, "nodes.csv"), "w") as fh:
        D = int(cfg["latent_dim"])
        fh.write("node,block," + ",".join(f"ell_{d+1}" for d in range(D)) + ",s\n")
        labels0 = fit.assignment.zero_based()
        index_within = {}
        for k in range(fit.assignment.n_blocks):
            for pos, node in enumerate(np.flatnonzero(labels0 == k)):
                index_within[node] = pos
        for node in range(graph.n_nodes):
            k = labels0[node]
            st = fit.states[k]
            i = index_within[node]
            coords = ",".join(_fmt(v) for v in st.ell[i])
            fh.write(f"{node + 1},{k + 1},{coords},{_fmt(st.s[i])}\n")
    np.savetxt(os.path.join(out, "tau_hat.csv"), fit.tau_hat, delimiter=",")
    _write_manifest(out, "fit", cfg, t0, extra={
        "engine": "twostage", "n_blocks": int(fit.assignment.n_blocks),
        "converged_blocks": int(fit.converged.sum()),
    })
    print(f"two-stage fit ({fit.assignment.n_blocks} blocks) -> {out}")


def _postprocess_and_save(chains, out, seed):
    reference, summary, probs, modes, diag = postprocess_chains(chains, seed=seed)
    for c, chain in enumerate(chains):
        write_chain(chain, os.path.join(out, f"chain_{c}_aligned.csv"))
    K = chains[0].n_blocks
    with open(os.path.join(out, "inclusion_probabilities.csv"), "w") as fh:
        fh.write("node," + ",".join(f"p_block_{k}" for k in range(1, K + 1)) + ",mode\n")
        for i in range(probs.shape[0]):
            row = ",".join(_fmt(v) for v in probs[i])
            fh.write(f"{i + 1},{row},{modes[i]}\n")
    with open(os.path.join(out, "block_coordinates.csv"), "w") as fh:
        D = chains[0].zs.shape[2]
        fh.write("block,node," + ",".join(f"x{d+1}" for d in range(D)) + "\n")
        for k, (sel, coords) in reference.z0_per_block.items():
            for idx, node in enumerate(sel):
                fh.write(f"{k},{node + 1}," + ",".join(_fmt(v) for v in coords[idx]) + "\n")
    with open(os.path.join(out, "diagnostics.json"), "w") as fh:
        json.dump({k: (None if np.isnan(v) else v) for k, v in diag.items()}, fh, indent=2)
    np.savetxt(os.path.join(out, "reference_gamma.csv"),
               reference.gamma0.labels[:, None], fmt="%d", header="block", comments="")


def cmd_postprocess(args):
    t0 = time.time()
    chains = _read_chains(args.fit)
    out = _ensure_out(args.out or args.fit)
    _postprocess_and_save(chains, out, seed=args.seed or 0)
    _write_manifest(out, "postprocess", {"fit": args.fit, "seed": args.seed or 0}, t0)
    print(f"postprocessed {len(chains)} chains -> {out}")


def _read_chains(fit_dir, aligned=False):
    with open(os.path.join(fit_dir, "chains_manifest.json")) as fh:
        manifests = json.load(fh)
    chains = []
    for name in sorted(manifests):
        suffix = "_aligned.csv" if aligned else ".csv"
        path = os.path.join(fit_dir, name + suffix)
        if aligned and not os.path.exists(path):
            path = os.path.join(fit_dir, name + ".csv")
        chains.append(read_chain(path, manifests[name]))
    return chains


def _read_twostage_fit(fit_dir, n_nodes):
    """Rebuild enough of a two-stage fit from its CSV artifacts to predict."""
    from .twostage import TwoStageFit, VbState

    blocks = {}
    with open(os.path.join(fit_dir, "blocks.csv")) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            row = dict(zip(header, line.strip().split(",")))
            blocks[int(row["block"])] = row
    K = max(blocks)
    labels = np.zeros(n_nodes, dtype=np.int64)
    ell = {k: [] for k in blocks}
    s = {k: [] for k in blocks}
    with open(os.path.join(fit_dir, "nodes.csv")) as fh:
        header = fh.readline().strip().split(",")
        dims = len(header) - 3
        for line in fh:
            toks = line.strip().split(",")
            node, k = int(toks[0]), int(toks[1])
            labels[node - 1] = k
            ell[k].append([float(t) for t in toks[2:2 + dims]])
            s[k].append(float(toks[-1]))
    states = []
    for k in sorted(blocks):
        row = blocks[k]
        states.append(VbState(
            m=float(row["m"]), t=float(row["t"]), a=float(row["a"]),
            b=float(row["b"]), ell=np.asarray(ell[k]), s=np.asarray(s[k])))
    tau_hat = np.loadtxt(os.path.join(fit_dir, "tau_hat.csv"), delimiter=",",
                         ndmin=2)
    assignment = BlockAssignment(labels=labels, n_blocks=K)
    return TwoStageFit(assignment=assignment, states=states, elbo_traces=[],
                       tau_hat=tau_hat, block_table=list(blocks.values()),
                       converged=np.ones(K, dtype=bool))


# ----------------------------------------------------------------------
# predict
# ----------------------------------------------------------------------


def cmd_predict(args):
    t0 = time.time()
    graph = load_edgelist(args.graph)
    masks = load_masks(args.mask, graph.n_nodes)
    mask = masks[args.mask_fold] if args.mask_fold is not None else masks[0]
    pairs = mask.pairs_array()
    adj = graph.dense()
    truth = adj[pairs[:, 0] - 1, pairs[:, 1] - 1].astype(np.float64)
    out = _ensure_out(args.out)

    if os.path.exists(os.path.join(args.fit, "chains_manifest.json")):
        chains = _read_chains(args.fit, aligned=True)
        probs = evaluate.chain_predictions(chains, pairs)
        from .postprocess import membership_posterior

        _, modes = membership_posterior(chains)
    elif os.path.exists(os.path.join(args.fit, "blocks.csv")):
        fit = _read_twostage_fit(args.fit, graph.n_nodes)
        probs = evaluate.twostage_predictions(fit, pairs)
        modes = fit.assignment.labels
    else:
        raise SystemExit(f"no fit artifacts found under {args.fit}")
    report = prediction_report(pairs, truth, probs, modes)
    with open(os.path.join(out, "predictions.csv"), "w") as fh:
        fh.write("i,j,truth,prob,category\n")
        for row in range(pairs.shape[0]):
            fh.write(f"{pairs[row, 0]},{pairs[row, 1]},{int(truth[row])},"
                     f"{_fmt(probs[row])},{report.category[row]}\n")
    with open(os.path.join(out, "metrics.json"), "w") as fh:
        json.dump(report.metrics, fh, indent=2, default=float)
    _write_manifest(out, "predict", {"fit": args.fit, "mask": args.mask,
                                     "graph": args.graph}, t0,
                    extra={"metrics": report.metrics})
    print(json.dumps(report.metrics, indent=2, default=float))


# ----------------------------------------------------------------------
# report
# ----------------------------------------------------------------------


def cmd_report(args):
    t0 = time.time()
    chains = _read_chains(args.fit, aligned=True)
    out = _ensure_out(args.out or args.fit)
    K = chains[0].n_blocks
    lo = chains[0].burn_in

    probs_path = os.path.join(args.fit, "inclusion_probabilities.csv")
    if not os.path.exists(probs_path):
        raise SystemExit("run postprocess (or fit --engine mcmc) before report")
    table = np.loadtxt(probs_path, delimiter=",", skiprows=1, ndmin=2)
    probs = table[:, 1:K + 1]
    modes = table[:, K + 1].astype(int)

    order = np.argsort(modes, kind="stable")
    with open(os.path.join(out, "adjacency_order.csv"), "w") as fh:
        fh.write("position,node,block\n")
        for pos, node in enumerate(order):
            fh.write(f"{pos + 1},{node + 1},{modes[node]}\n")

    def pooled(field):
        return np.concatenate([getattr(c, field)[lo:] for c in chains], axis=0)

    betas = pooled("betas")
    log_sigmas = pooled("log_sigmas")
    mus = pooled("mus")
    taus = pooled("taus")
    with open(os.path.join(out, "eta_summary.csv"), "w") as fh:
        fh.write("parameter,mean,hpd_lo,hpd_hi\n")
        for k in range(K):
            for name, arr in (("beta", betas[:, k]), ("log_sigma", log_sigmas[:, k])):
                lo_i, hi_i = hpd_interval(arr)
                fh.write(f"{name}_{k + 1},{_fmt(arr.mean())},{_fmt(lo_i)},{_fmt(hi_i)}\n")
        for d, name in enumerate(("mu_1", "mu_2")):
            lo_i, hi_i = hpd_interval(mus[:, d])
            fh.write(f"{name},{_fmt(mus[:, d].mean())},{_fmt(lo_i)},{_fmt(hi_i)}\n")

    tau_mean = taus.mean(axis=0)
    diag = expit(betas.mean(axis=0))
    tau_report = tau_mean.copy()
    np.fill_diagonal(tau_report, diag)
    np.savetxt(os.path.join(out, "tau_matrix.csv"), tau_report, delimiter=",")

    coords_path = os.path.join(args.fit, "block_coordinates.csv")
    rows = []
    if os.path.exists(coords_path):
        with open(coords_path) as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                toks = line.strip().split(",")
                k, node = int(toks[0]), int(toks[1])
                if modes[node - 1] != k:
                    continue
                incl = probs[node - 1, k - 1]
                rows.append([node, k] + toks[2:] + [repr(float(incl)),
                                                    "1" if incl >= 0.3 else "0"])
        with open(os.path.join(out, "latent_positions.csv"), "w") as fh:
            dims = len(header) - 2
            fh.write("node,block," + ",".join(f"x{d+1}" for d in range(dims))
                     + ",inclusion_prob,display\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
    _write_manifest(out, "report", {"fit": args.fit}, t0)
    print(f"report tables -> {out}")


# ----------------------------------------------------------------------
# load-data
# ----------------------------------------------------------------------


def cmd_load_data(args):
    t0 = time.time()
    out = _ensure_out(args.out)
    if args.all_villages:
        graph, village_of = load_all_villages(args.data_dir, relation=args.relation)
        np.savetxt(os.path.join(out, "village_of_node.csv"), village_of[:, None],
                   fmt="%d", header="village", comments="")
        name = f"karnataka_all_{args.relation}.edgelist"
    else:
        graph = load_karnataka(args.data_dir, args.village, relation=args.relation)
        name = f"karnataka_v{args.village}_{args.relation}.edgelist"
    save_edgelist(graph, os.path.join(out, name))
    _write_manifest(out, "load-data", {
        "data_dir": args.data_dir, "village": args.village,
        "relation": args.relation, "all_villages": args.all_villages,
    }, t0, extra={"n_nodes": graph.n_nodes, "n_edges": graph.n_edges})
    print(f"loaded {graph.n_nodes} nodes / {graph.n_edges} edges -> {out}/{name}")


def cmd_make_folds(args):
    graph = load_edgelist(args.graph)
    masks = make_folds(graph, args.n_folds, args.seed or 0)
    save_masks(masks, args.out)
    print(f"wrote {len(masks)} folds over {graph.n_dyads} dyads -> {args.out}")


# ----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="lssbm",
                                description="Multiresolution latent-space blockmodels")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="draw a network from the generative model")
    ps.add_argument("--out", required=True)
    ps.add_argument("--config")
    ps.add_argument("--n-nodes", type=int, dest="n_nodes")
    ps.add_argument("--n-blocks", type=int, dest="n_blocks")
    ps.add_argument("--beta")
    ps.add_argument("--sigma")
    ps.add_argument("--tau", type=float)
    ps.add_argument("--latent-dim", type=int, dest="latent_dim")
    ps.add_argument("--seed", type=int)
    ps.set_defaults(func=cmd_simulate)

    pk = sub.add_parser("select-k", help="cross-validated choice of the block count")
    pk.add_argument("--graph", required=True)
    pk.add_argument("--out", required=True)
    pk.add_argument("--config")
    pk.add_argument("--k-grid", help="e.g. 2:8 or 2,3,4,5")
    pk.add_argument("--n-folds", type=int, dest="n_folds")
    pk.add_argument("--n-repeats", type=int, dest="n_repeats")
    pk.add_argument("--threads", type=int)
    pk.add_argument("--seed", type=int)
    pk.set_defaults(func=cmd_select_k)

    pf = sub.add_parser("fit", help="fit by MCMC or the two-stage approximation")
    pf.add_argument("--graph", required=True)
    pf.add_argument("--out", required=True)
    pf.add_argument("--config")
    pf.add_argument("--engine", choices=["mcmc", "twostage"])
    pf.add_argument("--k", type=int)
    pf.add_argument("--n-iter", type=int, dest="n_iter")
    pf.add_argument("--thin", type=int)
    pf.add_argument("--burn-in", type=float, dest="burn_in")
    pf.add_argument("--chains", type=int)
    pf.add_argument("--latent-dim", type=int, dest="latent_dim")
    pf.add_argument("--method", choices=["spectral", "label-propagation"])
    pf.add_argument("--mask", help="folds CSV; fits on the non-held-out dyads")
    pf.add_argument("--mask-fold", type=int, dest="mask_fold")
    pf.add_argument("--no-positions", action="store_true", dest="no_positions",
                    help="positions-off blockmodel baseline")
    pf.add_argument("--threads", type=int)
    pf.add_argument("--seed", type=int)
    pf.set_defaults(func=cmd_fit)

    pp = sub.add_parser("postprocess", help="align labels/positions, diagnostics")
    pp.add_argument("--fit", required=True)
    pp.add_argument("--out")
    pp.add_argument("--seed", type=int)
    pp.set_defaults(func=cmd_postprocess)

    pd = sub.add_parser("predict", help="held-out dyad predictions from a fit")
    pd.add_argument("--fit", required=True)
    pd.add_argument("--graph", required=True)
    pd.add_argument("--mask", required=True)
    pd.add_argument("--mask-fold", type=int, dest="mask_fold")
    pd.add_argument("--out", required=True)
    pd.set_defaults(func=cmd_predict)

    pr = sub.add_parser("report", help="posterior summary tables")
    pr.add_argument("--fit", required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_report)

    pl = sub.add_parser("load-data", help="build graphs from the village data")
    pl.add_argument("--data-dir", required=True, dest="data_dir")
    pl.add_argument("--village", type=int, default=59)
    pl.add_argument("--relation", default="visit")
    pl.add_argument("--all-villages", action="store_true", dest="all_villages")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_load_data)

    pm = sub.add_parser("make-folds", help="write a dyad fold partition CSV")
    pm.add_argument("--graph", required=True)
    pm.add_argument("--n-folds", type=int, default=10, dest="n_folds")
    pm.add_argument("--seed", type=int)
    pm.add_argument("--out", required=True)
    pm.set_defaults(func=cmd_make_folds)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main(sys.argv[1:])
