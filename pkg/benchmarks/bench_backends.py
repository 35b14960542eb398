"""Compare the compiled (numba) and pure-NumPy kernel backends.

The backend is chosen at import time from the LSSBM_NO_NUMBA environment
variable, so this script times each backend in a fresh subprocess and
prints a side-by-side table.

Usage: python benchmarks/bench_backends.py [--n 300] [--reps 5]
"""

import argparse
import json
import os
import subprocess
import sys

_WORKER = r"""
import json
import time

import numpy as np

from lssbm import kernels
from lssbm._backend import backend_name

n, reps, seed = {n}, {reps}, 12345
rng = np.random.default_rng(seed)
K, D = 5, 2
adj = (rng.random((n, n)) < 0.1).astype(np.uint8)
adj = np.triu(adj, 1)
adj = adj + adj.T
obs = np.ones((n, n), dtype=np.uint8)
np.fill_diagonal(obs, 0)
gamma = rng.integers(0, K, n).astype(np.int64)
sizes = np.bincount(gamma, minlength=K).astype(np.int64)
z = np.ascontiguousarray(rng.normal(size=(n, D)))
beta = rng.normal(size=K)
sigma = np.abs(rng.normal(size=K)) + 0.5
tau = rng.random((K, K)) * 0.4 + 0.05
log_tau, log_1mtau = np.log(tau), np.log1p(-tau)
log_pi = np.log(np.full(K, 1.0 / K))

def timed(fn, *args):
    fn(*args)  # warm-up / compile
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps

results = {{"backend": backend_name()}}
results["graph_loglik"] = timed(
    kernels.graph_loglik, adj, obs, gamma, z, beta, log_tau, log_1mtau)

u_cat = rng.random(n)
noise = rng.standard_normal((n, D))
u_acc = rng.random(n)
results["membership_position_sweep"] = timed(
    kernels.membership_position_sweep, adj, obs, gamma.copy(), z.copy(), sizes.copy(),
    beta, sigma, log_tau, log_1mtau, log_pi, 0.1, 0.5, True, u_cat, noise, u_acc)

sorted_nodes = np.argsort(gamma, kind="stable")
block_ptr = np.zeros(K + 1, dtype=np.int64)
np.cumsum(np.bincount(gamma, minlength=K), out=block_ptr[1:])
results["position_refresh_sweep"] = timed(
    kernels.position_refresh_sweep, adj, obs, gamma, z.copy(), beta, sigma, 0.5,
    noise, u_acc, sorted_nodes, block_ptr)

nb = 60
yb = adj[:nb, :nb]
ob = obs[:nb, :nb]
ell = np.ascontiguousarray(rng.normal(size=(nb, D)))
s = np.abs(rng.normal(size=nb)) + 0.5
results["vb_elbo"] = timed(
    kernels.vb_elbo, yb, ob, 0.5, 1.0, 31.0, 31.0, ell, s, 1.0, 1.0, 0.0, 0.01)
results["vb_grads"] = timed(
    kernels.vb_grads, yb, ob, 0.5, 1.0, 31.0, 31.0, ell, s, 1.0, 1.0, 0.0, 0.01)
print(json.dumps(results))
"""


def run_backend(disable_numba, n, reps):
    env = dict(os.environ)
    env["LSSBM_NO_NUMBA"] = "1" if disable_numba else "0"
    code = _WORKER.format(n=n, reps=reps)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300, help="graph size for the sweeps")
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    numba = run_backend(False, args.n, args.reps)
    plain = run_backend(True, args.n, args.reps)
    kernels = [k for k in numba if k != "backend"]
    width = max(len(k) for k in kernels)
    print(f"{'kernel':<{width}}  {'numba':>12}  {'numpy':>12}  {'speedup':>8}")
    for k in kernels:
        ratio = plain[k] / numba[k] if numba[k] > 0 else float("inf")
        print(f"{k:<{width}}  {numba[k] * 1e3:>10.3f}ms  {plain[k] * 1e3:>10.3f}ms  "
              f"{ratio:>7.1f}x")


if __name__ == "__main__":
    main()
