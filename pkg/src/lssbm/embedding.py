"""Classical (Torgerson) MDS and graph-distance helpers used to initialize
latent positions.  The weighted SMACOF scaling used in post-processing lives
in :mod:`lssbm.postprocess`."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph


def classical_mds(dist, n_dims):
    """Embed a symmetric distance matrix by double-centering + eigendecomposition.

    Returns an (n, n_dims) configuration; dimensions beyond the positive
    spectrum are zero-padded.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    if n == 0:
        return np.zeros((0, n_dims))
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * j @ (dist ** 2) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    out = np.zeros((n, n_dims))
    for d in range(min(n_dims, n)):
        if evals[d] > 0:
            out[:, d] = evecs[:, d] * np.sqrt(evals[d])
    return out


def subgraph_distances(adj_csr, members0):
    """Shortest-path distances within the induced subgraph on ``members0``
    (0-based indices); unreachable pairs get the largest finite distance + 1.
    """
    sub = adj_csr[members0][:, members0]
    d = csgraph.shortest_path(sp.csr_matrix(sub), method="D", unweighted=True)
    finite = d[np.isfinite(d)]
    cap = (finite.max() + 1.0) if finite.size else 1.0
    d[~np.isfinite(d)] = cap
    np.fill_diagonal(d, 0.0)
    return d


def mds_block_init(graph, labels0, K, n_dims):
    """Per-block classical MDS of graph distances, scaled to unit RMS norm."""
    n = labels0.shape[0]
    z = np.zeros((n, n_dims))
    adj = graph.csr()
    for k in range(K):
        members = np.flatnonzero(labels0 == k)
        if members.size <= 1:
            continue
        coords = classical_mds(subgraph_distances(adj, members), n_dims)
        rms = np.sqrt(np.mean(np.sum(coords ** 2, axis=1)))
        if rms > 0:
            coords = coords / rms
        z[members] = coords
    return z
