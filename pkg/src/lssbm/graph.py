"""Undirected binary graphs, block partitions, dyad hold-out masks, and file IO.

Nodes are relabelled to contiguous 1..N on load; the original labels are kept
in ``Graph.node_ids`` so outputs can be mapped back.  Graphs and masks are
immutable after construction and safe to share across parallel workers.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .rand import substream

# Dense adjacency is only materialized below this size; the large-graph path
# (two-stage fitting) works off the CSR structure instead.
DENSE_LIMIT = 2000


class GraphFormatError(ValueError):
    """Malformed input file (carries the offending line number when known)."""


class GraphValidationError(ValueError):
    """Structurally invalid graph (self-loop, asymmetry, bad labels...)."""


@dataclass(frozen=True)
class Graph:
    """Undirected binary network on nodes 1..n_nodes with no self-loops.

    ``edges`` is an (E, 2) int array of 1-based pairs with i < j, sorted
    lexicographically and free of duplicates.
    """

    n_nodes: int
    edges: np.ndarray
    node_ids: np.ndarray = None  # original labels, parallel to 1..n_nodes

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 1 or edges.max() > self.n_nodes:
                raise GraphValidationError("edge endpoint outside 1..n_nodes")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise GraphValidationError("edges must satisfy i < j (no self-loops)")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            dup = np.all(edges[1:] == edges[:-1], axis=1)
            if np.any(dup):
                edges = np.unique(edges, axis=0)
        object.__setattr__(self, "edges", edges)
        ids = self.node_ids
        if ids is None:
            ids = np.arange(1, self.n_nodes + 1, dtype=np.int64)
        object.__setattr__(self, "node_ids", np.asarray(ids))
        object.__setattr__(self, "_cache", {})

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_dyads(self):
        return self.n_nodes * (self.n_nodes - 1) // 2

    @property
    def density(self):
        return self.n_edges / self.n_dyads if self.n_dyads else 0.0

    def csr(self):
        """Symmetric CSR adjacency (0-based)."""
        if "csr" not in self._cache:
            e = self.edges - 1
            n = self.n_nodes
            rows = np.concatenate([e[:, 0], e[:, 1]])
            cols = np.concatenate([e[:, 1], e[:, 0]])
            data = np.ones(rows.shape[0], dtype=np.float64)
            self._cache["csr"] = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._cache["csr"]

    def dense(self):
        """Dense uint8 adjacency (0-based); refuses O(N^2) storage on large graphs."""
        if self.n_nodes > DENSE_LIMIT:
            raise GraphValidationError(
                f"dense adjacency refused for n_nodes={self.n_nodes} > {DENSE_LIMIT}"
            )
        if "dense" not in self._cache:
            a = np.zeros((self.n_nodes, self.n_nodes), dtype=np.uint8)
            e = self.edges - 1
            a[e[:, 0], e[:, 1]] = 1
            a[e[:, 1], e[:, 0]] = 1
            self._cache["dense"] = a
        return self._cache["dense"]

    def degrees(self):
        """Unmasked degree vector (0-based indexing into it, node i-1)."""
        d = np.zeros(self.n_nodes, dtype=np.int64)
        e = self.edges - 1
        np.add.at(d, e[:, 0], 1)
        np.add.at(d, e[:, 1], 1)
        return d

    def neighbors(self, node):
        """1-based neighbor list of a 1-based node."""
        row = self.csr().getrow(node - 1)
        return row.indices + 1

    def has_edge(self, i, j):
        if i == j:
            return False
        if i > j:
            i, j = j, i
        idx = np.searchsorted(self.edges[:, 0], i)
        while idx < self.n_edges and self.edges[idx, 0] == i:
            if self.edges[idx, 1] == j:
                return True
            idx += 1
        return False


@dataclass(frozen=True)
class BlockAssignment:
    """Node-to-block label map with labels in 1..n_blocks."""

    labels: np.ndarray
    n_blocks: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise GraphValidationError("labels must be a 1-d array")
        if labels.size and (labels.min() < 1 or labels.max() > self.n_blocks):
            raise GraphValidationError("labels must lie in 1..n_blocks")
        object.__setattr__(self, "labels", labels)

    @property
    def n_nodes(self):
        return self.labels.shape[0]

    def counts(self):
        return np.bincount(self.labels, minlength=self.n_blocks + 1)[1:]

    def members(self, k):
        """1-based node indices of block k."""
        return np.flatnonzero(self.labels == k) + 1

    def is_canonical(self):
        """True when first occurrences appear in increasing label order and
        every label in 1..n_blocks is used."""
        seen = 0
        for lab in self.labels:
            if lab > seen + 1:
                return False
            seen = max(seen, lab)
        return seen == self.n_blocks

    def zero_based(self):
        return self.labels - 1


def canonical_labels(raw_labels):
    """Relabel an arbitrary integer labelling to the canonical 1..K form.

    Labels are renumbered in order of first appearance, so gamma_i <= K_{i-1}+1
    holds and every block is non-empty.
    """
    raw_labels = np.asarray(raw_labels)
    mapping = {}
    out = np.empty(raw_labels.shape[0], dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        key = int(lab)
        if key not in mapping:
            mapping[key] = len(mapping) + 1
        out[i] = mapping[key]
    return BlockAssignment(labels=out, n_blocks=len(mapping))


@dataclass(frozen=True)
class DyadMask:
    """A held-out set of unordered node pairs (one cross-validation fold)."""

    held_out: frozenset
    fold_id: int
    n_nodes: int

    @staticmethod
    def from_pairs(pairs, fold_id, n_nodes):
        held = frozenset((int(i), int(j)) if i < j else (int(j), int(i)) for i, j in pairs)
        for i, j in held:
            if i == j or i < 1 or j > n_nodes:
                raise GraphValidationError(f"bad held-out dyad ({i}, {j})")
        return DyadMask(held_out=held, fold_id=fold_id, n_nodes=n_nodes)

    def __len__(self):
        return len(self.held_out)

    def __contains__(self, pair):
        i, j = pair
        return ((i, j) if i < j else (j, i)) in self.held_out

    def observation_matrix(self):
        """Dense uint8 matrix with 1 = observed, 0 = held out (diagonal 0)."""
        if self.n_nodes > DENSE_LIMIT:
            raise GraphValidationError("observation matrix refused for large graphs")
        obs = np.ones((self.n_nodes, self.n_nodes), dtype=np.uint8)
        np.fill_diagonal(obs, 0)
        for i, j in self.held_out:
            obs[i - 1, j - 1] = 0
            obs[j - 1, i - 1] = 0
        return obs

    def pairs_array(self):
        """Held-out pairs as a sorted (m, 2) 1-based array."""
        if not self.held_out:
            return np.zeros((0, 2), dtype=np.int64)
        arr = np.array(sorted(self.held_out), dtype=np.int64)
        return arr


@dataclass(frozen=True)
class BlockView:
    """All dyads split into within-block and between-block-pair groups."""

    within: dict  # k -> (m, 2) array of dyads with both ends in block k
    between: dict  # (k, l), k < l -> (m, 2) array


def all_dyads(n_nodes):
    """All unordered pairs (i, j), i < j, 1-based, as an (M, 2) array."""
    iu = np.triu_indices(n_nodes, k=1)
    return np.column_stack([iu[0] + 1, iu[1] + 1])


def load_edgelist(path, fmt="edge-list", drop_zero_degree=False):
    """Load a graph from an edge-list or dense 0/1 matrix file.

    Parameters
    ----------
    path : str
        Edge-list files contain one whitespace-separated pair per line with
        ``#`` comments; a ``# n_nodes N`` comment pins the node count so
        isolated nodes survive a round trip.  Dense files are CSV of 0/1.
    fmt : {"edge-list", "dense-matrix"}
    drop_zero_degree : bool
        Drop isolated nodes (with a warning), keeping the id remap table.
    """
    if fmt == "edge-list":
        graph = _load_edgelist_pairs(path)
    elif fmt == "dense-matrix":
        graph = _load_dense(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if drop_zero_degree:
        graph = drop_isolated_nodes(graph)
    return graph


def _load_edgelist_pairs(path):
    pairs = []
    n_hint = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if line.lstrip().startswith("#"):
                toks = line.lstrip("# \t").split()
                if len(toks) == 2 and toks[0] == "n_nodes" and toks[1].isdigit():
                    n_hint = int(toks[1])
            if not body:
                continue
            toks = body.split()
            if len(toks) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two indices, got {body!r}")
            try:
                i, j = int(toks[0]), int(toks[1])
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: non-integer index in {body!r}") from exc
            if i < 1 or j < 1:
                raise GraphFormatError(f"{path}:{lineno}: indices must be positive")
            if i == j:
                raise GraphValidationError(f"{path}:{lineno}: self-loop on node {i}")
            pairs.append((min(i, j), max(i, j)))
    if not pairs and n_hint == 0:
        return Graph(n_nodes=0, edges=np.zeros((0, 2), dtype=np.int64))
    raw = np.array(pairs, dtype=np.int64) if pairs else np.zeros((0, 2), dtype=np.int64)
    ids = np.unique(raw) if raw.size else np.array([], dtype=np.int64)
    if n_hint and (ids.size == 0 or ids[-1] <= n_hint):
        # ids already lie in 1..N: keep them as-is so isolated nodes survive
        return Graph(n_nodes=n_hint, edges=raw)
    remap = {int(v): i + 1 for i, v in enumerate(ids)}
    edges = np.array([[remap[int(i)], remap[int(j)]] for i, j in raw], dtype=np.int64)
    return Graph(n_nodes=ids.size, edges=edges, node_ids=ids)


def _load_dense(path):
    try:
        mat = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        mat = np.loadtxt(path, ndmin=2)
    if mat.shape[0] != mat.shape[1]:
        raise GraphValidationError(f"{path}: dense matrix is not square: {mat.shape}")
    if not np.all(np.isin(mat, (0, 1))):
        raise GraphValidationError(f"{path}: dense matrix entries must be 0/1")
    if np.any(np.diag(mat) != 0):
        raise GraphValidationError(f"{path}: self-loop on the diagonal")
    if not np.array_equal(mat, mat.T):
        raise GraphValidationError(f"{path}: dense matrix is not symmetric")
    return from_dense(mat)


def from_dense(mat):
    mat = np.asarray(mat)
    iu, ju = np.nonzero(np.triu(mat, k=1))
    edges = np.column_stack([iu + 1, ju + 1]).astype(np.int64)
    return Graph(n_nodes=mat.shape[0], edges=edges)


def save_edgelist(graph, path):
    """Write the current 1..N edge list; inverse of ``load_edgelist``."""
    with open(path, "w") as fh:
        fh.write(f"# n_nodes {graph.n_nodes}\n")
        for i, j in graph.edges:
            fh.write(f"{i} {j}\n")


def drop_isolated_nodes(graph):
    deg = graph.degrees()
    keep = np.flatnonzero(deg > 0)
    if keep.size == graph.n_nodes:
        return graph
    warnings.warn(
        f"dropping {graph.n_nodes - keep.size} zero-degree node(s)", stacklevel=2
    )
    remap = np.full(graph.n_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(1, keep.size + 1)
    edges = remap[graph.edges - 1]
    return Graph(n_nodes=keep.size, edges=edges, node_ids=graph.node_ids[keep])


def degree(graph, node, mask=None):
    """(observed_edges, observed_dyads) for a 1-based node, excluding masked dyads."""
    if node < 1 or node > graph.n_nodes:
        raise GraphValidationError(f"node {node} out of range 1..{graph.n_nodes}")
    nbrs = graph.neighbors(node)
    if mask is None:
        return int(nbrs.size), graph.n_nodes - 1
    held_edges = sum(1 for j in nbrs if (node, j) in mask)
    held_dyads = sum(1 for (i, j) in mask.held_out if i == node or j == node)
    return int(nbrs.size) - held_edges, graph.n_nodes - 1 - held_dyads


def make_folds(graph, n_folds, seed):
    """Partition all dyads into n_folds masks of near-equal size (fixed seed)."""
    n_dyads = graph.n_dyads
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    if n_folds > n_dyads:
        raise ValueError(f"n_folds={n_folds} exceeds the {n_dyads} dyads")
    dyads = all_dyads(graph.n_nodes)
    rng = substream(seed, "folds", graph.n_nodes, n_folds)
    perm = rng.permutation(n_dyads)
    masks = []
    for f in range(n_folds):
        rows = perm[f::n_folds]
        masks.append(DyadMask.from_pairs(dyads[rows], fold_id=f, n_nodes=graph.n_nodes))
    return masks


def block_view(graph, gamma):
    """Group every dyad by the block pair of its endpoints."""
    if gamma.n_nodes != graph.n_nodes:
        raise GraphValidationError("assignment length does not match the graph")
    dyads = all_dyads(graph.n_nodes)
    gi = gamma.labels[dyads[:, 0] - 1]
    gj = gamma.labels[dyads[:, 1] - 1]
    lo = np.minimum(gi, gj)
    hi = np.maximum(gi, gj)
    within = {}
    between = {}
    for k in range(1, gamma.n_blocks + 1):
        within[k] = dyads[(lo == k) & (hi == k)]
        for l in range(k + 1, gamma.n_blocks + 1):
            between[(k, l)] = dyads[(lo == k) & (hi == l)]
    return BlockView(within=within, between=between)


def save_masks(masks, path):
    with open(path, "w") as fh:
        fh.write("i,j,fold\n")
        for m in masks:
            for i, j in sorted(m.held_out):
                fh.write(f"{i},{j},{m.fold_id}\n")


def load_masks(path, n_nodes):
    by_fold = {}
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "i,j,fold":
            raise GraphFormatError(f"{path}:1: expected header 'i,j,fold'")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                i, j, f = (int(t) for t in line.strip().split(","))
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: bad row {line!r}") from exc
            by_fold.setdefault(f, []).append((i, j))
    return [
        DyadMask.from_pairs(pairs, fold_id=f, n_nodes=n_nodes)
        for f, pairs in sorted(by_fold.items())
    ]
