"""Loader for the Karnataka village household networks.

The data (Banerjee et al. micro-finance study) must be downloaded by the
user from

    https://dataverse.harvard.edu/dataset.xhtml?persistentId=hdl:1902.1/21538

and unpacked anywhere below a data directory.  The loader assumes the
archive's adjacency-matrix layout: dense 0/1 CSV files named

    adj_<relation>_HH_vilno_<village>.csv

for household-level relations (any subdirectory depth).  The "visit"
relation is the symmetrized union of the directed visitgo/visitcome files;
other relation names are matched literally.  Zero-degree households are
dropped (the remap table is kept on the returned graph).
"""

import os
import re

import numpy as np

from .graph import Graph, drop_isolated_nodes, from_dense

DOWNLOAD_URL = "https://dataverse.harvard.edu/dataset.xhtml?persistentId=hdl:1902.1/21538"

_FILE_RE = re.compile(r"adj_([A-Za-z0-9]+)_HH_vilno_(\d+)\.csv$")


class KarnatakaDataMissing(FileNotFoundError):
    pass


def _index_files(data_dir):
    found = {}
    for root, _, files in os.walk(data_dir):
        for name in files:
            m = _FILE_RE.match(name)
            if m:
                found[(m.group(1).lower(), int(m.group(2)))] = os.path.join(root, name)
    return found


def available_relations(data_dir):
    return sorted({rel for rel, _ in _index_files(data_dir)})


def _read_adj(path):
    mat = np.loadtxt(path, delimiter=",", ndmin=2)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{path}: adjacency matrix is not square: {mat.shape}")
    return mat


def load_karnataka(data_dir, village, relation="visit", drop_zero_degree=True):
    """Household-level undirected graph for one village and relation.

    Returns the graph (nodes relabelled 1..N, original 1-based row indices
    kept in node_ids).  Raises KarnatakaDataMissing with the download URL
    when the expected files are absent.
    """
    if not os.path.isdir(data_dir):
        raise KarnatakaDataMissing(
            f"data directory {data_dir!r} not found; download the village data from "
            f"{DOWNLOAD_URL} and unpack it there"
        )
    files = _index_files(data_dir)
    relation = relation.lower()
    if relation == "visit":
        parts = [files.get(("visitgo", village)), files.get(("visitcome", village))]
        parts = [p for p in parts if p]
        if not parts:
            parts = [files[k] for k in files if k == ("visit", village)]
    else:
        parts = [files[k] for k in files if k == (relation, village)]
    if not parts:
        rels = available_relations(data_dir)
        if rels:
            raise KeyError(
                f"no files for relation {relation!r}, village {village}; "
                f"available relations: {', '.join(rels)}"
            )
        raise KarnatakaDataMissing(
            f"no adjacency files matching 'adj_<relation>_HH_vilno_<v>.csv' under "
            f"{data_dir!r}; download the data from {DOWNLOAD_URL}"
        )
    mats = [_read_adj(p) for p in parts]
    n = mats[0].shape[0]
    if any(m.shape[0] != n for m in mats):
        raise ValueError(f"village {village}: relation files disagree on size")
    combined = np.zeros((n, n))
    for m in mats:
        combined = np.maximum(combined, np.maximum(m, m.T))
    np.fill_diagonal(combined, 0)
    graph = from_dense((combined > 0).astype(np.uint8))
    if drop_zero_degree:
        graph = drop_isolated_nodes(graph)
    return graph


def load_all_villages(data_dir, relation="visit", drop_zero_degree=True):
    """Disjoint union of every village's graph (no between-village edges).

    Returns (graph, village_of_node array, 1-based)."""
    files = _index_files(data_dir)
    villages = sorted({v for rel, v in files})
    if not villages:
        raise KarnatakaDataMissing(
            f"no adjacency files under {data_dir!r}; download from {DOWNLOAD_URL}"
        )
    edge_chunks = []
    village_of = []
    offset = 0
    for v in villages:
        g = load_karnataka(data_dir, v, relation=relation, drop_zero_degree=drop_zero_degree)
        if g.n_edges:
            edge_chunks.append(g.edges + offset)
        village_of.extend([v] * g.n_nodes)
        offset += g.n_nodes
    edges = np.vstack(edge_chunks) if edge_chunks else np.zeros((0, 2), dtype=np.int64)
    return Graph(n_nodes=offset, edges=edges), np.asarray(village_of)
