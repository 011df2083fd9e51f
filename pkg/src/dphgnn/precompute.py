"""Per-dataset structure constants: expansions, Laplacians, propagation.

Everything a forward pass multiplies by but never differentiates through
is built here once. The bundle can be cached on disk keyed by a content
hash of the hypergraph plus the input features (the distance-pair
expansion depends on features).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attention import UpdateVariant, propagation_matrix
from .expand import Graph, StarGraph, clique_expand, hypergcn_expand, star_expand
from .hypergraph import Hypergraph, build_hypergraph, incidence
from .sparse import SparseMatrix
from .spectral import LaplacianSet, build_laplacians

__all__ = ["StructureBundle", "build_structure", "content_hash", "load_or_build"]


@dataclass(eq=False)
class StructureBundle:
    hypergraph: Hypergraph
    clique: Graph
    star: StarGraph
    hypergcn: Graph
    laplacians: LaplacianSet
    prop_clique: SparseMatrix
    prop_star: SparseMatrix
    prop_hypergcn: SparseMatrix
    attention_mask: np.ndarray          # clique adjacency + self, dense bool
    edge_from_node: SparseMatrix        # H^T D_v^{-1/2}
    super_gather: SparseMatrix          # D_e^{-1} (A_star restricted to supernode rows)
    node_from_edge: SparseMatrix        # H D_e^{-1}
    key: str


def content_hash(hg: Hypergraph, features: np.ndarray) -> str:
    digest = hashlib.sha256()
    digest.update(str(hg.num_nodes).encode())
    for e in hg.edges:
        digest.update(b"e")
        digest.update(np.asarray(e, dtype=np.int64).tobytes())
    digest.update(np.ascontiguousarray(features, dtype=np.float64).tobytes())
    return digest.hexdigest()


def build_structure(hg: Hypergraph, features: np.ndarray) -> StructureBundle:
    features = np.asarray(features, dtype=np.float64)
    clique = clique_expand(hg)
    star = star_expand(hg)
    hyper = hypergcn_expand(hg, features)
    laps = build_laplacians(hg, clique, star.graph, hyper)

    h = incidence(hg)
    inv_edge = 1.0 / hg.edge_degrees.astype(np.float64)
    inv_sqrt_node = 1.0 / np.sqrt(hg.node_degrees.astype(np.float64))
    n = hg.num_nodes
    super_rows = star.graph.adjacency.take_row_range(n, n + hg.num_edges)

    return StructureBundle(
        hypergraph=hg,
        clique=clique,
        star=star,
        hypergcn=hyper,
        laplacians=laps,
        prop_clique=propagation_matrix(clique, UpdateVariant.RESIDUAL_RW),
        prop_star=propagation_matrix(star.graph, UpdateVariant.RESIDUAL_RW),
        prop_hypergcn=propagation_matrix(hyper, UpdateVariant.SYM_NORM),
        attention_mask=(clique.adjacency.to_dense() != 0.0) | np.eye(n, dtype=bool),
        edge_from_node=h.transpose().scale_cols(inv_sqrt_node),
        super_gather=super_rows.scale_rows(inv_edge),
        node_from_edge=h.scale_cols(inv_edge),
        key=content_hash(hg, features),
    )


# ----------------------------------------------------------------------
# disk cache

_SPARSE_FIELDS = (
    "prop_clique",
    "prop_star",
    "prop_hypergcn",
    "edge_from_node",
    "super_gather",
    "node_from_edge",
)
_LAPLACIAN_FIELDS = ("smoothing", "sym", "rw", "clique", "star", "hypergcn", "rw_plus_sym")
_GRAPH_FIELDS = ("clique", "star", "hypergcn")


def _pack_sparse(prefix: str, mat: SparseMatrix, out: dict) -> None:
    out[f"{prefix}.shape"] = np.array(mat.shape, dtype=np.int64)
    out[f"{prefix}.indptr"] = mat.indptr
    out[f"{prefix}.indices"] = mat.indices
    out[f"{prefix}.data"] = mat.data


def _unpack_sparse(prefix: str, blob) -> SparseMatrix:
    rows, cols = (int(v) for v in blob[f"{prefix}.shape"])
    return SparseMatrix(
        rows, cols, blob[f"{prefix}.indptr"], blob[f"{prefix}.indices"], blob[f"{prefix}.data"]
    )


def save_structure(bundle: StructureBundle, path: str | Path) -> None:
    arrays: dict[str, np.ndarray] = {
        "num_nodes": np.array([bundle.hypergraph.num_nodes], dtype=np.int64),
        "edge_sizes": bundle.hypergraph.edge_degrees,
        "edge_members": np.array(
            [v for e in bundle.hypergraph.edges for v in e], dtype=np.int64
        ),
        "attention_mask": bundle.attention_mask,
    }
    for name in _GRAPH_FIELDS:
        g = getattr(bundle, name)
        g = g.graph if isinstance(g, StarGraph) else g
        _pack_sparse(f"graph.{name}", g.adjacency, arrays)
    for name in _LAPLACIAN_FIELDS:
        _pack_sparse(f"lap.{name}", getattr(bundle.laplacians, name), arrays)
    for name in _SPARSE_FIELDS:
        _pack_sparse(name, getattr(bundle, name), arrays)
    np.savez(path, **arrays)


def load_structure(path: str | Path, key: str) -> StructureBundle:
    blob = np.load(path)
    sizes = blob["edge_sizes"]
    members = blob["edge_members"]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    edges = [tuple(members[offsets[i] : offsets[i + 1]]) for i in range(len(sizes))]
    hg = build_hypergraph(int(blob["num_nodes"][0]), edges)

    def graph_of(name: str) -> Graph:
        adj = _unpack_sparse(f"graph.{name}", blob)
        return Graph(adj.rows, adj, adj.row_sums())

    clique = graph_of("clique")
    star_base = graph_of("star")
    hyper = graph_of("hypergcn")
    star = StarGraph(
        star_base,
        hg.num_nodes,
        hg.num_edges,
        np.arange(hg.num_nodes, hg.num_nodes + hg.num_edges, dtype=np.int64),
    )
    laps = LaplacianSet(
        **{name: _unpack_sparse(f"lap.{name}", blob) for name in _LAPLACIAN_FIELDS}
    )
    fields = {name: _unpack_sparse(name, blob) for name in _SPARSE_FIELDS}
    return StructureBundle(
        hypergraph=hg,
        clique=clique,
        star=star,
        hypergcn=hyper,
        laplacians=laps,
        attention_mask=blob["attention_mask"].astype(bool),
        key=key,
        **fields,
    )


def load_or_build(
    hg: Hypergraph, features: np.ndarray, cache_dir: str | Path | None = None
) -> StructureBundle:
    """Build the bundle, reusing a cached copy when one matches the hash."""
    if cache_dir is None:
        return build_structure(hg, features)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = content_hash(hg, np.asarray(features, dtype=np.float64))
    path = cache_dir / f"structure-{key}.npz"
    if path.exists():
        return load_structure(path, key)
    bundle = build_structure(hg, features)
    save_structure(bundle, path)
    return bundle
