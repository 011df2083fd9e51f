"""Hypergraph Laplacians and the spectral identifier update.

Three normalized operators are built from the incidence matrix H with
node degrees D_v and edge cardinalities D_e:

    smoothing operator  D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}
    symmetric Laplacian I - smoothing operator
    random-walk form    I - D_v^{-1} H D_e^{-1} H^T

All three require every node to appear in at least one edge. Graph
Laplacians of expansion graphs are the combinatorial D - A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat_cols, matmul, relu, scale
from .errors import IsolatedNodeError
from .expand import Graph
from .hypergraph import Hypergraph, incidence
from .sparse import SparseMatrix

__all__ = [
    "LaplacianSet",
    "laplacian_hgnn",
    "laplacian_sym",
    "laplacian_rw",
    "graph_laplacian",
    "build_laplacians",
    "sib_update",
]


def _degree_checked(hg: Hypergraph) -> np.ndarray:
    deg = hg.node_degrees
    if hg.num_nodes and deg.min() == 0:
        isolated = int(np.flatnonzero(deg == 0)[0])
        raise IsolatedNodeError(
            f"node {isolated} has no incident edges; add a singleton edge first"
        )
    return deg.astype(np.float64)


def laplacian_hgnn(hg: Hypergraph) -> SparseMatrix:
    """Symmetric smoothing operator D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}."""
    deg = _degree_checked(hg)
    h = incidence(hg)
    inv_sqrt = 1.0 / np.sqrt(deg)
    half = h.scale_rows(inv_sqrt).scale_cols(1.0 / hg.edge_degrees.astype(np.float64))
    return half @ h.scale_rows(inv_sqrt).transpose()


def laplacian_sym(hg: Hypergraph) -> SparseMatrix:
    """I minus the smoothing operator."""
    return SparseMatrix.identity(hg.num_nodes).add(laplacian_hgnn(hg).scale(-1.0))


def laplacian_rw(hg: Hypergraph) -> SparseMatrix:
    """Random-walk Laplacian I - D_v^{-1} H D_e^{-1} H^T; rows sum to zero."""
    deg = _degree_checked(hg)
    h = incidence(hg)
    walk = h.scale_cols(1.0 / hg.edge_degrees.astype(np.float64)) @ h.transpose()
    return SparseMatrix.identity(hg.num_nodes).add(walk.scale_rows(1.0 / deg).scale(-1.0))


def graph_laplacian(g: Graph) -> SparseMatrix:
    """Combinatorial Laplacian D - A of an expansion graph."""
    return SparseMatrix.from_diag(g.degrees).add(g.adjacency.scale(-1.0))


@dataclass(eq=False)
class LaplacianSet:
    """All operators one forward pass needs, built once per dataset."""

    smoothing: SparseMatrix       # D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}
    sym: SparseMatrix             # I - smoothing
    rw: SparseMatrix              # I - D_v^{-1} H D_e^{-1} H^T
    clique: SparseMatrix          # D - A of the clique expansion
    star: SparseMatrix            # D - A of the star expansion (n + m rows)
    hypergcn: SparseMatrix        # D - A of the distance-pair expansion
    rw_plus_sym: SparseMatrix     # precomputed sum used by sib_update


def build_laplacians(hg: Hypergraph, clique: Graph, star_graph: Graph, hyper: Graph) -> LaplacianSet:
    smoothing = laplacian_hgnn(hg)
    sym = SparseMatrix.identity(hg.num_nodes).add(smoothing.scale(-1.0))
    rw = laplacian_rw(hg)
    return LaplacianSet(
        smoothing=smoothing,
        sym=sym,
        rw=rw,
        clique=graph_laplacian(clique),
        star=graph_laplacian(star_graph),
        hypergcn=graph_laplacian(hyper),
        rw_plus_sym=rw.add(sym),
    )


def sib_update(
    hg: Hypergraph,
    x: Tensor | np.ndarray,
    lam: float,
    theta: Tensor | np.ndarray,
    laplacians: LaplacianSet | None = None,
) -> Tensor:
    """Spectral identifier block.

    Concatenates the random-walk-plus-symmetric smoothing of ``x`` with
    the smoothing-operator pass, adds it (scaled by ``lam``) onto the
    duplicated input, and applies a learned map with ReLU:

        S = [(rw + sym) x  ||  smoothing x]          (n, 2d)
        out = ReLU(([x || x] + lam * S) theta)

    ``theta`` maps 2d columns to the output width.
    """
    if laplacians is None:
        rw_plus_sym = laplacian_rw(hg).add(laplacian_sym(hg))
        smoothing = laplacian_hgnn(hg)
    else:
        rw_plus_sym = laplacians.rw_plus_sym
        smoothing = laplacians.smoothing
    identifiers = concat_cols(matmul(rw_plus_sym, x), matmul(smoothing, x))
    x = x if isinstance(x, Tensor) else Tensor(x)
    mixed = concat_cols(x, x) + scale(identifiers, lam)
    return relu(matmul(mixed, theta))
