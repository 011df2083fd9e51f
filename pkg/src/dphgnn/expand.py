"""Graph expansions of a hypergraph: clique, star, and distance-pair forms.

Each expansion returns an undirected weighted graph whose adjacency is a
symmetric SparseMatrix with a zero diagonal. The star expansion works on
n + m vertices, where vertex n + e is the supernode of hyperedge e;
``row_mask`` selects the node block or the supernode block of any matrix
living on those stacked rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .errors import ShapeMismatchError
from .hypergraph import Hypergraph
from .sparse import SparseMatrix

__all__ = [
    "Graph",
    "StarGraph",
    "RowTarget",
    "clique_expand",
    "star_expand",
    "hypergcn_expand",
    "row_mask",
]


@dataclass(eq=False)
class Graph:
    """Undirected weighted graph with cached weighted degrees."""

    num_vertices: int
    adjacency: SparseMatrix
    degrees: np.ndarray = field(repr=False)


def _graph_from_weights(num_vertices: int, weights: dict[tuple[int, int], float]) -> Graph:
    if weights:
        pairs = np.array(sorted(weights), dtype=np.int64)
        vals = np.array([weights[(u, v)] for u, v in map(tuple, pairs)])
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        adj = SparseMatrix.from_coo(
            num_vertices, num_vertices, rows, cols, np.concatenate([vals, vals])
        )
    else:
        adj = SparseMatrix.from_coo(num_vertices, num_vertices, [], [], [])
    return Graph(num_vertices, adj, adj.row_sums())


@dataclass(eq=False)
class StarGraph:
    """Bipartite star expansion over n hypernodes plus m supernodes."""

    graph: Graph
    num_nodes: int
    num_supernodes: int
    edge_to_supernode: np.ndarray = field(repr=False)

    @property
    def node_rows(self) -> np.ndarray:
        return np.arange(self.num_nodes)

    @property
    def supernode_rows(self) -> np.ndarray:
        return np.arange(self.num_nodes, self.num_nodes + self.num_supernodes)


class RowTarget(Enum):
    """Which block of star-stacked rows to keep."""

    NODES = "nodes"
    SUPERNODES = "supernodes"


def clique_expand(hg: Hypergraph) -> Graph:
    """Unweighted graph joining every pair of nodes that co-occur in an edge."""
    seen: dict[tuple[int, int], float] = {}
    for e in hg.edges:
        for u, v in combinations(e, 2):
            seen[(u, v)] = 1.0
    return _graph_from_weights(hg.num_nodes, seen)


def star_expand(hg: Hypergraph) -> StarGraph:
    """Bipartite graph linking each node to the supernodes of its edges."""
    n, m = hg.num_nodes, hg.num_edges
    weights = {
        (v, n + j): 1.0 for j, e in enumerate(hg.edges) for v in e
    }
    g = _graph_from_weights(n + m, weights)
    return StarGraph(g, n, m, np.arange(n, n + m, dtype=np.int64))


def hypergcn_expand(hg: Hypergraph, features: np.ndarray) -> Graph:
    """One representative pair per hyperedge, chosen by feature distance.

    For each edge the pair (i, j), i < j, maximizing ||x_i - x_j|| is kept
    with weight 1 / (2|e| - 3); ties break to the lexicographically
    smallest pair. Size-2 edges are kept directly with weight 1 and
    singletons contribute nothing. Weights accumulate when several edges
    pick the same pair.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != hg.num_nodes:
        raise ShapeMismatchError(
            f"features must be ({hg.num_nodes}, d), got {features.shape}"
        )
    weights: dict[tuple[int, int], float] = {}
    for e in hg.edges:
        if len(e) < 2:
            continue
        if len(e) == 2:
            best = (e[0], e[1])
            w = 1.0
        else:
            block = features[list(e)]
            sq = np.sum(block * block, axis=1)
            d2 = sq[:, None] + sq[None, :] - 2.0 * (block @ block.T)
            # Seeding with the first pair keeps the choice well defined
            # even when every distance is NaN.
            best = (e[0], e[1])
            best_d = d2[0, 1]
            for a, b in combinations(range(len(e)), 2):
                # Strict > keeps the first maximal pair, which is the
                # lexicographically smallest because members are sorted.
                if d2[a, b] > best_d:
                    best_d = d2[a, b]
                    best = (e[a], e[b])
            w = 1.0 / (2 * len(e) - 3)
        weights[best] = weights.get(best, 0.0) + w
    return _graph_from_weights(hg.num_nodes, weights)


def row_mask(matrix, target: RowTarget, star: StarGraph):
    """Select the node block or supernode block of a star-stacked matrix.

    Accepts a dense array or an autodiff tensor; the tensor path stays
    differentiable. Raises ShapeMismatchError unless the input has exactly
    n + m rows.
    """
    total = star.num_nodes + star.num_supernodes
    n = star.num_nodes
    from .autodiff import Tensor, select_rows

    rows = matrix.value.shape[0] if isinstance(matrix, Tensor) else np.asarray(matrix).shape[0]
    if rows != total:
        raise ShapeMismatchError(
            f"expected {total} stacked rows, got {rows}"
        )
    if target is RowTarget.NODES:
        idx = np.arange(0, n)
    elif target is RowTarget.SUPERNODES:
        idx = np.arange(n, total)
    else:  # pragma: no cover
        raise ValueError(f"unknown row target {target!r}")
    if isinstance(matrix, Tensor):
        return select_rows(matrix, idx)
    return np.asarray(matrix)[idx]
