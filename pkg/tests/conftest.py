"""Shared fixtures and independent dense oracles.

Oracles here recompute quantities from first principles with plain
numpy so the package implementations are checked against straight-line
re-derivations, not against themselves.
"""

from __future__ import annotations

import numpy as np
import pytest

from dphgnn.hypergraph import (
    Hypergraph,
    LabeledHypergraph,
    build_hypergraph,
    relabel_nodes,
)


@pytest.fixture
def spec_example() -> Hypergraph:
    """The running 4-node example: one 3-edge and one 2-edge sharing node 2."""
    return build_hypergraph(4, [(0, 1, 2), (2, 3)])


def dense_incidence(hg: Hypergraph) -> np.ndarray:
    H = np.zeros((hg.num_nodes, hg.num_edges))
    for j, edge in enumerate(hg.edges):
        for v in edge:
            H[v, j] = 1.0
    return H


def dense_smoothing(hg: Hypergraph) -> np.ndarray:
    """D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2} built densely."""
    H = dense_incidence(hg)
    dv = H.sum(axis=1)
    de = H.sum(axis=0)
    inv_sqrt = np.diag(1.0 / np.sqrt(dv))
    return inv_sqrt @ H @ np.diag(1.0 / de) @ H.T @ inv_sqrt


def dense_sym(hg: Hypergraph) -> np.ndarray:
    return np.eye(hg.num_nodes) - dense_smoothing(hg)


def dense_rw(hg: Hypergraph) -> np.ndarray:
    H = dense_incidence(hg)
    dv = H.sum(axis=1)
    de = H.sum(axis=0)
    walk = np.diag(1.0 / dv) @ H @ np.diag(1.0 / de) @ H.T
    return np.eye(hg.num_nodes) - walk


def dense_adjacency(graph) -> np.ndarray:
    return graph.adjacency.to_dense()


def permute_data(data: LabeledHypergraph, perm) -> LabeledHypergraph:
    """Apply a node permutation to structure, features, labels, and masks."""
    hg_p = relabel_nodes(data.hypergraph, perm)
    feats = np.empty_like(data.features)
    labels = np.empty_like(data.labels)
    masks = {}
    for name in ("train_mask", "val_mask", "test_mask"):
        masks[name] = np.empty_like(getattr(data, name))
    feats[perm] = data.features
    labels[perm] = data.labels
    for name in ("train_mask", "val_mask", "test_mask"):
        masks[name][perm] = getattr(data, name)
    return LabeledHypergraph(
        hypergraph=hg_p,
        features=feats,
        labels=labels,
        num_classes=data.num_classes,
        **masks,
    )


def random_covering_hypergraph(
    rng: np.random.Generator, num_nodes: int, num_edges: int, max_size: int = 4
) -> Hypergraph:
    """Random hypergraph whose first edges cover every node (no isolates)."""
    edges = []
    perm = rng.permutation(num_nodes)
    i = 0
    while i < num_nodes:
        size = int(rng.integers(2, max_size + 1))
        chunk = perm[i : i + size]
        if len(chunk) == 1:
            chunk = perm[i - 1 : i + 1]
        edges.append(tuple(int(v) for v in chunk))
        i += size
    while len(edges) < num_edges:
        size = int(rng.integers(2, min(max_size, num_nodes) + 1))
        members = rng.choice(num_nodes, size=size, replace=False)
        edges.append(tuple(int(v) for v in members))
    return build_hypergraph(num_nodes, edges)
