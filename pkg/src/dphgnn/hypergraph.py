"""Hypergraph data model, incidence structure, and dataset I/O.

A hypergraph is a node count plus a list of hyperedges, each a set of node
ids. Edges keep their input order; members are stored sorted. A labeled
hypergraph adds per-node float64 features, integer class labels, and
disjoint train/val/test masks, and round-trips through a JSON format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateMemberError,
    EmptyEdgeError,
    MaskOverlapError,
    NodeIdOutOfRangeError,
    NoEdgesError,
    ParseError,
    ShapeMismatchError,
)
from .sparse import SparseMatrix

__all__ = [
    "Hypergraph",
    "LabeledHypergraph",
    "build_hypergraph",
    "incidence",
    "density_stats",
    "relabel_nodes",
    "ensure_min_degree",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """Immutable hypergraph structure.

    Attributes:
        num_nodes: node count n; ids are 0..n-1.
        edges: per-edge sorted member tuples, in input order.
        node_degrees: number of incident edges per node.
        edge_degrees: cardinality of each edge.
    """

    num_nodes: int
    edges: tuple[tuple[int, ...], ...]
    node_degrees: np.ndarray = field(repr=False)
    edge_degrees: np.ndarray = field(repr=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_multiset(self) -> tuple[tuple[int, ...], ...]:
        """Canonical edge multiset: sorted tuple of member tuples."""
        return tuple(sorted(self.edges))


def build_hypergraph(num_nodes: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
    """Validate and construct a hypergraph.

    Raises:
        EmptyEdgeError: an edge has no members.
        NodeIdOutOfRangeError: a member id is outside [0, num_nodes).
        DuplicateMemberError: an edge repeats a member.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise NodeIdOutOfRangeError("num_nodes must be non-negative")
    clean: list[tuple[int, ...]] = []
    for pos, edge in enumerate(edges):
        members = [int(v) for v in edge]
        if not members:
            raise EmptyEdgeError(f"edge {pos} is empty")
        if len(set(members)) != len(members):
            raise DuplicateMemberError(f"edge {pos} repeats a member")
        for v in members:
            if not 0 <= v < num_nodes:
                raise NodeIdOutOfRangeError(
                    f"edge {pos} refers to node {v}, but num_nodes={num_nodes}"
                )
        clean.append(tuple(sorted(members)))
    node_deg = np.zeros(num_nodes, dtype=np.int64)
    for e in clean:
        node_deg[list(e)] += 1
    edge_deg = np.array([len(e) for e in clean], dtype=np.int64)
    return Hypergraph(num_nodes, tuple(clean), node_deg, edge_deg)


def incidence(hg: Hypergraph) -> SparseMatrix:
    """n x m binary incidence matrix H with H[v, e] = 1 iff v in edge e."""
    rows = [v for e in hg.edges for v in e]
    cols = [j for j, e in enumerate(hg.edges) for _ in e]
    return SparseMatrix.from_coo(
        hg.num_nodes, hg.num_edges, rows, cols, np.ones(len(rows))
    )


def density_stats(hg: Hypergraph) -> tuple[float, float]:
    """(mean node density, mean edge cardinality).

    The first value is 2|E| / |V|; the second is the average edge size.

    Raises:
        NoEdgesError: the hypergraph has no edges.
    """
    if hg.num_edges == 0:
        raise NoEdgesError("density is undefined without edges")
    if hg.num_nodes == 0:
        raise NoEdgesError("density is undefined without nodes")
    mu = 2.0 * hg.num_edges / hg.num_nodes
    mean_card = float(hg.edge_degrees.mean())
    return mu, mean_card


def relabel_nodes(hg: Hypergraph, perm: Sequence[int]) -> Hypergraph:
    """Apply a node permutation: node v becomes perm[v]."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (hg.num_nodes,) or sorted(perm.tolist()) != list(range(hg.num_nodes)):
        raise ShapeMismatchError("perm must be a permutation of 0..n-1")
    return build_hypergraph(
        hg.num_nodes, [tuple(int(perm[v]) for v in e) for e in hg.edges]
    )


def ensure_min_degree(hg: Hypergraph) -> Hypergraph:
    """Return a copy with a singleton edge appended for every isolated node.

    Degree-normalized operators are undefined on isolated nodes; training
    code calls this before building structure matrices.
    """
    isolated = np.flatnonzero(hg.node_degrees == 0)
    if isolated.size == 0:
        return hg
    return build_hypergraph(
        hg.num_nodes, list(hg.edges) + [(int(v),) for v in isolated]
    )


# ----------------------------------------------------------------------
# labeled datasets


@dataclass(eq=False)
class LabeledHypergraph:
    """Hypergraph with node features, labels, and split masks."""

    hypergraph: Hypergraph
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        n = self.hypergraph.num_nodes
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        for name in ("train_mask", "val_mask", "test_mask"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=bool))
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ShapeMismatchError(
                f"features must be ({n}, d), got {self.features.shape}"
            )
        if self.labels.shape != (n,):
            raise ShapeMismatchError(f"labels must have length {n}")
        for name in ("train_mask", "val_mask", "test_mask"):
            if getattr(self, name).shape != (n,):
                raise ShapeMismatchError(f"{name} must have length {n}")
        if np.any(self.train_mask & self.val_mask) or np.any(
            self.train_mask & self.test_mask
        ) or np.any(self.val_mask & self.test_mask):
            raise MaskOverlapError("train/val/test masks must be disjoint")
        self.num_classes = int(self.num_classes)
        if self.num_classes <= 0:
            raise ParseError("num_classes must be positive")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ParseError(
                f"labels must lie in [0, {self.num_classes})"
            )

    @property
    def num_nodes(self) -> int:
        return self.hypergraph.num_nodes

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


def _dataset_payload(data: LabeledHypergraph) -> dict:
    return {
        "num_nodes": data.hypergraph.num_nodes,
        "hyperedges": [list(e) for e in data.hypergraph.edges],
        "features": data.features.tolist(),
        "labels": data.labels.tolist(),
        "train_mask": data.train_mask.tolist(),
        "val_mask": data.val_mask.tolist(),
        "test_mask": data.test_mask.tolist(),
        "num_classes": data.num_classes,
    }


def save_dataset(data: LabeledHypergraph, path: str | Path) -> None:
    """Write the JSON dataset format.

    Floats serialize via Python's shortest round-trip repr (at most 17
    significant digits), so save/load is bit-exact.
    """
    payload = _dataset_payload(data)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_dataset(path: str | Path) -> LabeledHypergraph:
    """Read a dataset file written by :func:`save_dataset`.

    Raises:
        ParseError: malformed JSON, missing keys, or labels out of range.
        ShapeMismatchError: array lengths inconsistent with num_nodes.
        MaskOverlapError: split masks intersect.
    """
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read dataset {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("dataset file must hold a JSON object")
    required = {
        "num_nodes",
        "hyperedges",
        "features",
        "labels",
        "train_mask",
        "val_mask",
        "test_mask",
    }
    missing = required - payload.keys()
    if missing:
        raise ParseError(f"dataset file missing keys: {sorted(missing)}")
    try:
        hg = build_hypergraph(payload["num_nodes"], payload["hyperedges"])
        labels = np.asarray(payload["labels"], dtype=np.int64)
        num_classes = payload.get("num_classes")
        if num_classes is None:
            num_classes = int(labels.max()) + 1 if labels.size else 1
        return LabeledHypergraph(
            hypergraph=hg,
            features=np.asarray(payload["features"], dtype=np.float64),
            labels=labels,
            train_mask=payload["train_mask"],
            val_mask=payload["val_mask"],
            test_mask=payload["test_mask"],
            num_classes=num_classes,
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"dataset file malformed: {exc}") from exc
