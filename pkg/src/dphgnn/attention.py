"""Topology-aware attention over the three graph expansions.

Each expansion view is refreshed by a single message-passing step, then a
shared cross-attention layer mixes the views: the spatial path attends
from the star view over clique neighborhoods onto the distance-pair view,
and the spectral path does the same after premultiplying each view by its
graph Laplacian. Attention scores follow the additive form

    s_ij = LeakyReLU(delta^T [W q_i || W k_j])

restricted to j in N(i) or j = i, normalized row-wise by softmax. Heads
split the hidden width into equal slices that attend independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .autodiff import (
    Tensor,
    add,
    concat_rows,
    concat_cols,
    dropout,
    leaky_relu,
    matmul,
    mul,
    relu,
    segment_softmax,
    segment_sums,
    select_cols,
    select_rows,
)
from .errors import ShapeMismatchError
from .expand import Graph, RowTarget, StarGraph, row_mask
from .hypergraph import Hypergraph
from .sparse import SparseMatrix

if TYPE_CHECKING:  # pragma: no cover
    from .precompute import StructureBundle

__all__ = [
    "TaaParams",
    "UpdateVariant",
    "propagation_matrix",
    "single_layer_update",
    "cross_attention",
    "taa_forward",
]

LEAKY_SLOPE = 0.2


class UpdateVariant(Enum):
    """Normalization of the one-step message pass."""

    RESIDUAL_RW = "residual_rw"   # ReLU((I + D^{-1} A) x theta)
    SYM_NORM = "sym_norm"         # ReLU(D^{-1/2} (A + I) D^{-1/2} x theta) with self-loop degrees


@dataclass(eq=False)
class TaaParams:
    """Learned pieces of the attention block.

    ``delta`` is the (2h, 1) score vector, ``weight`` the shared h x h
    projection, and the three thetas drive the per-view updates.
    """

    delta: Tensor
    weight: Tensor
    theta_clique: Tensor
    theta_star: Tensor
    theta_hypergcn: Tensor
    num_heads: int = 1

    def parameters(self, prefix: str = "taa") -> dict[str, Tensor]:
        return {
            f"{prefix}.delta": self.delta,
            f"{prefix}.weight": self.weight,
            f"{prefix}.theta_clique": self.theta_clique,
            f"{prefix}.theta_star": self.theta_star,
            f"{prefix}.theta_hypergcn": self.theta_hypergcn,
        }


def propagation_matrix(g: Graph, variant: UpdateVariant) -> SparseMatrix:
    """Constant propagation operator for :func:`single_layer_update`.

    Residual random-walk rows of isolated vertices fall back to the bare
    identity (their D^{-1} row is taken as zero).
    """
    n = g.num_vertices
    eye = SparseMatrix.identity(n)
    if variant is UpdateVariant.RESIDUAL_RW:
        inv = np.zeros(n)
        nonzero = g.degrees > 0
        inv[nonzero] = 1.0 / g.degrees[nonzero]
        return eye.add(g.adjacency.scale_rows(inv))
    if variant is UpdateVariant.SYM_NORM:
        with_loops = g.adjacency.add(eye)
        inv_sqrt = 1.0 / np.sqrt(with_loops.row_sums())
        return with_loops.scale_rows(inv_sqrt).scale_cols(inv_sqrt)
    raise ValueError(f"unknown variant {variant!r}")  # pragma: no cover


def single_layer_update(
    g: Graph,
    x: Tensor | np.ndarray,
    theta: Tensor | np.ndarray,
    variant: UpdateVariant,
    prop: SparseMatrix | None = None,
) -> Tensor:
    """One normalized message-passing step with ReLU."""
    if prop is None:
        prop = propagation_matrix(g, variant)
    return relu(matmul(matmul(prop, x), theta))


def _head_slices(width: int, num_heads: int) -> list[slice]:
    if num_heads < 1 or width % num_heads:
        raise ShapeMismatchError(
            f"num_heads={num_heads} must divide the hidden width {width}"
        )
    step = width // num_heads
    return [slice(i * step, (i + 1) * step) for i in range(num_heads)]


def cross_attention(
    query: Tensor,
    key: Tensor,
    value: Tensor,
    neighborhoods: np.ndarray | SparseMatrix,
    params: TaaParams,
    attn_dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    train: bool = False,
) -> Tensor:
    """Neighborhood-masked additive attention.

    ``neighborhoods`` is an n x n adjacency (dense boolean or sparse);
    each node attends over its neighbors plus itself. With a zero score
    vector the output row i is the plain mean of projected values over
    that set.
    """
    if isinstance(neighborhoods, SparseMatrix):
        mask = neighborhoods.to_dense() != 0.0
    else:
        mask = np.asarray(neighborhoods) != 0.0
    n = mask.shape[0]
    if mask.shape != (n, n):
        raise ShapeMismatchError("neighborhoods must be square")
    mask = mask | np.eye(n, dtype=bool)
    # Scores exist only for admissible (i, j) pairs, laid out row-major so
    # each node's candidates form one contiguous segment.
    pair_rows, pair_cols = np.nonzero(mask)
    indptr = np.concatenate(([0], np.cumsum(mask.sum(axis=1))))

    width = params.weight.value.shape[1]
    q_proj = matmul(query, params.weight)
    k_proj = matmul(key, params.weight)
    v_proj = matmul(value, params.weight)
    d_query = select_rows(params.delta, np.arange(width))
    d_key = select_rows(params.delta, np.arange(width, 2 * width))

    head_outputs = []
    for sl in _head_slices(width, params.num_heads):
        head_cols = np.arange(sl.start, sl.stop)
        q_score = matmul(select_cols(q_proj, head_cols), select_rows(d_query, head_cols))
        k_score = matmul(select_cols(k_proj, head_cols), select_rows(d_key, head_cols))
        scores = leaky_relu(
            add(select_rows(q_score, pair_rows), select_rows(k_score, pair_cols)),
            LEAKY_SLOPE,
        )
        weights = segment_softmax(scores, indptr)
        if attn_dropout:
            weights = dropout(weights, attn_dropout, rng=rng, train=train)
        spread = matmul(weights, Tensor(np.ones((1, head_cols.size))))
        picked = select_rows(select_cols(v_proj, head_cols), pair_cols)
        head_outputs.append(segment_sums(mul(spread, picked), indptr))
    out = head_outputs[0]
    for extra in head_outputs[1:]:
        out = concat_cols(out, extra)
    return out


def taa_forward(
    hg: Hypergraph,
    x: Tensor | np.ndarray,
    star: StarGraph,
    params: TaaParams,
    structure: "StructureBundle | None" = None,
    attn_dropout: float = 0.0,
    update_dropout: float = 0.0,
    rng: np.random.Generator | None = None,
    train: bool = False,
) -> tuple[Tensor, Tensor, Tensor]:
    """Run both attention paths.

    Returns (spatial attention, spectral attention, star view features);
    the star features live on all n + m star vertices and also feed the
    fusion layer downstream. Supernode rows of the star input start at
    zero, so after one residual step a supernode carries the mean of its
    member features.
    """
    from .precompute import build_structure

    if structure is None:
        structure = build_structure(hg, _plain_value(x))
    x = x if isinstance(x, Tensor) else Tensor(x)
    n, m = star.num_nodes, star.num_supernodes

    pad = Tensor(np.zeros((m, x.value.shape[1])))
    star_input = concat_rows(x, pad)
    star_feats = single_layer_update(
        structure.star.graph, star_input, params.theta_star,
        UpdateVariant.RESIDUAL_RW, prop=structure.prop_star,
    )
    clique_feats = single_layer_update(
        structure.clique, x, params.theta_clique,
        UpdateVariant.RESIDUAL_RW, prop=structure.prop_clique,
    )
    hyper_feats = single_layer_update(
        structure.hypergcn, x, params.theta_hypergcn,
        UpdateVariant.SYM_NORM, prop=structure.prop_hypergcn,
    )
    if update_dropout:
        star_feats = dropout(star_feats, update_dropout, rng=rng, train=train)
        clique_feats = dropout(clique_feats, update_dropout, rng=rng, train=train)
        hyper_feats = dropout(hyper_feats, update_dropout, rng=rng, train=train)

    spatial = cross_attention(
        row_mask(star_feats, RowTarget.NODES, star),
        clique_feats,
        hyper_feats,
        structure.attention_mask,
        params,
        attn_dropout=attn_dropout,
        rng=rng,
        train=train,
    )
    spectral_star = row_mask(
        matmul(structure.laplacians.star, star_feats), RowTarget.NODES, star
    )
    spectral = cross_attention(
        spectral_star,
        matmul(structure.laplacians.clique, clique_feats),
        matmul(structure.laplacians.hypergcn, hyper_feats),
        structure.attention_mask,
        params,
        attn_dropout=attn_dropout,
        rng=rng,
        train=train,
    )
    return spatial, spectral, star_feats


def _plain_value(x) -> np.ndarray:
    return x.value if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
