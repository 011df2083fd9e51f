"""Model assembly: feature mixing, fusion layers, and prediction.

The full pipeline per forward pass:

1. project input features to the hidden width,
2. spectral identifier block (skippable),
3. topology-aware attention over the expansion views (skippable),
4. gated feature mixing into a static representation,
5. one or more hyperedge fusion layers (star fusion term skippable),
6. a final smoothing-operator convolution emitting class logits.

Disabled blocks are replaced by width-preserving pass-throughs so every
ablation sees identical downstream shapes. The two-layer spectral
baseline lives here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .attention import TaaParams, taa_forward
from .autodiff import (
    Tensor,
    add,
    concat_cols,
    dropout,
    matmul,
    mul,
    relu,
    sigmoid,
)
from .errors import ShapeMismatchError
from .hypergraph import Hypergraph, LabeledHypergraph
from .nn import Linear, glorot
from .precompute import StructureBundle, build_structure
from .spectral import sib_update

__all__ = [
    "Mode",
    "AblationFlags",
    "DropoutRates",
    "DphgnnParams",
    "HgnnParams",
    "ForwardTrace",
    "init_dphgnn",
    "init_hgnn",
    "feature_mix",
    "dff_forward",
    "predict_layer",
    "dphgnn_forward",
    "hgnn_baseline_forward",
]


class Mode(Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True)
class AblationFlags:
    use_taa: bool = True
    use_sib: bool = True
    use_dff: bool = True


@dataclass(frozen=True)
class DropoutRates:
    """Per-block dropout, applied only in train mode."""

    gnn: float = 0.0
    taa: float = 0.0
    sib: float = 0.0
    dff: float = 0.0


@dataclass(eq=False)
class DphgnnParams:
    """All learned tensors of the full model.

    ``hidden`` must be even: the mixing layers emit half-width blocks
    whose concatenation restores the hidden width.
    """

    proj: Linear                  # in_dim -> h
    taa: TaaParams                # delta (2h, 1), weight (h, h), thetas (h, h)
    sib_theta: Tensor             # (2h, 2h)
    mix_attended: Linear          # 2h -> h/2, on [spatial || spectral] attention
    mix_gate: Linear              # 2h -> h/2, gates via the identifier block
    mix_skip: Linear              # h -> h/2, on the projected input
    fusion_weights: list[Tensor]  # each (h, h)
    head_weight: Tensor           # (h, C)
    flags: AblationFlags = field(default_factory=AblationFlags)
    sib_lambda: float = 1.0

    def named_parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        out.update(self.proj.parameters("proj"))
        out.update(self.taa.parameters("taa"))
        out["sib.theta"] = self.sib_theta
        out.update(self.mix_attended.parameters("mix.attended"))
        out.update(self.mix_gate.parameters("mix.gate"))
        out.update(self.mix_skip.parameters("mix.skip"))
        for i, w in enumerate(self.fusion_weights):
            out[f"fusion.{i}.theta"] = w
        out["head.theta"] = self.head_weight
        return out

    def parameter_groups(self) -> dict[str, list[str]]:
        """Optimizer group per submodule, mirroring the config schema."""
        names = self.named_parameters()
        groups = {"gnn": [], "taa": [], "sib": [], "dff": []}
        for name in names:
            if name.startswith(("proj.", "taa.theta_")):
                groups["gnn"].append(name)
            elif name.startswith("taa."):
                groups["taa"].append(name)
            elif name.startswith(("sib.", "mix.")):
                groups["sib"].append(name)
            else:
                groups["dff"].append(name)
        return groups


@dataclass(eq=False)
class HgnnParams:
    """Two stacked spectral convolutions."""

    theta1: Tensor  # in_dim -> h
    theta2: Tensor  # h -> C

    def named_parameters(self) -> dict[str, Tensor]:
        return {"layer1.theta": self.theta1, "layer2.theta": self.theta2}

    def parameter_groups(self) -> dict[str, list[str]]:
        return {"gnn": list(self.named_parameters())}


@dataclass(eq=False)
class ForwardTrace:
    """Intermediate results of one full forward pass."""

    projected: Tensor
    spectral: Tensor
    attn_spatial: Tensor
    attn_spectral: Tensor
    static: Tensor
    fused: Tensor | None
    updated: Tensor
    logits: Tensor

    @property
    def equivariant(self) -> Tensor:
        """Gated half of the static features (first h/2 columns)."""
        from .autodiff import select_cols

        half = self.static.value.shape[1] // 2
        return select_cols(self.static, np.arange(half))


def init_dphgnn(
    rng: np.random.Generator,
    in_dim: int,
    hidden: int,
    num_classes: int,
    num_heads: int = 1,
    num_layers: int = 2,
    flags: AblationFlags | None = None,
    sib_lambda: float = 1.0,
) -> DphgnnParams:
    """Glorot-uniform weights, zero biases, fixed construction order."""
    if hidden % 2:
        raise ShapeMismatchError("hidden width must be even")
    if num_layers < 1:
        raise ShapeMismatchError("num_layers must be at least 1")
    h = hidden
    half = h // 2
    taa = TaaParams(
        delta=Tensor(glorot(rng, 2 * h, 1), requires_grad=True),
        weight=Tensor(glorot(rng, h, h), requires_grad=True),
        theta_clique=Tensor(glorot(rng, h, h), requires_grad=True),
        theta_star=Tensor(glorot(rng, h, h), requires_grad=True),
        theta_hypergcn=Tensor(glorot(rng, h, h), requires_grad=True),
        num_heads=num_heads,
    )
    return DphgnnParams(
        proj=Linear.init(rng, in_dim, h),
        taa=taa,
        sib_theta=Tensor(glorot(rng, 2 * h, 2 * h), requires_grad=True),
        mix_attended=Linear.init(rng, 2 * h, half),
        mix_gate=Linear.init(rng, 2 * h, half),
        mix_skip=Linear.init(rng, h, half),
        fusion_weights=[
            Tensor(glorot(rng, h, h), requires_grad=True) for _ in range(num_layers - 1)
        ],
        head_weight=Tensor(glorot(rng, h, num_classes), requires_grad=True),
        flags=flags or AblationFlags(),
        sib_lambda=sib_lambda,
    )


def init_hgnn(
    rng: np.random.Generator, in_dim: int, hidden: int, num_classes: int
) -> HgnnParams:
    return HgnnParams(
        theta1=Tensor(glorot(rng, in_dim, hidden), requires_grad=True),
        theta2=Tensor(glorot(rng, hidden, num_classes), requires_grad=True),
    )


def feature_mix(
    attn_spatial: Tensor,
    attn_spectral: Tensor,
    spectral: Tensor,
    projected: Tensor,
    params: DphgnnParams,
) -> Tensor:
    """Gate the attended views by the identifier block and append a skip.

    out = [ mix_attended([spatial || spectral_attn]) * sigmoid(ReLU(mix_gate(spectral)))
            || mix_skip(projected) ]

    A zero gate input leaves sigmoid(0) = 0.5, so the attended half is
    halved rather than nulled.
    """
    attended = params.mix_attended(concat_cols(attn_spatial, attn_spectral))
    gate = sigmoid(relu(params.mix_gate(spectral)))
    return concat_cols(mul(attended, gate), params.mix_skip(projected))


def dff_forward(
    hg: Hypergraph,
    star,
    static: Tensor,
    star_feats: Tensor,
    theta: Tensor,
    structure: StructureBundle | None = None,
    include_star_term: bool = True,
    trace_sink: dict | None = None,
) -> Tensor:
    """One hyperedge fusion layer.

    Aggregates node features onto edges two ways, then scatters back:

        fused = H^T D_v^{-1/2} static + D_e^{-1} (A_star static_rows) star_feats
        out   = ReLU(static + H D_e^{-1} fused theta)

    The second fused term gathers each supernode's member rows of the
    star-view features; with ``include_star_term=False`` (fusion ablated)
    only the incidence aggregation remains.
    """
    if structure is None:
        structure = build_structure(hg, np.zeros((hg.num_nodes, 1)))
    fused = matmul(structure.edge_from_node, static)
    if include_star_term:
        fused = add(fused, matmul(structure.super_gather, star_feats))
    if trace_sink is not None:
        trace_sink["fused"] = fused
    return relu(add(static, matmul(structure.node_from_edge, matmul(fused, theta))))


def predict_layer(
    hg: Hypergraph,
    x: Tensor,
    theta: Tensor,
    structure: StructureBundle | None = None,
) -> Tensor:
    """Final smoothing-operator convolution; raw logits, no activation."""
    if structure is None:
        structure = build_structure(hg, np.zeros((hg.num_nodes, 1)))
    return matmul(structure.laplacians.smoothing, matmul(x, theta))


def dphgnn_forward(
    data: LabeledHypergraph,
    params: DphgnnParams,
    mode: Mode = Mode.EVAL,
    structure: StructureBundle | None = None,
    rates: DropoutRates | None = None,
    rng: np.random.Generator | None = None,
) -> ForwardTrace:
    """Full model forward pass on a labeled dataset."""
    hg = data.hypergraph
    if structure is None:
        structure = build_structure(hg, data.features)
    rates = rates or DropoutRates()
    train = mode is Mode.TRAIN
    flags = params.flags

    x = Tensor(data.features)
    projected = params.proj(x)
    if train and rates.gnn:
        projected = dropout(projected, rates.gnn, rng=rng, train=True)

    if flags.use_sib:
        spectral = sib_update(
            hg, projected, params.sib_lambda, params.sib_theta,
            laplacians=structure.laplacians,
        )
        if train and rates.sib:
            spectral = dropout(spectral, rates.sib, rng=rng, train=True)
    else:
        spectral = concat_cols(projected, projected)

    if flags.use_taa:
        attn_spatial, attn_spectral, star_feats = taa_forward(
            hg, projected, structure.star, params.taa,
            structure=structure,
            attn_dropout=rates.taa if train else 0.0,
            rng=rng,
            train=train,
        )
    else:
        attn_spatial = attn_spectral = projected
        star_feats = None

    static = feature_mix(attn_spatial, attn_spectral, spectral, projected, params)

    if star_feats is None and flags.use_dff:
        # Fusion needs the star view even when attention is ablated.
        from .attention import UpdateVariant, single_layer_update
        from .autodiff import concat_rows

        pad = Tensor(np.zeros((hg.num_edges, projected.value.shape[1])))
        star_feats = single_layer_update(
            structure.star.graph,
            concat_rows(projected, pad),
            params.taa.theta_star,
            UpdateVariant.RESIDUAL_RW,
            prop=structure.prop_star,
        )

    current = static
    sink: dict = {}
    for theta in params.fusion_weights:
        current = dff_forward(
            hg, structure.star, current, star_feats, theta,
            structure=structure,
            include_star_term=flags.use_dff,
            trace_sink=sink,
        )
        if train and rates.dff:
            current = dropout(current, rates.dff, rng=rng, train=True)

    logits = predict_layer(hg, current, params.head_weight, structure=structure)
    return ForwardTrace(
        projected=projected,
        spectral=spectral,
        attn_spatial=attn_spatial,
        attn_spectral=attn_spectral,
        static=static,
        fused=sink.get("fused"),
        updated=current,
        logits=logits,
    )


def hgnn_baseline_forward(
    data: LabeledHypergraph,
    params: HgnnParams,
    structure: StructureBundle | None = None,
    dropout_rate: float = 0.0,
    mode: Mode = Mode.EVAL,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Two-layer spectral convolution baseline; returns logits."""
    hg = data.hypergraph
    if structure is None:
        structure = build_structure(hg, data.features)
    smoothing = structure.laplacians.smoothing
    train = mode is Mode.TRAIN
    x = Tensor(data.features)
    hidden = relu(matmul(smoothing, matmul(x, params.theta1)))
    if train and dropout_rate:
        hidden = dropout(hidden, dropout_rate, rng=rng, train=True)
    return matmul(smoothing, matmul(hidden, params.theta2))
