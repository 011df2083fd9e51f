"""Minimal reverse-mode automatic differentiation on dense float64 arrays.

Tensors hold at most two axes (plus 0-d scalars for losses). Every op
records its parents and a backward closure; ``backward`` runs a reverse
topological sweep and accumulates gradients into tensors that require
them. Structure matrices enter as constants, either dense or as
:class:`~dphgnn.sparse.SparseMatrix`, and never receive gradients.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import EmptyMaskError, NonScalarLossError, ShapeMismatchError
from .sparse import SparseMatrix

__all__ = [
    "Tensor",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "concat_cols",
    "concat_rows",
    "relu",
    "leaky_relu",
    "sigmoid",
    "softmax_rows",
    "segment_softmax",
    "segment_sums",
    "dropout",
    "select_rows",
    "select_cols",
    "transpose",
    "sum_all",
    "cross_entropy",
    "backward",
    "grad_check",
]


class Tensor:
    """Array node in the computation graph."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        if self.value.ndim > 2:
            raise ShapeMismatchError("tensors hold at most two axes")
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the functional forms below do the work.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(value: np.ndarray, parents: tuple[Tensor, ...], bwd) -> Tensor:
    out = Tensor(value)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = bwd
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient g down to the given broadcast source shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ----------------------------------------------------------------------
# elementwise and structural ops


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    val = a.value + b.value

    def bwd(g):
        _accum(a, _unbroadcast(g, a.value.shape))
        _accum(b, _unbroadcast(g, b.value.shape))

    return _make(val, (a, b), bwd)


def sub(a, b) -> Tensor:
    return add(a, scale(b, -1.0))


def mul(a, b) -> Tensor:
    """Hadamard product with numpy broadcasting."""
    a, b = as_tensor(a), as_tensor(b)
    val = a.value * b.value

    def bwd(g):
        _accum(a, _unbroadcast(g * b.value, a.value.shape))
        _accum(b, _unbroadcast(g * a.value, b.value.shape))

    return _make(val, (a, b), bwd)


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)
    val = a.value * factor

    def bwd(g):
        _accum(a, g * factor)

    return _make(val, (a,), bwd)


def matmul(a, b) -> Tensor:
    """Matrix product; ``a`` may be a constant SparseMatrix."""
    if isinstance(a, SparseMatrix):
        b = as_tensor(b)
        val = a.matmul_dense(b.value)

        def bwd_sparse(g):
            _accum(b, a.transpose().matmul_dense(g))

        return _make(val, (b,), bwd_sparse)

    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise ShapeMismatchError("matmul expects two-axis tensors")
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeMismatchError(
            f"cannot multiply {a.value.shape} by {b.value.shape}"
        )
    val = a.value @ b.value

    def bwd(g):
        _accum(a, g @ b.value.T)
        _accum(b, a.value.T @ g)

    return _make(val, (a, b), bwd)


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.shape[0] != b.value.shape[0]:
        raise ShapeMismatchError("concat_cols needs equal row counts")
    val = np.concatenate([a.value, b.value], axis=1)
    split = a.value.shape[1]

    def bwd(g):
        _accum(a, g[:, :split])
        _accum(b, g[:, split:])

    return _make(val, (a, b), bwd)


def concat_rows(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.value.shape[1] != b.value.shape[1]:
        raise ShapeMismatchError("concat_rows needs equal column counts")
    val = np.concatenate([a.value, b.value], axis=0)
    split = a.value.shape[0]

    def bwd(g):
        _accum(a, g[:split])
        _accum(b, g[split:])

    return _make(val, (a, b), bwd)


def relu(a) -> Tensor:
    a = as_tensor(a)
    keep = a.value > 0
    val = np.where(keep, a.value, 0.0)

    def bwd(g):
        _accum(a, g * keep)

    return _make(val, (a,), bwd)


def leaky_relu(a, negative_slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    pos = a.value > 0
    val = np.where(pos, a.value, negative_slope * a.value)

    def bwd(g):
        _accum(a, g * np.where(pos, 1.0, negative_slope))

    return _make(val, (a,), bwd)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # Split by sign to stay overflow-free.
    x = a.value
    val = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def bwd(g):
        _accum(a, g * val * (1.0 - val))

    return _make(val, (a,), bwd)


def softmax_rows(a, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax, optionally restricted to a boolean mask.

    Masked-out positions get probability zero and zero gradient. Every row
    must keep at least one admissible position.
    """
    a = as_tensor(a)
    x = a.value
    if x.ndim != 2:
        raise ShapeMismatchError("softmax_rows expects a two-axis tensor")
    if mask is None:
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeMismatchError("softmax mask shape mismatch")
        if not mask.any(axis=1).all():
            raise EmptyMaskError("softmax row with no admissible positions")
        shifted = x - np.where(mask, x, -np.inf).max(axis=1, keepdims=True)
        e = np.where(mask, np.exp(shifted), 0.0)
    val = e / e.sum(axis=1, keepdims=True)

    def bwd(g):
        inner = (g * val).sum(axis=1, keepdims=True)
        _accum(a, val * (g - inner))

    return _make(val, (a,), bwd)


def _check_segments(indptr: np.ndarray, total: int) -> np.ndarray:
    indptr = np.asarray(indptr, dtype=np.int64)
    if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0 or indptr[-1] != total:
        raise ShapeMismatchError("indptr must run from 0 to the row count")
    lengths = np.diff(indptr)
    if np.any(lengths < 0):
        raise ShapeMismatchError("indptr must be non-decreasing")
    if np.any(lengths == 0):
        raise EmptyMaskError("segment with no rows")
    return indptr


def segment_softmax(a, indptr: np.ndarray) -> Tensor:
    """Softmax over contiguous row segments of an (n, 1) tensor.

    ``indptr`` delimits segments the way CSR row pointers do; every
    segment must be non-empty. Used for neighborhood attention where row
    i's candidate scores are stored contiguously.
    """
    a = as_tensor(a)
    x = a.value
    if x.ndim != 2 or x.shape[1] != 1:
        raise ShapeMismatchError("segment_softmax expects an (n, 1) tensor")
    indptr = _check_segments(indptr, x.shape[0])
    starts = indptr[:-1]
    seg_id = np.repeat(np.arange(starts.size), np.diff(indptr))
    flat = x[:, 0]
    if flat.size:
        shifted = flat - np.maximum.reduceat(flat, starts)[seg_id]
        e = np.exp(shifted)
        val_flat = e / np.add.reduceat(e, starts)[seg_id]
    else:
        val_flat = flat.copy()
    val = val_flat[:, None]

    def bwd(g):
        gf = g[:, 0]
        if gf.size:
            inner = np.add.reduceat(val_flat * gf, starts)[seg_id]
        else:
            inner = gf
        _accum(a, (val_flat * (gf - inner))[:, None])

    return _make(val, (a,), bwd)


def segment_sums(a, indptr: np.ndarray) -> Tensor:
    """Sum contiguous row segments; returns one row per segment."""
    a = as_tensor(a)
    x = a.value
    if x.ndim != 2:
        raise ShapeMismatchError("segment_sums expects a two-axis tensor")
    indptr = _check_segments(indptr, x.shape[0])
    starts = indptr[:-1]
    if x.shape[0]:
        val = np.add.reduceat(x, starts, axis=0)
    else:
        val = np.zeros((0, x.shape[1]))
    seg_id = np.repeat(np.arange(starts.size), np.diff(indptr))

    def bwd(g):
        _accum(a, g[seg_id])

    return _make(val, (a,), bwd)


def dropout(a, p: float, rng: np.random.Generator | int | None = None, train: bool = True) -> Tensor:
    """Inverted dropout: kept entries are scaled by 1 / (1 - p).

    With ``train=False`` or ``p == 0`` the input tensor is returned
    unchanged.
    """
    a = as_tensor(a)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return a
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    keep = rng.random(a.value.shape) >= p
    factor = keep / (1.0 - p)
    val = a.value * factor

    def bwd(g):
        _accum(a, g * factor)

    return _make(val, (a,), bwd)


def select_rows(a, index: np.ndarray) -> Tensor:
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    val = a.value[index]

    def bwd(g):
        full = np.zeros_like(a.value)
        np.add.at(full, index, g)
        _accum(a, full)

    return _make(val, (a,), bwd)


def select_cols(a, index: np.ndarray) -> Tensor:
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    val = a.value[:, index]

    def bwd(g):
        full = np.zeros_like(a.value)
        np.add.at(full.T, index, g.T)
        _accum(a, full)

    return _make(val, (a,), bwd)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    val = a.value.T.copy()

    def bwd(g):
        _accum(a, g.T)

    return _make(val, (a,), bwd)


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    val = np.asarray(a.value.sum())

    def bwd(g):
        _accum(a, np.broadcast_to(g, a.value.shape))

    return _make(val, (a,), bwd)


def cross_entropy(logits, labels: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean negative log-likelihood over masked rows.

    Uses a shifted log-sum-exp; the gradient is (softmax - onehot) / k on
    masked rows and zero elsewhere.
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if logits.value.ndim != 2:
        raise ShapeMismatchError("cross_entropy expects (n, C) logits")
    n, c = logits.value.shape
    if labels.shape != (n,) or mask.shape != (n,):
        raise ShapeMismatchError("labels/mask must have one entry per row")
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise EmptyMaskError("cross_entropy over an empty mask")
    z = logits.value[rows]
    y = labels[rows]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=1))
    val = np.asarray(np.mean(lse - z[np.arange(rows.size), y]))

    def bwd(g):
        soft = np.exp(z - zmax)
        soft /= soft.sum(axis=1, keepdims=True)
        soft[np.arange(rows.size), y] -= 1.0
        full = np.zeros_like(logits.value)
        full[rows] = soft * (float(g) / rows.size)
        _accum(logits, full)

    return _make(val, (logits,), bwd)


# ----------------------------------------------------------------------
# backward pass and gradient checking


def backward(loss: Tensor) -> None:
    """Reverse-accumulate gradients from a scalar loss."""
    if loss.value.size != 1:
        raise NonScalarLossError(
            f"backward needs a scalar, got shape {loss.value.shape}"
        )
    if not loss.requires_grad:
        return
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.value)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Iterable[Tensor],
    eps: float = 1e-5,
    max_entries: int = 200,
    seed: int = 0,
) -> float:
    """Compare analytic gradients of ``f`` against central differences.

    ``f`` must be deterministic and rebuild its graph on every call. All
    entries are checked for parameters of at most ``max_entries`` values;
    larger parameters use a seeded sample of ``max_entries`` entries.
    Returns the maximum relative error, where differences below 1e-9 in
    absolute value count as zero.
    """
    if isinstance(params, Mapping):
        tensors = list(params.values())
    else:
        tensors = list(params)
    for t in tensors:
        t.zero_grad()
    loss = f()
    backward(loss)
    analytic = [np.zeros_like(t.value) if t.grad is None else t.grad.copy() for t in tensors]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for t, ana in zip(tensors, analytic):
        flat = t.value.reshape(-1)
        size = flat.size
        if size <= max_entries:
            picks = np.arange(size)
        else:
            picks = rng.choice(size, size=max_entries, replace=False)
        ana_flat = ana.reshape(-1)
        for idx in picks:
            orig = flat[idx]
            flat[idx] = orig + eps
            hi = float(f().value)
            flat[idx] = orig - eps
            lo = float(f().value)
            flat[idx] = orig
            numeric = (hi - lo) / (2.0 * eps)
            diff = abs(ana_flat[idx] - numeric)
            if diff < 1e-9:
                continue
            denom = max(abs(ana_flat[idx]), abs(numeric))
            worst = max(worst, diff / denom)
    return worst
