"""Row-compressed sparse matrices over float64.

Only the operations the hypergraph pipeline needs are implemented:
construction from COO triplets, dense round-trips, transposition,
sparse @ dense and sparse @ sparse products, elementwise addition,
diagonal scaling, and contiguous row slicing.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError

__all__ = ["SparseMatrix"]


def _ranges(lengths: np.ndarray) -> np.ndarray:
    # Concatenation of arange(l) for each l in lengths.
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    return np.arange(total, dtype=np.int64) - np.repeat(starts, lengths)


class SparseMatrix:
    """CSR matrix: row offsets, column indices, and values.

    Invariants: ``indptr`` has ``rows + 1`` monotone entries ending at nnz,
    column indices are strictly increasing within each row, and no stored
    value is exactly zero.
    """

    __slots__ = ("rows", "cols", "indptr", "indices", "data", "_transpose")

    def __init__(self, rows: int, cols: int, indptr, indices, data, validate: bool = True):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self._transpose: SparseMatrix | None = None
        if validate:
            self._check()

    def _check(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ShapeMismatchError("negative matrix dimensions")
        if self.indptr.shape != (self.rows + 1,):
            raise ShapeMismatchError("indptr length must be rows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ShapeMismatchError("indptr must start at 0 and end at nnz")
        if np.any(np.diff(self.indptr) < 0):
            raise ShapeMismatchError("indptr must be monotone")
        if len(self.indices) != len(self.data):
            raise ShapeMismatchError("indices and data lengths differ")
        if len(self.indices):
            if self.indices.min() < 0 or self.indices.max() >= self.cols:
                raise ShapeMismatchError("column index out of range")
            # Strictly increasing columns inside each row.
            same_row = np.repeat(np.arange(self.rows), np.diff(self.indptr))
            d = np.diff(self.indices)
            bad = (d <= 0) & (np.diff(same_row) == 0)
            if np.any(bad):
                raise ShapeMismatchError("column indices must increase within a row")
        if np.any(self.data == 0.0):
            raise ShapeMismatchError("explicit zeros are not stored")

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_coo(cls, rows: int, cols: int, row_idx, col_idx, values) -> SparseMatrix:
        """Build from triplets; duplicate positions are summed, zeros dropped."""
        r = np.asarray(row_idx, dtype=np.int64).ravel()
        c = np.asarray(col_idx, dtype=np.int64).ravel()
        v = np.asarray(values, dtype=np.float64).ravel()
        if not (len(r) == len(c) == len(v)):
            raise ShapeMismatchError("COO triplet arrays differ in length")
        if len(r):
            if r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols:
                raise ShapeMismatchError("COO index out of range")
            order = np.lexsort((c, r))
            r, c, v = r[order], c[order], v[order]
            first = np.concatenate(([True], (r[1:] != r[:-1]) | (c[1:] != c[:-1])))
            starts = np.flatnonzero(first)
            v = np.add.reduceat(v, starts)
            r, c = r[starts], c[starts]
            keep = v != 0.0
            r, c, v = r[keep], c[keep], v[keep]
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=rows), out=indptr[1:])
        return cls(rows, cols, indptr, c, v)

    @classmethod
    def from_dense(cls, dense) -> SparseMatrix:
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise ShapeMismatchError("from_dense expects a 2-d array")
        r, c = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], r, c, dense[r, c])

    @classmethod
    def identity(cls, n: int) -> SparseMatrix:
        idx = np.arange(n, dtype=np.int64)
        return cls(n, n, np.arange(n + 1, dtype=np.int64), idx, np.ones(n))

    @classmethod
    def from_diag(cls, diag) -> SparseMatrix:
        diag = np.asarray(diag, dtype=np.float64).ravel()
        n = len(diag)
        idx = np.arange(n, dtype=np.int64)
        return cls.from_coo(n, n, idx, idx, diag)

    # ------------------------------------------------------------------
    # basic queries

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        if self.nnz:
            row_of = np.repeat(np.arange(self.rows), np.diff(self.indptr))
            out[row_of, self.indices] = self.data
        return out

    def to_coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        row_of = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))
        return row_of, self.indices.copy(), self.data.copy()

    def row_sums(self) -> np.ndarray:
        out = np.zeros(self.rows)
        if self.nnz:
            row_of = np.repeat(np.arange(self.rows), np.diff(self.indptr))
            np.add.at(out, row_of, self.data)
        return out

    def diagonal(self) -> np.ndarray:
        out = np.zeros(min(self.rows, self.cols))
        r, c, v = self.to_coo()
        on_diag = r == c
        out[r[on_diag]] = v[on_diag]
        return out

    # ------------------------------------------------------------------
    # algebra

    def transpose(self) -> SparseMatrix:
        if self._transpose is None:
            r, c, v = self.to_coo()
            t = SparseMatrix.from_coo(self.cols, self.rows, c, r, v)
            t._transpose = self
            self._transpose = t
        return self._transpose

    @property
    def T(self) -> SparseMatrix:
        return self.transpose()

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return self._matmul_sparse(other)
        return self.matmul_dense(other)

    def matmul_dense(self, other) -> np.ndarray:
        other = np.asarray(other, dtype=np.float64)
        if other.ndim != 2 or other.shape[0] != self.cols:
            raise ShapeMismatchError(
                f"cannot multiply {self.shape} by {other.shape}"
            )
        out = np.zeros((self.rows, other.shape[1]))
        if self.nnz == 0 or other.shape[1] == 0:
            return out
        contrib = self.data[:, None] * other[self.indices]
        starts = self.indptr[:-1]
        nonempty = np.flatnonzero(self.indptr[1:] > starts)
        # reduceat over starts of nonempty rows only; each segment ends at the
        # next listed start because the skipped rows hold no entries.
        out[nonempty] = np.add.reduceat(contrib, starts[nonempty], axis=0)
        return out

    def _matmul_sparse(self, other: SparseMatrix) -> SparseMatrix:
        if self.cols != other.rows:
            raise ShapeMismatchError(
                f"cannot multiply {self.shape} by {other.shape}"
            )
        if self.nnz == 0 or other.nnz == 0:
            return SparseMatrix.from_coo(self.rows, other.cols, [], [], [])
        a_row = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))
        fan = np.diff(other.indptr)[self.indices]
        pos = np.repeat(other.indptr[self.indices], fan) + _ranges(fan)
        out_r = np.repeat(a_row, fan)
        out_c = other.indices[pos]
        out_v = np.repeat(self.data, fan) * other.data[pos]
        return SparseMatrix.from_coo(self.rows, other.cols, out_r, out_c, out_v)

    def add(self, other: SparseMatrix) -> SparseMatrix:
        if self.shape != other.shape:
            raise ShapeMismatchError("shapes differ in add")
        r1, c1, v1 = self.to_coo()
        r2, c2, v2 = other.to_coo()
        return SparseMatrix.from_coo(
            self.rows,
            self.cols,
            np.concatenate([r1, r2]),
            np.concatenate([c1, c2]),
            np.concatenate([v1, v2]),
        )

    def scale(self, factor: float) -> SparseMatrix:
        r, c, v = self.to_coo()
        return SparseMatrix.from_coo(self.rows, self.cols, r, c, v * factor)

    def scale_rows(self, factors) -> SparseMatrix:
        """Left-multiply by diag(factors)."""
        factors = np.asarray(factors, dtype=np.float64).ravel()
        if len(factors) != self.rows:
            raise ShapeMismatchError("row scaling vector has wrong length")
        r, c, v = self.to_coo()
        return SparseMatrix.from_coo(self.rows, self.cols, r, c, v * factors[r])

    def scale_cols(self, factors) -> SparseMatrix:
        """Right-multiply by diag(factors)."""
        factors = np.asarray(factors, dtype=np.float64).ravel()
        if len(factors) != self.cols:
            raise ShapeMismatchError("column scaling vector has wrong length")
        r, c, v = self.to_coo()
        return SparseMatrix.from_coo(self.rows, self.cols, r, c, v * factors[c])

    def take_row_range(self, lo: int, hi: int) -> SparseMatrix:
        """Contiguous row slice [lo, hi) as a new matrix."""
        if not (0 <= lo <= hi <= self.rows):
            raise ShapeMismatchError("row range out of bounds")
        a, b = self.indptr[lo], self.indptr[hi]
        return SparseMatrix(
            hi - lo,
            self.cols,
            self.indptr[lo : hi + 1] - a,
            self.indices[a:b],
            self.data[a:b],
        )

    def __repr__(self) -> str:  # pragma: no cover
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"
