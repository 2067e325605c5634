"""Dense and compressed-row kernels plus the two nonlinearities the model uses.

Dense matrices are plain ``float64`` numpy arrays. Sparse matrices use the
:class:`SparseMatrix` CSR container below; products go through scipy's CSR
kernel, which walks each row's stored entries in order, so accumulation is
in ascending column order as long as the column indices are sorted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ShapeError


@dataclass(frozen=True)
class SparseMatrix:
    rows: int
    cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.row_offsets, dtype=np.int64)
        cols = np.asarray(self.col_indices, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if offsets.shape != (self.rows + 1,) or offsets[0] != 0 or offsets[-1] != len(cols):
            raise ShapeError("row_offsets must have rows+1 entries from 0 to nnz")
        if len(vals) != len(cols):
            raise ShapeError("col_indices and values differ in length")
        if np.any(np.diff(offsets) < 0):
            raise ShapeError("row_offsets must be monotone")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.cols):
            raise ShapeError("column index out of range")
        # a non-increasing step is only legal where a new row starts
        steps = np.diff(cols) <= 0
        starts = np.zeros(len(cols), dtype=bool)
        starts[offsets[1:-1][offsets[1:-1] < len(cols)]] = True
        if np.any(steps & ~starts[1:]):
            raise ShapeError("column indices within a row must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise ShapeError("sparse values must be finite")
        for name, arr in (("row_offsets", offsets), ("col_indices", cols), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self):
        return len(self.values)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_indices, self.row_offsets), shape=self.shape
        )

    @classmethod
    def from_dense(cls, dense) -> SparseMatrix:
        dense = np.asarray(dense, dtype=np.float64)
        m = sp.csr_matrix(dense)
        m.sort_indices()
        return cls(dense.shape[0], dense.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def from_scipy(cls, m) -> SparseMatrix:
        m = sp.csr_matrix(m, dtype=np.float64)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n: int) -> SparseMatrix:
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def densify(s: SparseMatrix) -> np.ndarray:
    return s.to_dense()


def spmm(s: SparseMatrix, d: np.ndarray) -> np.ndarray:
    """Sparse-times-dense product ``s @ d``."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or s.cols != d.shape[0]:
        raise ShapeError(f"spmm: cannot multiply {s.shape} by {d.shape}")
    return np.asarray(s.csr @ d)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_mask(x: np.ndarray) -> np.ndarray:
    # strict: the subgradient at exactly zero is 0
    return np.asarray(x) > 0.0


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    """``log(sigmoid(x))`` without overflow for large ``|x|``."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))
