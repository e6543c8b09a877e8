"""Vectors, operators and inner products used by the solvers.

Vectors are plain 1-D ``float64`` numpy arrays. Anything with ``shape``,
``apply`` and ``apply_transpose`` works as an operator; :class:`CsrMatrix`
and :class:`DenseMatrix` are the concrete ones shipped here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import _kernels


class DimensionError(ValueError):
    pass


class LinearOperator(Protocol):
    shape: tuple[int, int]

    def apply(self, v: np.ndarray) -> np.ndarray: ...

    def apply_transpose(self, v: np.ndarray) -> np.ndarray: ...


def as_vector(v, name="vector") -> np.ndarray:
    """Validate and convert to a contiguous 1-D float64 array (copied)."""
    arr = np.array(v, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _check_same_length(u, v):
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")


def dot(u: np.ndarray, v: np.ndarray) -> float:
    """Standard inner product, accumulated left to right."""
    _check_same_length(u, v)
    return _kernels.dot(u, v)


def norm(v: np.ndarray) -> float:
    return math.sqrt(_kernels.dot(v, v))


class CsrMatrix:
    """Immutable compressed-sparse-row matrix.

    A transposed copy is built at construction so that ``apply_transpose``
    is a single CSR pass as well.
    """

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values, *, _transpose=None):
        self.shape = (int(n_rows), int(n_cols))
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._validate()
        for arr in (self.row_offsets, self.col_indices, self.values):
            arr.flags.writeable = False
        self._t = _transpose if _transpose is not None else self._build_transpose()

    def _validate(self):
        n_rows, n_cols = self.shape
        ro, ci, va = self.row_offsets, self.col_indices, self.values
        if n_rows < 0 or n_cols < 0:
            raise ValueError("negative dimension")
        if ro.shape != (n_rows + 1,):
            raise ValueError(f"row_offsets must have length n_rows+1={n_rows + 1}")
        if ro[0] != 0 or ro[-1] != va.shape[0] or ci.shape != va.shape:
            raise ValueError("row_offsets must start at 0 and end at nnz")
        if np.any(np.diff(ro) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if ci.size and (ci.min() < 0 or ci.max() >= n_cols):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(va)):
            raise ValueError("matrix values contain NaN or Inf")
        # strictly increasing columns within each row: sorted, no duplicates
        if ci.size > 1:
            rows = np.repeat(np.arange(n_rows), np.diff(ro))
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (np.diff(ci) <= 0)):
                raise ValueError("column indices must be strictly increasing within each row")

    def _build_transpose(self):
        n_rows, n_cols = self.shape
        rows = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(self.row_offsets))
        order = np.lexsort((rows, self.col_indices))
        t_offsets = np.zeros(n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.col_indices, minlength=n_cols), out=t_offsets[1:])
        return CsrMatrix(
            n_cols, n_rows, t_offsets, rows[order], self.values[order], _transpose=self
        )

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values):
        """Build from triplets; duplicate entries are summed, explicit zeros kept."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("column index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size:
            new = np.ones(rows.size, dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            group = np.cumsum(new) - 1
            summed = np.zeros(int(group[-1]) + 1)
            np.add.at(summed, group, values)
            rows, cols, values = rows[new], cols[new], summed
        offsets = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_rows), out=offsets[1:])
        return cls(n_rows, n_cols, offsets, cols, values)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError("dense matrix must be two-dimensional")
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @property
    def nnz(self):
        return int(self.values.shape[0])

    @property
    def T(self):
        return self._t

    def to_dense(self):
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.row_offsets))
        out[rows, self.col_indices] = self.values
        return out

    def frobenius_norm(self):
        return norm(np.asarray(self.values))

    def apply(self, v):
        if v.shape != (self.shape[1],):
            raise DimensionError(f"operator has {self.shape[1]} columns, vector has length {v.shape[0]}")
        return _kernels.csr_matvec(self.row_offsets, self.col_indices, self.values, v)

    def apply_transpose(self, v):
        return self._t.apply(v)

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


class DenseMatrix:
    """Dense operator backed by a numpy array (products go through BLAS)."""

    def __init__(self, a):
        a = np.array(a, dtype=np.float64, copy=True)
        if a.ndim != 2:
            raise DimensionError("dense matrix must be two-dimensional")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix contains NaN or Inf")
        a.flags.writeable = False
        self.array = a
        self.shape = a.shape

    def apply(self, v):
        if v.shape != (self.shape[1],):
            raise DimensionError(f"operator has {self.shape[1]} columns, vector has length {v.shape[0]}")
        return self.array @ v

    def apply_transpose(self, v):
        if v.shape != (self.shape[0],):
            raise DimensionError(f"operator has {self.shape[0]} rows, vector has length {v.shape[0]}")
        return self.array.T @ v

    def frobenius_norm(self):
        return float(np.linalg.norm(self.array))


class CountingOperator:
    """Wraps an operator and counts forward and transpose applications."""

    def __init__(self, op):
        self.op = op
        self.shape = op.shape
        self.n_apply = 0
        self.n_apply_transpose = 0

    def apply(self, v):
        self.n_apply += 1
        return self.op.apply(v)

    def apply_transpose(self, v):
        self.n_apply_transpose += 1
        return self.op.apply_transpose(v)


def matvec(A: LinearOperator, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or A.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot apply {A.shape} operator to vector of shape {v.shape}")
    return A.apply(v)


def matvec_transpose(A: LinearOperator, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or A.shape[0] != v.shape[0]:
        raise DimensionError(f"cannot apply transpose of {A.shape} operator to vector of shape {v.shape}")
    return A.apply_transpose(v)


@dataclass(frozen=True)
class PairedVector:
    """A 2n-vector stored as its two n-halves ``(top, bottom)``."""

    top: np.ndarray
    bottom: np.ndarray

    def __post_init__(self):
        if self.top.shape != self.bottom.shape or self.top.ndim != 1:
            raise DimensionError("both halves of a PairedVector must be 1-D of equal length")

    def __add__(self, other):
        return PairedVector(self.top + other.top, self.bottom + other.bottom)

    def __sub__(self, other):
        return PairedVector(self.top - other.top, self.bottom - other.bottom)

    def __mul__(self, scalar):
        return PairedVector(scalar * self.top, scalar * self.bottom)

    __rmul__ = __mul__

    def __len__(self):
        return 2 * self.top.shape[0]

    def to_array(self):
        return np.concatenate([self.top, self.bottom])


def quasi_inner_product(u: PairedVector, v: PairedVector) -> float:
    """The indefinite form u^T [[0, I], [I, 0]] v.

    Symmetric and bilinear but not positive definite, so it induces no norm.
    """
    if u.top.shape != v.top.shape:
        raise DimensionError(f"half-length mismatch: {u.top.shape[0]} vs {v.top.shape[0]}")
    return _kernels.dot(u.top, v.bottom) + _kernels.dot(u.bottom, v.top)


def block_apply(A: LinearOperator, v: PairedVector) -> PairedVector:
    """Apply diag(A, A^T) to a paired vector."""
    return PairedVector(A.apply(v.top), A.apply_transpose(v.bottom))


def toeplitz_test_matrix(n: int) -> CsrMatrix:
    """Banded Toeplitz matrix: 2 on the diagonal, 1 above it, 1.2 two below it."""
    if n < 3:
        raise ValueError(f"toeplitz_test_matrix needs n >= 3, got {n}")
    i = np.arange(n)
    rows = np.concatenate([i, i[:-1], i[2:]])
    cols = np.concatenate([i, i[1:], i[:-2]])
    vals = np.concatenate([np.full(n, 2.0), np.full(n - 1, 1.0), np.full(n - 2, 1.2)])
    return CsrMatrix.from_coo(n, n, rows, cols, vals)


def spd_random(n: int, seed: int) -> CsrMatrix:
    """Random SPD matrix ``M^T M + n I`` with ``M ~ U[-1, 1]`` from PCG64(seed)."""
    if n < 1:
        raise ValueError(f"spd_random needs n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    s = m.T @ m
    s = 0.5 * (s + s.T) + n * np.eye(n)
    return CsrMatrix.from_dense(s)


def random_nonsymmetric(n: int, seed: int, density: float = 0.2, shift: float | None = None) -> CsrMatrix:
    """Sparse random matrix with a diagonal shift, for tests and benchmarks."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    a = np.where(mask, rng.uniform(-1.0, 1.0, size=(n, n)), 0.0)
    a += (shift if shift is not None else 2.0 * math.sqrt(density * n)) * np.eye(n)
    return CsrMatrix.from_dense(a)
