"""Sparse dataset containers and the per-class sufficient statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class DataError(ValueError):
    """Malformed or degenerate input data."""


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseCountMatrix:
    """Non-negative CSR matrix, rows are documents.

    Values may be counts or any non-negative weights (tf-idf etc.).
    Duplicate column indices within a row are rejected, never merged.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_idx", _frozen(self.col_idx, np.int64))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        self._validate()

    def _validate(self):
        rp, ci, vals = self.row_ptr, self.col_idx, self.values
        if self.n_rows < 0 or self.n_cols < 0:
            raise DataError("negative matrix dimensions")
        if rp.shape != (self.n_rows + 1,):
            raise DataError("row_ptr must have length n_rows + 1")
        if rp[0] != 0 or rp[-1] != len(vals) or len(ci) != len(vals):
            raise DataError("row_ptr endpoints inconsistent with stored entries")
        if np.any(np.diff(rp) < 0):
            raise DataError("row_ptr must be nondecreasing")
        if len(ci) and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise DataError("column index out of range")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise DataError("values must be finite and non-negative")
        if len(ci) > 1:
            # strictly increasing inside each row; row starts are exempt
            step = np.diff(ci) > 0
            starts = rp[1:-1]
            starts = starts[(starts > 0) & (starts < len(ci))]
            step[starts - 1] = True
            if not np.all(step):
                raise DataError("column indices must be strictly increasing within a row")

    @property
    def nnz(self) -> int:
        return len(self.values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @classmethod
    def from_dense(cls, dense) -> "SparseCountMatrix":
        dense = np.atleast_2d(np.asarray(dense, dtype=np.float64))
        csr = sp.csr_matrix(dense)
        csr.sort_indices()
        return cls(dense.shape[0], dense.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_scipy(cls, mat) -> "SparseCountMatrix":
        csr = sp.csr_matrix(mat)
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=(self.n_rows, self.n_cols)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))

    def dot(self, w: np.ndarray) -> np.ndarray:
        """Row-wise inner products with a dense weight vector."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_cols,):
            raise DataError(f"weight vector has length {w.shape}, matrix has {self.n_cols} columns")
        out = np.zeros(self.n_rows)
        np.add.at(out, self.row_ids(), self.values * w[self.col_idx])
        return out

    def select_columns(self, columns) -> "SparseCountMatrix":
        """Restrict to ``columns`` (renumbered 0..len-1 in the given order)."""
        columns = np.asarray(columns, dtype=np.int64)
        return SparseCountMatrix.from_scipy(self.to_scipy()[:, columns])


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    x: SparseCountMatrix
    y: np.ndarray

    def __post_init__(self):
        y = _frozen(self.y, np.int64)
        object.__setattr__(self, "y", y)
        if y.shape != (self.x.n_rows,):
            raise DataError("label vector length does not match number of rows")
        if not np.all(np.isin(y, (-1, 1))):
            raise DataError("labels must be -1 or +1")

    @property
    def n_features(self) -> int:
        return self.x.n_cols


@dataclass(frozen=True, eq=False)
class ClassSummary:
    """Per-class column sums ``f_plus``/``f_minus`` and class sizes.

    These are sufficient statistics for every fit in the package.  Class
    sizes are floats so that smoothed summaries fit the same container.
    """

    f_plus: np.ndarray
    f_minus: np.ndarray
    n_plus: float
    n_minus: float

    def __post_init__(self):
        fp = _frozen(self.f_plus, np.float64)
        fm = _frozen(self.f_minus, np.float64)
        object.__setattr__(self, "f_plus", fp)
        object.__setattr__(self, "f_minus", fm)
        if fp.ndim != 1 or fp.shape != fm.shape:
            raise DataError("f_plus and f_minus must be vectors of equal length")
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise DataError("class sums must be finite")
        if np.any(fp < 0) or np.any(fm < 0):
            raise DataError("class sums must be non-negative")
        if self.n_plus < 0 or self.n_minus < 0:
            raise DataError("class sizes must be non-negative")

    @property
    def m(self) -> int:
        return len(self.f_plus)

    @property
    def total(self) -> np.ndarray:
        return self.f_plus + self.f_minus

    @property
    def log_prior_ratio(self) -> float:
        return float(np.log(self.n_plus) - np.log(self.n_minus))

    def swapped(self) -> "ClassSummary":
        return ClassSummary(self.f_minus, self.f_plus, self.n_minus, self.n_plus)


def summarize(ds: LabeledDataset) -> ClassSummary:
    """Class-conditional column sums in one pass over the nonzeros."""
    y = ds.y
    n_plus = int(np.count_nonzero(y == 1))
    n_minus = len(y) - n_plus
    if n_plus == 0 or n_minus == 0:
        raise DataError("degenerate labels: both classes need at least one row")
    x = ds.x
    m = x.n_cols
    positive = y[x.row_ids()] == 1
    f_plus = np.bincount(x.col_idx[positive], weights=x.values[positive], minlength=m)
    f_minus = np.bincount(x.col_idx[~positive], weights=x.values[~positive], minlength=m)
    return ClassSummary(f_plus, f_minus, n_plus, n_minus)


def binarize(x: SparseCountMatrix) -> SparseCountMatrix:
    """Replace every stored value by 1, keeping the sparsity pattern."""
    return SparseCountMatrix(x.n_rows, x.n_cols, x.row_ptr, x.col_idx, np.ones(x.nnz))
