"""Compressed sparse row matrices and the reference SpMV kernel.

CSR keeps the nonzeros of each row contiguous in memory; a row pointer
array of length ``nrows + 1`` marks row boundaries inside the ``colind``
and ``values`` arrays.  Every kernel in this package funnels through the
per-row accumulation implemented here, so that for identical inputs the
output vector is reproducible bit for bit regardless of how the rows are
partitioned across workers.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

_INDEX_DTYPES = {32: np.int32, 64: np.int64}

# Running count of kernel executions.  Used to demonstrate that feature-based
# advice never touches an SpMV kernel.
_kernel_calls = 0


def _count_kernel_call() -> None:
    global _kernel_calls
    _kernel_calls += 1


def kernel_call_count() -> int:
    """Number of SpMV-style kernel executions since the last reset."""
    return _kernel_calls


def reset_kernel_call_count() -> None:
    global _kernel_calls
    _kernel_calls = 0


@dataclass
class TripletList:
    """Unordered (row, col, value) entries, the ingestion intermediate."""

    nrows: int
    ncols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=np.float64)
        if not (self.rows.shape == self.cols.shape == self.vals.shape):
            raise ValueError("rows, cols and vals must have equal length")
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.nrows:
                raise ValueError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.ncols:
                raise ValueError("column index out of range")

    @classmethod
    def from_entries(cls, nrows: int, ncols: int, entries) -> "TripletList":
        rows = np.array([e[0] for e in entries], dtype=np.int64)
        cols = np.array([e[1] for e in entries], dtype=np.int64)
        vals = np.array([e[2] for e in entries], dtype=np.float64)
        return cls(nrows, ncols, rows, cols, vals)

    def entries(self) -> Iterator[tuple[int, int, float]]:
        for r, c, v in zip(self.rows, self.cols, self.vals):
            yield int(r), int(c), float(v)

    def __len__(self) -> int:
        return int(self.rows.size)


@dataclass(eq=False)
class CsrMatrix:
    """Immutable CSR matrix with 32- or 64-bit index storage.

    Invariants (checked on construction): ``rowptr`` starts at 0, ends at
    NNZ and is non-decreasing; column indices are strictly increasing
    within each row and bounded by ``ncols``.
    """

    nrows: int
    ncols: int
    rowptr: np.ndarray
    colind: np.ndarray
    values: np.ndarray
    index_width: int = 32

    def __post_init__(self):
        if self.index_width not in _INDEX_DTYPES:
            raise ValueError(f"index_width must be 32 or 64, got {self.index_width}")
        dtype = _INDEX_DTYPES[self.index_width]
        self.rowptr = np.ascontiguousarray(self.rowptr, dtype=dtype)
        self.colind = np.ascontiguousarray(self.colind, dtype=dtype)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self._validate()

    def _validate(self) -> None:
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if self.rowptr.shape != (self.nrows + 1,):
            raise ValueError("rowptr must have length nrows + 1")
        if self.rowptr[0] != 0:
            raise ValueError("rowptr must start at 0")
        if np.any(np.diff(self.rowptr) < 0):
            raise ValueError("rowptr must be non-decreasing")
        nnz = int(self.rowptr[-1])
        if self.colind.shape != (nnz,) or self.values.shape != (nnz,):
            raise ValueError("colind/values length must match rowptr[-1]")
        if nnz:
            if self.colind.min() < 0 or self.colind.max() >= self.ncols:
                raise ValueError("column index out of range")
            # Strict increase within each row: every adjacent pair that does
            # not straddle a row boundary must step forward.
            starts = np.zeros(nnz, dtype=bool)
            starts[self.rowptr[:-1][np.diff(self.rowptr) > 0]] = True
            interior = ~starts[1:]
            if np.any(np.diff(self.colind.astype(np.int64))[interior] <= 0):
                raise ValueError("column indices must be strictly increasing per row")

    @property
    def nnz(self) -> int:
        return int(self.rowptr[-1])

    @property
    def index_bytes(self) -> int:
        """Bytes spent on the rowptr and colind index structures."""
        return self.rowptr.nbytes + self.colind.nbytes

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.rowptr).astype(np.int64)

    def with_index_width(self, width: int) -> "CsrMatrix":
        return CsrMatrix(self.nrows, self.ncols, self.rowptr, self.colind,
                         self.values, index_width=width)

    def to_triplets(self) -> TripletList:
        rows = np.repeat(np.arange(self.nrows, dtype=np.int64), self.row_nnz())
        return TripletList(self.nrows, self.ncols, rows,
                           self.colind.astype(np.int64), self.values.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (self.nrows == other.nrows and self.ncols == other.ncols
                and self.index_width == other.index_width
                and np.array_equal(self.rowptr, other.rowptr)
                and np.array_equal(self.colind, other.colind)
                and np.array_equal(self.values, other.values))


@dataclass(eq=False)
class RowPartition:
    """Contiguous, disjoint row ranges: partition p owns rows
    boundaries[p]..boundaries[p+1]."""

    boundaries: np.ndarray

    def __post_init__(self):
        self.boundaries = np.ascontiguousarray(self.boundaries, dtype=np.int64)
        if self.boundaries.size < 2:
            raise ValueError("a partition needs at least two boundaries")
        if self.boundaries[0] != 0:
            raise ValueError("partition must start at row 0")
        if np.any(np.diff(self.boundaries) < 0):
            raise ValueError("partition boundaries must be non-decreasing")

    @classmethod
    def whole(cls, nrows: int) -> "RowPartition":
        return cls(np.array([0, nrows], dtype=np.int64))

    def __len__(self) -> int:
        return int(self.boundaries.size - 1)

    def bounds(self, p: int) -> tuple[int, int]:
        return int(self.boundaries[p]), int(self.boundaries[p + 1])


def parse_triplets_sorted(t: TripletList):
    """Row-major sort with duplicate (row, col) entries summed."""
    order = np.lexsort((t.cols, t.rows))
    rows, cols, vals = t.rows[order], t.cols[order], t.vals[order]
    if rows.size:
        fresh = np.empty(rows.size, dtype=bool)
        fresh[0] = True
        fresh[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        idx = np.flatnonzero(fresh)
        vals = np.add.reduceat(vals, idx)
        rows, cols = rows[idx], cols[idx]
    return rows, cols, vals


def csr_from_triplets(t: TripletList, index_width: int = 32) -> CsrMatrix:
    """Build a CSR matrix: entries sorted by (row, col), duplicates summed."""
    rows, cols, vals = parse_triplets_sorted(t)
    counts = np.bincount(rows, minlength=t.nrows) if rows.size else np.zeros(t.nrows, dtype=np.int64)
    rowptr = np.concatenate(([0], np.cumsum(counts)))
    return CsrMatrix(t.nrows, t.ncols, rowptr, cols, vals, index_width=index_width)


def to_dense(a: CsrMatrix) -> np.ndarray:
    """Lossless row-major dense expansion (tests and tooling only)."""
    out = np.zeros((a.nrows, a.ncols), dtype=np.float64)
    if a.nnz:
        rows = np.repeat(np.arange(a.nrows), a.row_nnz())
        out[rows, a.colind] = a.values
    return out


def partition_rows_by_nnz(a: CsrMatrix, p: int) -> RowPartition:
    """Split rows into ``p`` contiguous ranges with near-equal nonzero counts.

    Boundary k is the smallest row index whose rowptr value reaches
    ``k * NNZ / p``; trailing partitions may be empty when ``p > nrows``.
    """
    if p < 1:
        raise ValueError("partition count must be >= 1")
    bounds = np.empty(p + 1, dtype=np.int64)
    bounds[0] = 0
    bounds[p] = a.nrows
    if p > 1:
        ks = np.arange(1, p, dtype=np.int64)
        targets = (ks * a.nnz + p - 1) // p  # ceil(k * nnz / p), exact in ints
        bounds[1:p] = np.searchsorted(a.rowptr, targets, side="left")
    np.minimum(bounds, a.nrows, out=bounds)
    np.maximum.accumulate(bounds, out=bounds)
    return RowPartition(bounds)


def _accumulate_rows(rowptr, colind, values, x, y, lo: int, hi: int) -> None:
    """Canonical per-row accumulation shared by all kernels.

    Each row's contribution is the reduction of one freshly formed product
    array, so any kernel that feeds identical per-row operands through this
    helper produces bitwise-identical results.
    """
    for i in range(lo, hi):
        s, e = rowptr[i], rowptr[i + 1]
        if e > s:
            y[i] = (values[s:e] * x[colind[s:e]]).sum()


def _check_dims(a, x) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (a.ncols,):
        raise ValueError(f"x has length {x.shape}, expected ({a.ncols},)")
    return x


def _check_partition(a, part: RowPartition) -> None:
    if int(part.boundaries[-1]) != a.nrows:
        raise ValueError("partition does not cover all matrix rows")


_pool: ThreadPoolExecutor | None = None
_pool_lock = threading.Lock()


def _shared_pool() -> ThreadPoolExecutor:
    # One long-lived pool; creating executors inside timed benchmark loops
    # would charge thread startup to every measurement.
    global _pool
    with _pool_lock:
        if _pool is None:
            _pool = ThreadPoolExecutor(max_workers=32,
                                       thread_name_prefix="spmv-worker")
    return _pool


def run_partitions(part: RowPartition, task) -> None:
    """Run ``task(p)`` for every partition, concurrently when there are
    several.  Workers must write disjoint output slices; all of them
    complete before this returns."""
    n = len(part)
    if n == 1:
        task(0)
        return
    # list() propagates worker exceptions.
    list(_shared_pool().map(task, range(n)))


def spmv_baseline(a: CsrMatrix, x, part: RowPartition | None = None) -> np.ndarray:
    """Reference CSR SpMV: y[i] = sum over row i of values[j] * x[colind[j]].

    Rows without nonzeros yield 0.0.  The result is independent of the
    partition count because rows are computed independently and workers
    write disjoint slices of y.
    """
    _count_kernel_call()
    x = _check_dims(a, x)
    if part is None:
        part = RowPartition.whole(a.nrows)
    _check_partition(a, part)
    y = np.zeros(a.nrows, dtype=np.float64)

    def task(p):
        lo, hi = part.bounds(p)
        _accumulate_rows(a.rowptr, a.colind, a.values, x, y, lo, hi)

    run_partitions(part, task)
    return y
