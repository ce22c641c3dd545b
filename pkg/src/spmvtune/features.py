"""Structural feature extraction for sparse matrices.

Fourteen features summarize a matrix in a single pass over the row pointer
and column index arrays (Theta(N + NNZ) work):

* ``size``: 1 when the SpMV working set fits in the last-level cache.
* ``density``: NNZ / (N * M).
* ``nnz_{min,max,avg,sd}``: per-row nonzero-count statistics.
* ``bw_{min,max,avg,sd}``: per-row column span (last col - first col).
* ``dispersion_{avg,sd}``: per-row fill of the occupied span,
  nnz_i / (bw_i + 1).
* ``clustering``: mean over rows of (groups of consecutive columns) / nnz_i.
* ``miss_ratio``: mean over rows of the count of elements whose column gap
  from the previous element exceeds one cache line of values.

Empty rows contribute zeros to every per-row quantity but still count in
the N-denominator averages.  Standard deviations are population ones
(divide by N).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields

import numpy as np

from .csr import CsrMatrix

FEATURE_NAMES = (
    "size", "density",
    "nnz_min", "nnz_max", "nnz_avg", "nnz_sd",
    "bw_min", "bw_max", "bw_avg", "bw_sd",
    "dispersion_avg", "dispersion_sd",
    "clustering", "miss_ratio",
)

# Per-platform feature subsets that worked well in practice.  "tree"
# presets feed the decision tree, "nb" presets the Gaussian naive Bayes;
# manycore targets have far more threads and costlier cache misses than
# multicore ones.
FEATURE_SUBSETS: dict[str, tuple[str, ...]] = {
    "all": FEATURE_NAMES,
    "manycore-tree": ("size", "bw_avg", "bw_sd", "nnz_min", "nnz_max",
                      "nnz_avg", "nnz_sd", "miss_ratio", "dispersion_sd"),
    "manycore-nb": ("nnz_min", "nnz_max", "nnz_sd", "bw_avg",
                    "dispersion_avg", "dispersion_sd"),
    "multicore-tree": ("size", "bw_avg", "bw_sd", "nnz_min", "nnz_max",
                       "nnz_avg", "nnz_sd", "dispersion_sd", "miss_ratio"),
    "multicore-nb": ("size", "nnz_min", "nnz_max"),
}


@dataclass(frozen=True)
class CacheConfig:
    """Cache geometry the size and miss features are computed against.

    ``index_bytes`` may be left None to follow the matrix's own index
    width (4 bytes for 32-bit indices, 8 for 64-bit).
    """

    llc_bytes: int
    cacheline_bytes: int = 64
    value_bytes: int = 8
    index_bytes: int | None = None

    def __post_init__(self):
        if self.llc_bytes <= 0 or self.cacheline_bytes <= 0 or self.value_bytes <= 0:
            raise ValueError("cache parameters must be positive")
        if self.cacheline_bytes % self.value_bytes:
            raise ValueError("cacheline_bytes must be divisible by value_bytes")
        if self.index_bytes is not None and self.index_bytes <= 0:
            raise ValueError("index_bytes must be positive")

    @property
    def line_values(self) -> int:
        """Number of matrix values that fit in one cache line."""
        return self.cacheline_bytes // self.value_bytes


@dataclass(frozen=True)
class FeatureVector:
    size: int
    density: float
    nnz_min: float
    nnz_max: float
    nnz_avg: float
    nnz_sd: float
    bw_min: float
    bw_max: float
    bw_avg: float
    bw_sd: float
    dispersion_avg: float
    dispersion_sd: float
    clustering: float
    miss_ratio: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES],
                        dtype=np.float64)

    @staticmethod
    def csv_header() -> str:
        return ",".join(FEATURE_NAMES)

    def to_csv_row(self) -> str:
        out = io.StringIO()
        csv.writer(out, lineterminator="").writerow(
            [repr(float(getattr(self, name))) for name in FEATURE_NAMES])
        return out.getvalue()


assert tuple(f.name for f in fields(FeatureVector)) == FEATURE_NAMES


def working_set_bytes(a: CsrMatrix, cfg: CacheConfig) -> int:
    """Bytes touched by one SpMV: nonzeros, indices and both dense vectors."""
    ib = cfg.index_bytes if cfg.index_bytes is not None else a.index_width // 8
    return (cfg.value_bytes * a.nnz + ib * a.nnz + ib * (a.nrows + 1)
            + cfg.value_bytes * (a.nrows + a.ncols))


def extract_features(a: CsrMatrix, cfg: CacheConfig) -> FeatureVector:
    if a.nrows < 1 or a.ncols < 1:
        raise ValueError("feature extraction needs at least one row and column")
    n = a.nrows
    counts = a.row_nnz()
    nonempty = counts > 0
    nnz = a.nnz

    bw = np.zeros(n, dtype=np.float64)
    disp = np.zeros(n, dtype=np.float64)
    clust = np.zeros(n, dtype=np.float64)
    misses_total = 0

    if nnz:
        col = a.colind.astype(np.int64)
        starts = a.rowptr[:-1][nonempty].astype(np.int64)
        ends = a.rowptr[1:][nonempty].astype(np.int64)
        span = (col[ends - 1] - col[starts]).astype(np.float64)
        bw[nonempty] = span
        disp[nonempty] = counts[nonempty] / (span + 1.0)

        # gap[j] holds the in-row column step at element j; at the first
        # element of each row it holds the absolute column instead, which
        # the group/miss rules below never look at.
        gap = np.empty(nnz, dtype=np.int64)
        gap[0] = col[0]
        gap[1:] = col[1:] - col[:-1]
        gap[starts] = col[starts]
        first_elem = np.zeros(nnz, dtype=bool)
        first_elem[starts] = True

        group_start = first_elem | (gap != 1)
        ngroups = np.add.reduceat(group_start.astype(np.int64), starts)
        clust[nonempty] = ngroups / counts[nonempty]

        miss_elem = ~first_elem & (gap > cfg.line_values)
        misses_total = int(miss_elem.sum())

    counts_f = counts.astype(np.float64)
    ws = working_set_bytes(a, cfg)
    return FeatureVector(
        size=1 if ws <= cfg.llc_bytes else 0,
        density=nnz / (n * a.ncols),
        nnz_min=float(counts_f.min()),
        nnz_max=float(counts_f.max()),
        nnz_avg=float(counts_f.mean()),
        nnz_sd=float(counts_f.std()),
        bw_min=float(bw.min()),
        bw_max=float(bw.max()),
        bw_avg=float(bw.mean()),
        bw_sd=float(bw.std()),
        dispersion_avg=float(disp.mean()),
        dispersion_sd=float(disp.std()),
        clustering=float(clust.mean()),
        miss_ratio=misses_total / n,
    )


def select_features(fv: FeatureVector, subset) -> np.ndarray:
    """Pick feature values in the requested order."""
    unknown = [name for name in subset if name not in FEATURE_NAMES]
    if unknown:
        raise ValueError(f"unknown feature name(s): {', '.join(unknown)}")
    return np.array([float(getattr(fv, name)) for name in subset],
                    dtype=np.float64)


def resolve_subset(subset: str) -> tuple[str, ...]:
    """Resolve a preset name or a comma-separated feature list."""
    if subset in FEATURE_SUBSETS:
        return FEATURE_SUBSETS[subset]
    names = tuple(name.strip() for name in subset.split(",") if name.strip())
    unknown = [name for name in names if name not in FEATURE_NAMES]
    if not names or unknown:
        raise ValueError(
            f"unknown feature subset {subset!r}; use a preset "
            f"({', '.join(FEATURE_SUBSETS)}) or a comma-separated feature list")
    return names
