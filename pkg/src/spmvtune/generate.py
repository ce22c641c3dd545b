"""Synthetic sparse matrix generators, one per bottleneck archetype.

* ``banded``: contiguous near-diagonal columns; regular and cache friendly.
* ``irregular``: uniform random columns per row; scattered accesses to x.
* ``skewed``: power-law row lengths; a few huge rows dominate the work.
* ``small-dense``: contiguous dense runs, intended for sizes that fit in
  cache and stress the computational part of the kernel.

Generation is fully deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np

from .csr import TripletList

GENERATOR_KINDS = ("banded", "irregular", "skewed", "small-dense")


def _banded(rng, n, ncols, width):
    starts = np.clip(np.arange(n) - width // 2, 0, ncols - width)
    cols = (starts[:, None] + np.arange(width)).ravel()
    rows = np.repeat(np.arange(n), width)
    return rows, cols


def _distinct_columns(rng, ncols, k):
    # Rejection sampling is fast only while collisions stay rare
    # (expected redraws ~ k^2 / 2*ncols); fall back to a permutation.
    if k * k > ncols:
        return np.sort(rng.permutation(ncols)[:k])
    while True:
        cols = np.sort(rng.integers(0, ncols, k))
        if k < 2 or np.all(np.diff(cols) > 0):
            return cols


def _irregular(rng, n, ncols, k):
    # Draw-and-reject duplicate column hits; cheap while k << ncols.
    picks = np.sort(rng.integers(0, ncols, (n, k)), axis=1)
    if k > 1:
        bad = np.flatnonzero((np.diff(picks, axis=1) == 0).any(axis=1))
        for i in bad:
            picks[i] = _distinct_columns(rng, ncols, k)
    rows = np.repeat(np.arange(n), k)
    return rows, picks.ravel()


def _skewed(rng, n, ncols, k_avg):
    # Rank-based power law: row lengths proportional to 1/rank, scaled to
    # the requested mean, then shuffled across rows.
    raw = 1.0 / np.arange(1, n + 1)
    lengths = np.clip(np.rint(raw * (k_avg * n / raw.sum())), 1, ncols).astype(np.int64)
    lengths = rng.permutation(lengths)
    rows = np.repeat(np.arange(n), lengths)
    cols = np.concatenate([_distinct_columns(rng, ncols, int(k)) for k in lengths])
    return rows, cols


def _small_dense(rng, n, ncols, k):
    starts = rng.integers(0, ncols - k + 1, n)
    cols = (starts[:, None] + np.arange(k)).ravel()
    rows = np.repeat(np.arange(n), k)
    return rows, cols


_BUILDERS = {"banded": _banded, "irregular": _irregular,
             "skewed": _skewed, "small-dense": _small_dense}


def generate_matrix(kind: str, n: int, nnz_per_row: int, seed: int,
                    ncols: int | None = None) -> TripletList:
    """Build a synthetic matrix of the given archetype.

    ``nnz_per_row`` is exact for banded/irregular/small-dense rows and the
    target mean for skewed ones.  Values are uniform in [0.5, 2.0) so no
    stored entry is zero.
    """
    if kind not in _BUILDERS:
        raise ValueError(f"unknown generator kind {kind!r}; pick one of {GENERATOR_KINDS}")
    ncols = n if ncols is None else ncols
    if n < 1 or ncols < 1:
        raise ValueError("matrix dimensions must be >= 1")
    if not 1 <= nnz_per_row <= ncols:
        raise ValueError("nnz_per_row must be between 1 and ncols")
    rng = np.random.default_rng(seed)
    rows, cols = _BUILDERS[kind](rng, n, ncols, nnz_per_row)
    vals = rng.uniform(0.5, 2.0, rows.size)
    return TripletList(n, ncols, rows, cols, vals)
