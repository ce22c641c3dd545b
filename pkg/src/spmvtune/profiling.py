"""Online profiling classifier: micro-benchmark timing and the threshold cascade.

The baseline kernel and the three diagnostic kernels are each run under a
warmup/repetition harness; their median times turn into three speedup
scores:

* ``s_cml = t_baseline / t_noxmiss`` (gain from removing irregularity),
* ``s_mb  = t_inflate / t_baseline`` (inverse slowdown from doubled indices),
* ``s_imb = t_baseline / t_balance_mean`` (gain from perfect balance).

The scores are walked in descending order; the first one that clears its
own threshold names the class, and when nothing noteworthy shows up the
matrix is compute bound (CMP).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from statistics import median

import numpy as np

from .csr import CsrMatrix, _accumulate_rows, partition_rows_by_nnz, run_partitions, _check_dims, _count_kernel_call
from .kernels import bench_balance
from .taxonomy import MatrixClass


@dataclass(frozen=True)
class ThresholdConfig:
    """Score thresholds of the cascade.

    ``noxmiss`` removes irregularity outright and is therefore a naive
    upper bound, which is why its threshold is the strict one.  All values
    are placeholders to be calibrated per machine.
    """

    theta_cml: float = 1.4
    theta_mb: float = 1.15
    theta_imb: float = 1.15

    def __post_init__(self):
        if min(self.theta_cml, self.theta_mb, self.theta_imb) <= 1.0:
            raise ValueError("all thresholds must be > 1.0")


@dataclass(frozen=True)
class BenchmarkReport:
    """Median kernel times (seconds) and the derived speedup scores."""

    t_baseline: float
    t_noxmiss: float
    t_inflate: float
    t_balance_mean: float

    def __post_init__(self):
        if min(self.t_baseline, self.t_noxmiss, self.t_inflate,
               self.t_balance_mean) <= 0.0:
            raise ValueError("all benchmark times must be positive")

    @property
    def s_cml(self) -> float:
        return self.t_baseline / self.t_noxmiss

    @property
    def s_mb(self) -> float:
        return self.t_inflate / self.t_baseline

    @property
    def s_imb(self) -> float:
        return self.t_baseline / self.t_balance_mean

    def scores(self) -> dict[MatrixClass, float]:
        return {MatrixClass.CML: self.s_cml, MatrixClass.MB: self.s_mb,
                MatrixClass.IMB: self.s_imb}


# Equal scores are examined in this order; bandwidth saturation is the
# dominating bottleneck on current machines, so it gets the benefit of
# the doubt.
_TIE_ORDER = {MatrixClass.MB: 0, MatrixClass.IMB: 1, MatrixClass.CML: 2}


def classify_from_report(r: BenchmarkReport,
                         th: ThresholdConfig | None = None) -> MatrixClass:
    """Walk the scores in descending order, returning the first class whose
    score meets its own threshold, or CMP when none does."""
    th = th or ThresholdConfig()
    candidates = [
        (r.s_cml, MatrixClass.CML, th.theta_cml),
        (r.s_mb, MatrixClass.MB, th.theta_mb),
        (r.s_imb, MatrixClass.IMB, th.theta_imb),
    ]
    candidates.sort(key=lambda c: (-c[0], _TIE_ORDER[c[1]]))
    for score, cls, theta in candidates:
        if score >= theta:
            return cls
    return MatrixClass.CMP


def _null_timer() -> float:
    return 0.0


def measure(a: CsrMatrix, x, workers: int = 1, reps: int = 20, warmup: int = 5,
            timer=time.perf_counter, *, sequential: bool = False) -> BenchmarkReport:
    """Run baseline + the three diagnostic kernels under the timing harness.

    Each kernel gets ``warmup`` untimed runs followed by ``reps`` timed
    runs; the per-kernel statistic is the median.  Kernel setup work
    (index zeroing, index widening, partitioning) happens outside the
    timed regions.  Kernels are timed in a fixed order: baseline, noxmiss,
    inflate, balance.  ``sequential=True`` makes the balance workers run
    in partition order so injected timers observe a deterministic call
    sequence; balance warmup runs use a null timer and consume nothing.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    x = _check_dims(a, x)
    part = partition_rows_by_nnz(a, workers)
    zeroed = np.zeros_like(a.colind)
    wide = a.with_index_width(64)

    def run(rowptr, colind, values):
        _count_kernel_call()
        y = np.zeros(a.nrows, dtype=np.float64)

        def task(p):
            lo, hi = part.bounds(p)
            _accumulate_rows(rowptr, colind, values, x, y, lo, hi)

        run_partitions(part, task)

    def timed(rowptr, colind, values) -> float:
        for _ in range(warmup):
            run(rowptr, colind, values)
        times = []
        for _ in range(reps):
            t0 = timer()
            run(rowptr, colind, values)
            times.append(timer() - t0)
        return median(times)

    t_baseline = timed(a.rowptr, a.colind, a.values)
    t_noxmiss = timed(a.rowptr, zeroed, a.values)
    t_inflate = timed(wide.rowptr, wide.colind, wide.values)

    for _ in range(warmup):
        bench_balance(a, x, part, timer=_null_timer, sequential=sequential)
    means = []
    for _ in range(reps):
        _, _, mean = bench_balance(a, x, part, timer=timer, sequential=sequential)
        means.append(mean)
    t_balance = median(means)

    return BenchmarkReport(t_baseline, t_noxmiss, t_inflate, t_balance)


def classify_profiling(a: CsrMatrix, x=None, *, workers: int = 1,
                       reps: int = 20, warmup: int = 5,
                       thresholds: ThresholdConfig | None = None,
                       timer=time.perf_counter,
                       sequential: bool = False):
    """Measure the matrix and classify it; the report is returned for audit."""
    if x is None:
        x = np.ones(a.ncols, dtype=np.float64)
    report = measure(a, x, workers=workers, reps=reps, warmup=warmup,
                     timer=timer, sequential=sequential)
    return classify_from_report(report, thresholds), report
