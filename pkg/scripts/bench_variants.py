#!/usr/bin/env python3
"""Benchmark every kernel variant on one generated matrix and summarize the
per-variant speedups.

Usage: python3 scripts/bench_variants.py [kind] [n] [nnz_per_row]
"""

import sys
import tempfile
from pathlib import Path

from spmvtune.cli import main


def run(args):
    print(f"$ spmvtune {' '.join(args)}")
    code = main(args)
    if code != 0:
        sys.exit(code)


if __name__ == "__main__":
    kind = sys.argv[1] if len(sys.argv) > 1 else "irregular"
    n = sys.argv[2] if len(sys.argv) > 2 else "5000"
    k = sys.argv[3] if len(sys.argv) > 3 else "8"
    with tempfile.TemporaryDirectory(prefix="spmvtune-bench-") as tmp:
        matrix = Path(tmp) / "bench.mtx"
        results = Path(tmp) / "results.csv"
        run(["generate", "--kind", kind, "--n", n, "--nnz-per-row", k,
             "--seed", "0", "--out", str(matrix)])
        run(["bench", "--matrix", str(matrix), "--workers", "2",
             "--reps", "5", "--warmup", "2", "--out", str(results)])
        run(["report", "--results", str(results)])
