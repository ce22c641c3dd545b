"""Command-line advisor.

Subcommands: advise, train, eval, bench, report, overhead, generate.
Exit codes: 0 success, 1 usage error, 2 data error.

``main`` accepts injectable ``timer`` / ``timer_factory`` hooks so tests can
drive every timing-dependent command deterministically; when either hook is
present, timed kernels run their workers sequentially.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import AdvisorConfig
from .csr import CsrMatrix, partition_rows_by_nnz, spmv_baseline
from .features import (FEATURE_NAMES, extract_features, resolve_subset,
                       select_features)
from .generate import GENERATOR_KINDS, generate_matrix
from .kernels import (SchedulePolicy, ScheduleKind, encode_delta, spmv_delta,
                      spmv_prefetch, spmv_scheduled, spmv_unrolled)
from .ml import (Dataset, ModelFormatError, TrainedModel, load_model, loo_cv,
                 save_model, train_cart, train_gnb)
from .mmio import MatrixMarketError, load_matrix, write_matrix_market
from .profiling import classify_profiling
from .reporting import OverheadRecord, SpeedupStats
from .taxonomy import MatrixClass, optimization_for

VARIANTS = ("baseline", "delta", "prefetch", "dynamic", "unrolled")


class UsageError(Exception):
    """Bad command-line input (exit code 1)."""


class DataError(Exception):
    """Unreadable or inconsistent input data (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems by default; this tool
    # reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file mirroring AdvisorConfig")
    p.add_argument("--workers", type=int, help="worker count for kernels")
    p.add_argument("--reps", type=int, help="timed repetitions per kernel")
    p.add_argument("--warmup", type=int, help="untimed warmup runs per kernel")
    p.add_argument("--llc-bytes", type=int, help="last-level cache capacity")
    p.add_argument("--cacheline-bytes", type=int, help="cache line size")
    p.add_argument("--subset", help="feature subset preset or comma list")


def _build_parser() -> _Parser:
    parser = _Parser(prog="spmvtune",
                     description="Detect the dominant SpMV bottleneck of a sparse "
                                 "matrix and pick a matching kernel optimization.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("advise", help="classify one matrix and recommend an optimization")
    p.add_argument("--matrix", required=True)
    p.add_argument("--mode", choices=("profiling", "features"), default="profiling")
    p.add_argument("--model", help="trained model file (features mode)")
    p.add_argument("--seed", type=int, default=0, help="seed for the input vector")
    _add_config_flags(p)

    p = sub.add_parser("train", help="train a feature-based classifier over a corpus")
    p.add_argument("--corpus", required=True, help="directory of .mtx files")
    p.add_argument("--labels", default="auto",
                   help="'auto' (profile each matrix) or a CSV with matrix,label columns")
    p.add_argument("--classifier", choices=("tree", "nb"), default="tree")
    p.add_argument("--out", required=True, help="output model file (JSON)")
    p.add_argument("--features-csv", help="per-matrix feature/label log "
                                          "(default: model path with .features.csv)")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--min-leaf", type=int, default=1)
    _add_config_flags(p)

    p = sub.add_parser("eval", help="leave-one-out accuracy of a classifier over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", default="auto")
    p.add_argument("--classifier", choices=("tree", "nb"), default="tree")
    p.add_argument("--max-depth", type=int)
    p.add_argument("--min-leaf", type=int, default=1)
    _add_config_flags(p)

    p = sub.add_parser("bench", help="time kernel variants on one matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--variants", default=",".join(VARIANTS),
                   help=f"comma list from: {', '.join(VARIANTS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write variant,seconds,speedup CSV")
    _add_config_flags(p)

    p = sub.add_parser("report", help="box-plot statistics over a speedup file")
    p.add_argument("--results", required=True,
                   help="file with one speedup per line (or CSV, last column)")
    p.add_argument("--out", help="write the summary as CSV")

    p = sub.add_parser("overhead", help="classification cost in SpMV units")
    p.add_argument("--matrix", required=True)
    p.add_argument("--mode", choices=("profiling", "features"), default="profiling")
    p.add_argument("--model")
    p.add_argument("--seed", type=int, default=0)
    _add_config_flags(p)

    p = sub.add_parser("generate", help="write a synthetic Matrix Market file")
    p.add_argument("--kind", required=True, choices=GENERATOR_KINDS)
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--ncols", type=int, help="number of columns (default: n)")
    p.add_argument("--nnz-per-row", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def _cfg_from_args(args) -> AdvisorConfig:
    if getattr(args, "config", None):
        try:
            cfg = AdvisorConfig.from_file(args.config)
        except (ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"bad config file {args.config}: {exc}") from exc
    else:
        cfg = AdvisorConfig()
    overrides = {}
    for flag, name in (("workers", "workers"), ("reps", "reps"),
                       ("warmup", "warmup"), ("llc_bytes", "llc_bytes"),
                       ("cacheline_bytes", "cacheline_bytes"),
                       ("subset", "feature_subset")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    try:
        return cfg.replace(**overrides) if overrides else cfg
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _spmv_input(a: CsrMatrix, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.5, 2.0, a.ncols)


def _scan_corpus(corpus):
    corpus = Path(corpus)
    if not corpus.is_dir():
        raise DataError(f"corpus directory not found: {corpus}")
    paths = sorted(corpus.glob("*.mtx"))
    matrices = []
    skipped = 0
    for path in paths:
        try:
            matrices.append((path.stem, load_matrix(path)))
        except MatrixMarketError as exc:
            skipped += 1
            print(f"warning: skipping unparseable {path.name}: {exc}", file=sys.stderr)
    if skipped:
        print(f"warning: skipped {skipped} unparseable file(s)", file=sys.stderr)
    if not matrices:
        raise DataError(f"no parseable .mtx files in {corpus}")
    return matrices


def _read_label_file(path) -> dict[str, MatrixClass]:
    labels = {}
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"matrix", "label"} <= set(reader.fieldnames):
            raise DataError(f"label file {path} needs 'matrix' and 'label' columns")
        for row in reader:
            name = row["matrix"].strip()
            raw = row["label"].strip().upper()
            try:
                labels[name] = MatrixClass[raw]
            except KeyError:
                valid = ", ".join(c.name for c in MatrixClass)
                raise DataError(f"unknown label {raw!r} for {name!r} "
                                f"(expected one of: {valid})") from None
    return labels


def _resolve_labels(args, cfg, matrices, timer, timer_factory):
    """Attach a MatrixClass to each corpus matrix, from a file or by profiling."""
    if args.labels != "auto":
        wanted = _read_label_file(args.labels)
        by_name = dict(matrices)
        for name in wanted:
            if name not in by_name:
                print(f"warning: label file names missing matrix {name!r}, skipping",
                      file=sys.stderr)
        labeled = []
        for name, a in matrices:
            if name in wanted:
                labeled.append((name, a, wanted[name]))
            else:
                print(f"warning: no label for matrix {name!r}, skipping",
                      file=sys.stderr)
        return labeled

    injected = timer is not None or timer_factory is not None
    labeled = []
    for name, a in matrices:
        if timer_factory is not None:
            t = timer_factory(name, a)
        else:
            t = timer or time.perf_counter
        cls, _ = classify_profiling(a, workers=cfg.workers, reps=cfg.reps,
                                    warmup=cfg.warmup, thresholds=cfg.thresholds,
                                    timer=t, sequential=injected)
        labeled.append((name, a, cls))
    return labeled


def _labeled_dataset(labeled, cfg):
    subset = cfg.subset_names()
    cache = cfg.cache_config()
    fvs = [extract_features(a, cache) for _, a, _ in labeled]
    X = np.stack([select_features(fv, subset) for fv in fvs])
    ds = Dataset(X, [cls for _, _, cls in labeled], subset)
    return ds, fvs


def _trainer(args):
    if args.classifier == "tree":
        return "tree", lambda ds: train_cart(ds, max_depth=args.max_depth,
                                             min_leaf=args.min_leaf)
    return "gnb", lambda ds: train_gnb(ds)


def _load_feature_model(args):
    """Load the trained model, cross-checking an explicitly requested subset."""
    if not args.model:
        raise UsageError("features mode requires --model")
    model = load_model(args.model)
    if getattr(args, "subset", None) is not None:
        requested = resolve_subset(args.subset)
        if tuple(requested) != tuple(model.feature_names):
            raise DataError(
                f"model/feature-subset mismatch: model was trained on "
                f"[{', '.join(model.feature_names)}] but --subset asks for "
                f"[{', '.join(requested)}]")
    return model


def _predict_features(model, fv) -> MatrixClass:
    try:
        x = select_features(fv, model.feature_names)
    except ValueError as exc:
        raise DataError(f"model/feature-subset mismatch: {exc}") from exc
    return model.predict(x)


def _cmd_advise(args, timer, timer_factory) -> int:
    cfg = _cfg_from_args(args)
    a = load_matrix(args.matrix)
    if args.mode == "features":
        model = _load_feature_model(args)
        fv = extract_features(a, cfg.cache_config())
        cls = _predict_features(model, fv)
        evidence = [f"  {name} {getattr(fv, name):.6g}" for name in FEATURE_NAMES]
    else:
        t = timer or time.perf_counter
        cls, report = classify_profiling(
            a, _spmv_input(a, args.seed), workers=cfg.workers, reps=cfg.reps,
            warmup=cfg.warmup, thresholds=cfg.thresholds, timer=t,
            sequential=timer is not None)
        evidence = [f"  t_baseline {report.t_baseline:.6g}",
                    f"  t_noxmiss {report.t_noxmiss:.6g}",
                    f"  t_inflate {report.t_inflate:.6g}",
                    f"  t_balance_mean {report.t_balance_mean:.6g}",
                    f"  s_cml {report.s_cml:.6g}",
                    f"  s_mb {report.s_mb:.6g}",
                    f"  s_imb {report.s_imb:.6g}"]
    print(f"matrix: {args.matrix} ({a.nrows}x{a.ncols}, {a.nnz} nonzeros)")
    print(f"class: {cls.name}")
    print(f"optimization: {optimization_for(cls).value}")
    print("evidence:")
    for line in evidence:
        print(line)
    return 0


def _write_features_csv(path, labeled, fvs) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["matrix", *FEATURE_NAMES, "label"])
        for (name, _, cls), fv in zip(labeled, fvs):
            writer.writerow([name,
                             *(repr(float(getattr(fv, f))) for f in FEATURE_NAMES),
                             cls.name])


def _cmd_train(args, timer, timer_factory) -> int:
    cfg = _cfg_from_args(args)
    matrices = _scan_corpus(args.corpus)
    labeled = _resolve_labels(args, cfg, matrices, timer, timer_factory)
    if len(labeled) < 2:
        raise DataError(f"need at least 2 labeled matrices, have {len(labeled)}")
    ds, fvs = _labeled_dataset(labeled, cfg)
    kind, trainer = _trainer(args)
    model = TrainedModel(kind, ds.feature_names, trainer(ds))
    save_model(model, args.out)
    log_path = args.features_csv or str(Path(args.out).with_suffix(".features.csv"))
    _write_features_csv(log_path, labeled, fvs)
    for name, _, cls in labeled:
        print(f"label {name} {cls.name}")
    print(f"trained {kind} model on {len(labeled)} matrices "
          f"({len(ds.feature_names)} features) -> {args.out}")
    print(f"feature log -> {log_path}")
    return 0


def _cmd_eval(args, timer, timer_factory) -> int:
    cfg = _cfg_from_args(args)
    matrices = _scan_corpus(args.corpus)
    labeled = _resolve_labels(args, cfg, matrices, timer, timer_factory)
    if len(labeled) < 2:
        raise DataError(f"need at least 2 labeled matrices, have {len(labeled)}")
    ds, _ = _labeled_dataset(labeled, cfg)
    _, trainer = _trainer(args)
    accuracy, predictions = loo_cv(ds, trainer)
    confusion = np.zeros((len(MatrixClass), len(MatrixClass)), dtype=np.int64)
    for truth, pred in zip(ds.labels, predictions):
        confusion[int(truth), int(pred)] += 1
    print(f"samples {ds.n_samples}")
    print(f"loo_accuracy {accuracy:.6g}")
    print("confusion (rows=actual, cols=predicted):")
    names = [c.name for c in MatrixClass]
    print("      " + "".join(f"{n:>6}" for n in names))
    for i, row_name in enumerate(names):
        print(f"{row_name:>6}" + "".join(f"{confusion[i, j]:>6}" for j in range(len(names))))
    return 0


def _cmd_bench(args, timer, timer_factory) -> int:
    cfg = _cfg_from_args(args)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown or not variants:
        raise UsageError(f"unknown variant(s): {', '.join(unknown) or '(none given)'}; "
                         f"choose from: {', '.join(VARIANTS)}")
    a = load_matrix(args.matrix)
    x = _spmv_input(a, args.seed)
    part = partition_rows_by_nnz(a, cfg.workers)
    t = timer or time.perf_counter
    chunk = max(1, -(-a.nrows // (cfg.workers * 8)))

    runners = {"baseline": lambda: spmv_baseline(a, x, part)}
    if "delta" in variants:
        encoded = encode_delta(a)
        runners["delta"] = lambda: spmv_delta(encoded, x, part)
    if "prefetch" in variants:
        runners["prefetch"] = lambda: spmv_prefetch(a, x, part,
                                                    cfg.prefetch_distance)
    if "dynamic" in variants:
        policy = SchedulePolicy(ScheduleKind.DYNAMIC_CHUNKED, chunk_rows=chunk)
        runners["dynamic"] = lambda: spmv_scheduled(a, x, policy, cfg.workers)
    if "unrolled" in variants:
        runners["unrolled"] = lambda: spmv_unrolled(a, x, part)

    # Correctness gate before any timing: a speedup from a wrong answer is
    # worthless.
    y_ref = spmv_baseline(a, x, part)
    scale = max(1.0, float(np.abs(y_ref).max()) if y_ref.size else 1.0)
    for name in variants:
        if name == "baseline":
            continue
        y = runners[name]()
        if name == "unrolled":
            ok = np.allclose(y, y_ref, rtol=1e-10, atol=1e-12 * scale)
        else:
            ok = np.array_equal(y, y_ref)
        if not ok:
            raise DataError(f"internal error: variant {name!r} disagrees with baseline")

    def timed(fn) -> float:
        from statistics import median
        for _ in range(cfg.warmup):
            fn()
        times = []
        for _ in range(cfg.reps):
            t0 = t()
            fn()
            times.append(t() - t0)
        return median(times)

    t_base = timed(runners["baseline"])
    rows = []
    for name in variants:
        seconds = t_base if name == "baseline" else timed(runners[name])
        rows.append((name, seconds, t_base / seconds))
    best = max(rows, key=lambda r: r[2])
    for name, seconds, speedup in rows:
        print(f"variant {name} time {seconds:.6g} speedup {speedup:.6g}")
    print(f"best {best[0]}")
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "seconds", "speedup"])
            for name, seconds, speedup in rows:
                writer.writerow([name, repr(seconds), repr(speedup)])
    return 0


def _read_speedups(path) -> list[float]:
    values = []
    try:
        lines = Path(path).read_text(encoding="ascii").splitlines()
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    for idx, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        token = line.split(",")[-1].strip()
        try:
            values.append(float(token))
        except ValueError:
            if idx == 0:
                continue  # header row
            raise DataError(f"cannot parse speedup value {token!r}") from None
    if not values:
        raise DataError(f"no speedup values found in {path}")
    return values


def _cmd_report(args, timer, timer_factory) -> int:
    values = _read_speedups(args.results)
    stats = SpeedupStats.from_values(values)
    print(f"n {len(values)}")
    for line in stats.summary_lines():
        print(line)
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["min", "q1", "mean", "q3", "max"])
            writer.writerow([repr(stats.minimum), repr(stats.q1), repr(stats.mean),
                             repr(stats.q3), repr(stats.maximum)])
    return 0


def _cmd_overhead(args, timer, timer_factory) -> int:
    cfg = _cfg_from_args(args)
    a = load_matrix(args.matrix)
    x = _spmv_input(a, args.seed)
    t = timer or time.perf_counter
    part = partition_rows_by_nnz(a, cfg.workers)

    if args.mode == "features":
        model = _load_feature_model(args)
        t0 = t()
        fv = extract_features(a, cfg.cache_config())
        cls = _predict_features(model, fv)
        t_class = t() - t0
    else:
        t0 = t()
        cls, _ = classify_profiling(a, x, workers=cfg.workers, reps=cfg.reps,
                                    warmup=cfg.warmup, thresholds=cfg.thresholds,
                                    timer=t, sequential=timer is not None)
        t_class = t() - t0

    from statistics import median
    for _ in range(cfg.warmup):
        spmv_baseline(a, x, part)
    times = []
    for _ in range(cfg.reps):
        t0 = t()
        spmv_baseline(a, x, part)
        times.append(t() - t0)
    record = OverheadRecord.from_times(t_class, median(times))
    print(f"mode {args.mode}")
    print(f"class {cls.name}")
    print(f"t_classification {record.t_classification:.6g}")
    print(f"t_spmv {record.t_spmv:.6g}")
    print(f"ratio {record.ratio:.6g}")
    return 0


def _cmd_generate(args, timer, timer_factory) -> int:
    try:
        triplets = generate_matrix(args.kind, args.n, args.nnz_per_row,
                                   args.seed, args.ncols)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_matrix_market(args.out, triplets,
                        comments=(f"kind={args.kind} n={args.n} "
                                  f"nnz_per_row={args.nnz_per_row} seed={args.seed}",))
    print(f"wrote {args.out} ({triplets.nrows}x{triplets.ncols}, "
          f"{len(triplets)} entries)")
    return 0


_DISPATCH = {
    "advise": _cmd_advise,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "report": _cmd_report,
    "overhead": _cmd_overhead,
    "generate": _cmd_generate,
}


def main(argv=None, *, timer=None, timer_factory=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    try:
        return _DISPATCH[args.command](args, timer, timer_factory)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, MatrixMarketError, ModelFormatError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
