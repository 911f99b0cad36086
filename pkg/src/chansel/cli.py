"""Command-line front end: synth, convert, select, eval, params.

Exit codes: 0 success, 2 bad flags or invalid input data, 3 I/O or dataset
container failure, 4 evaluator/protocol failure, 5 search-space guard.
Output files are written to a temp file and renamed, so failures never leave
partial reports behind.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import time
from pathlib import Path

from . import dataio
from .cache import EvalCache, EvalCacheKey, cache_dir_from_env
from .errors import (
    AccuracyOutOfRangeError,
    AllZeroMaskError,
    BadLabelError,
    BadMagicError,
    BadNumberError,
    ChanselError,
    ClassTooSmallError,
    DegenerateSamplingError,
    EmptyRegionError,
    EmptySubsetError,
    EvaluatorError,
    HeaderParseError,
    IndexOutOfRangeError,
    LengthMismatchError,
    NonFiniteSampleError,
    PayloadLengthMismatchError,
    ProcessExitedError,
    ProtocolMalformedError,
    ProtocolTimeoutError,
    RaggedRowsError,
    SelectionAbortedError,
    SingularCovarianceError,
    SpecInvalidError,
    TooManyChannelsError,
    UnknownNameError,
    WidthMismatchError,
)
from .evaluators import BuiltinEvalConfig, BuiltinEvaluator, OracleSpec, evaluate_oracle
from .external import ExternalSessionPool
from .model import (
    ChannelSubset,
    Montage,
    SelectionMethod,
    SelectionTrace,
    TEN_TWENTY_22,
    TraceStep,
    TrialSet,
    canonicalize,
)
from .report import (
    CountMode,
    EegnetArch,
    RunReport,
    eegnet_param_count,
    format_kilo,
    render_curve_csv,
    render_report,
    write_bytes_atomic,
    write_text_atomic,
)
from .selectors import (
    RegionSpec,
    ScoreMode,
    WeightedRandomConfig,
    accuracy_curve,
    exhaustive_search,
    greedy_forward_search,
    task_based_subset,
    weighted_random_search,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_EVALUATOR = 4
EXIT_GUARD = 5

_USAGE_ERRORS = (
    SpecInvalidError, RaggedRowsError, BadLabelError, BadNumberError,
    IndexOutOfRangeError, EmptySubsetError, AllZeroMaskError, UnknownNameError,
    EmptyRegionError, LengthMismatchError, WidthMismatchError, ValueError,
)
_IO_ERRORS = (
    BadMagicError, HeaderParseError, PayloadLengthMismatchError,
    NonFiniteSampleError, OSError,
)
_EVALUATOR_ERRORS = (
    ClassTooSmallError, SingularCovarianceError, ProtocolTimeoutError,
    ProtocolMalformedError, EvaluatorError, AccuracyOutOfRangeError,
    ProcessExitedError, SelectionAbortedError, DegenerateSamplingError,
)


def _parse_names(text: str, n_channels: int | None = None) -> tuple[str, ...]:
    if text == "1020-22":
        return TEN_TWENTY_22
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    if n_channels is not None and len(names) != n_channels:
        raise ValueError(f"expected {n_channels} channel names, got {len(names)}")
    return names


def _parse_indices(text: str, n_channels: int) -> ChannelSubset:
    if text == "all":
        return ChannelSubset(tuple(range(n_channels)))
    try:
        raw = [int(f) for f in text.split(",") if f.strip()]
    except ValueError:
        raise ValueError(f"cannot parse channel list {text!r}") from None
    return canonicalize(raw, n_channels)


def _parse_bands(text: str) -> tuple[tuple[float, float], ...]:
    bands = []
    for part in text.split(","):
        part = part.strip()
        lo, _, hi = part.partition("-")
        try:
            bands.append((float(lo), float(hi)))
        except ValueError:
            raise ValueError(f"cannot parse band {part!r} (expected low-high)") from None
    return tuple(bands)


def _add_evaluator_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("evaluator")
    group.add_argument("--evaluator", choices=["builtin", "oracle", "external"],
                       default="builtin")
    group.add_argument("--folds", type=int, default=5)
    group.add_argument("--gamma", type=float, default=0.1)
    group.add_argument("--bands", default="4-8,8-13,13-30",
                       help="comma-separated low-high Hz pairs")
    group.add_argument("--no-broadband-fallback", action="store_true")
    group.add_argument("--oracle-informative", default=None,
                       help="comma-separated channel indices (oracle evaluator)")
    group.add_argument("--oracle-base", type=float, default=0.5)
    group.add_argument("--oracle-gain", type=float, default=0.1)
    group.add_argument("--oracle-penalty", type=float, default=0.01)
    group.add_argument("--evaluator-cmd", default=None,
                       help="command line of an external evaluator process")
    group.add_argument("--timeout", type=float, default=300.0,
                       help="per-request timeout for external evaluators (s)")


class _EvaluatorHandle:
    def __init__(self, backend, evaluator_id: str, pool=None):
        self.backend = backend
        self.evaluator_id = evaluator_id
        self._pool = pool

    def close(self):
        if self._pool is not None:
            self._pool.close()


def _make_evaluator(args, trials: TrialSet, dataset_path: str, seed: int,
                    jobs: int) -> _EvaluatorHandle:
    if args.evaluator == "builtin":
        cfg = BuiltinEvalConfig(
            n_folds=args.folds,
            shrinkage_gamma=args.gamma,
            bands_hz=_parse_bands(args.bands),
            broadband_fallback=not args.no_broadband_fallback,
        )
        evaluator = BuiltinEvaluator(trials, cfg, seed)
        return _EvaluatorHandle(evaluator.evaluate, cfg.evaluator_id())
    if args.evaluator == "oracle":
        if args.oracle_informative is None:
            raise ValueError("--oracle-informative is required with --evaluator oracle")
        spec = OracleSpec(
            informative=_parse_indices(args.oracle_informative, trials.n_channels),
            base=args.oracle_base,
            gain=args.oracle_gain,
            penalty=args.oracle_penalty,
        )
        return _EvaluatorHandle(lambda s: evaluate_oracle(s, spec), spec.evaluator_id())
    if args.evaluator_cmd is None:
        raise ValueError("--evaluator-cmd is required with --evaluator external")
    pool = ExternalSessionPool(args.evaluator_cmd, size=max(1, jobs))
    path = str(Path(dataset_path).resolve())
    backend = lambda s: pool.evaluate(path, s, seed, args.timeout)  # noqa: E731
    return _EvaluatorHandle(backend, f"external:{pool.name}", pool)


def _cached(handle: _EvaluatorHandle, digest: str, seed: int, cache: EvalCache):
    def evaluate(subset: ChannelSubset):
        key = EvalCacheKey(handle.evaluator_id, digest, subset, seed)
        return cache.evaluate(key, lambda: handle.backend(subset))
    return evaluate


def _read_trials(path: str) -> TrialSet:
    with open(path, "rb") as fh:
        return dataio.read_ets(fh)


# --- commands ------------------------------------------------------------------


def _cmd_synth(args) -> int:
    spec = dataio.SynthSpec(
        n_trials=args.trials,
        n_channels=args.channels,
        n_samples=args.samples,
        n_classes=args.classes,
        informative_channels=canonicalize(
            [int(x) for x in args.informative.split(",") if x.strip()], args.channels
        ),
        separation=args.separation,
        noise_sigma=args.noise_sigma,
        fs_hz=args.fs,
    )
    trials = dataio.synth(spec, args.seed)
    if args.names is not None:
        names = _parse_names(args.names, trials.n_channels)
        trials = TrialSet(Montage(names, trials.montage.fs_hz), trials.samples,
                          trials.labels, trials.n_classes)
    buf = io.BytesIO()
    dataio.write_ets(trials, buf)
    write_bytes_atomic(args.out, buf.getvalue())
    print(dataio.fingerprint(trials))
    return EXIT_OK


def _cmd_convert(args) -> int:
    names = _parse_names(args.names)
    with open(args.csv, "r", encoding="utf-8") as fh:
        trials = dataio.import_csv(fh, args.fs, names)
    buf = io.BytesIO()
    dataio.write_ets(trials, buf)
    write_bytes_atomic(args.out, buf.getvalue())
    print(dataio.fingerprint(trials))
    return EXIT_OK


def _cmd_eval(args) -> int:
    trials = _read_trials(args.dataset)
    subset = _parse_indices(args.channels, trials.n_channels)
    handle = _make_evaluator(args, trials, args.dataset, args.seed, jobs=1)
    try:
        result = handle.backend(subset)
    finally:
        handle.close()
    print(f"{result.accuracy:.4f}")
    return EXIT_OK


def _cmd_select(args) -> int:
    started = time.perf_counter()
    trials = _read_trials(args.dataset)
    digest = dataio.fingerprint(trials)
    c = trials.n_channels
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)

    trace = None
    curve: list = []
    extra: list[str] = []
    selected = None
    selected_accuracy = None
    evaluations = 0
    hits = 0
    evaluator_id = "none"

    if args.method == "task":
        region = RegionSpec(
            row_prefixes=tuple(p.strip() for p in args.region_prefixes.split(",") if p.strip()),
            explicit_names=(
                _parse_names(args.region_names) if args.region_names is not None else None
            ),
        )
        selected = task_based_subset(trials.montage, region)
        if args.evaluate:
            handle = _make_evaluator(args, trials, args.dataset, args.seed, jobs)
            evaluator_id = handle.evaluator_id
            cache = EvalCache(cache_dir_from_env())
            try:
                result = _cached(handle, digest, args.seed, cache)(selected)
            finally:
                handle.close()
            selected_accuracy = result.accuracy
            trace = SelectionTrace(
                (TraceStep(selected, result.accuracy, 1),), SelectionMethod.TASK_BASED
            )
            curve = accuracy_curve(trace)
            evaluations, hits = cache.hits + cache.misses, cache.hits
    else:
        handle = _make_evaluator(args, trials, args.dataset, args.seed, jobs)
        evaluator_id = handle.evaluator_id
        cache = EvalCache(cache_dir_from_env())
        evaluate = _cached(handle, digest, args.seed, cache)
        try:
            if args.method == "greedy":
                trace = greedy_forward_search(evaluate, c, jobs=jobs)
            elif args.method == "exhaustive":
                trace = exhaustive_search(
                    evaluate, c, max_channels_guard=args.guard, force=args.force, jobs=jobs
                )
            else:
                if args.k is None:
                    raise ValueError("--k is required with --method random")
                cfg = WeightedRandomConfig(
                    k=args.k,
                    p_include=args.p_include,
                    seed=args.seed,
                    target_size=args.target_size,
                    score_mode=ScoreMode(args.score_mode),
                )
                result = weighted_random_search(evaluate, c, cfg, jobs=jobs)
                trace = result.trace
                ranked = ",".join(str(i) for i in result.ranked_channels)
                extra.append(f"ranked_channels: {ranked}")
                scores = ",".join(f"{s:.4f}" for s in result.scores.scores)
                extra.append(f"channel_scores: {scores}")
                if result.target_subset is not None:
                    indices = ",".join(str(i) for i in result.target_subset.indices)
                    extra.append(f"target_indices: {indices}")
                    extra.append(f"target_accuracy: {result.target_accuracy:.4f}")
        finally:
            handle.close()
        best = trace.steps[trace.best_step]
        selected = best.subset
        selected_accuracy = best.accuracy
        curve = accuracy_curve(trace)
        evaluations, hits = cache.hits + cache.misses, cache.hits

    report = RunReport(
        method=args.method,
        dataset_path=args.dataset,
        dataset_digest=digest,
        evaluator_id=evaluator_id,
        seed=args.seed,
        trace=trace,
        curve=tuple(curve),
        selected=selected,
        selected_accuracy=selected_accuracy,
        montage=trials.montage,
        total_evaluations=evaluations,
        cache_hits=hits,
        wall_time_ms=int((time.perf_counter() - started) * 1000),
        extra_lines=tuple(extra),
    )
    if args.out is not None:
        write_text_atomic(args.out, render_report(report))
        curve_path = args.curve
        if curve_path is None:
            curve_path = str(Path(args.out).with_suffix(".csv"))
        write_text_atomic(curve_path, render_curve_csv(report.curve, trials.montage))
    elif args.curve is not None:
        write_text_atomic(args.curve, render_curve_csv(report.curve, trials.montage))
    print("+".join(sorted(selected.names(trials.montage))))
    return EXIT_OK


def _cmd_params(args) -> int:
    arch = EegnetArch(
        c=args.channels,
        t=args.samples,
        f1=args.f1,
        d=args.depth,
        f2=args.f2,
        kern_len=args.kern_len,
        sep_kern=args.sep_kern,
        pool1=args.pool1,
        pool2=args.pool2,
        n_classes=args.classes,
        count_mode=CountMode(args.count_mode),
    )
    count = eegnet_param_count(arch)
    print(f"{count} ({format_kilo(count)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chansel",
        description="Channel-subset selection over pluggable accuracy evaluators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic trial set with planted channels")
    p.add_argument("--trials", type=int, default=64)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--informative", default="0", help="comma-separated channel indices")
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--fs", type=float, default=128.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--names", default=None,
                   help="comma-separated channel names, or 1020-22")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("convert", help="import a label+samples CSV into the container format")
    p.add_argument("--csv", required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--names", required=True,
                   help="comma-separated channel names, or 1020-22")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("select", help="run a channel-subset search and write a report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", choices=["exhaustive", "greedy", "random", "task"],
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=0,
                   help="parallel candidate evaluations (0 = cpu count)")
    p.add_argument("--out", default=None, help="report path (curve lands next to it)")
    p.add_argument("--curve", default=None, help="explicit curve CSV path")
    p.add_argument("--k", type=int, default=None,
                   help="random subsets to draw (required for --method random)")
    p.add_argument("--p-include", type=float, default=0.5)
    p.add_argument("--target-size", type=int, default=None,
                   help="channels to keep after scoring (14 is the usual choice on "
                        "22-channel montages)")
    p.add_argument("--score-mode", choices=[m.value for m in ScoreMode],
                   default=ScoreMode.RAW_SUM.value)
    p.add_argument("--guard", type=int, default=20,
                   help="refuse exhaustive search above this channel count")
    p.add_argument("--force", action="store_true", help="override the exhaustive guard")
    p.add_argument("--region-prefixes", default="FC,C,CP")
    p.add_argument("--region-names", default=None,
                   help="explicit channel names for --method task")
    p.add_argument("--evaluate", action="store_true",
                   help="also evaluate the task-based subset")
    _add_evaluator_flags(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("eval", help="evaluate one channel subset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--channels", required=True, help="comma-separated indices or 'all'")
    p.add_argument("--seed", type=int, default=0)
    _add_evaluator_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("params", help="parameter count of the compact CNN architecture")
    p.add_argument("--channels", type=int, default=22)
    p.add_argument("--samples", type=int, default=1125)
    p.add_argument("--f1", type=int, default=8)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--f2", type=int, default=16)
    p.add_argument("--kern-len", type=int, default=64)
    p.add_argument("--sep-kern", type=int, default=16)
    p.add_argument("--pool1", type=int, default=4)
    p.add_argument("--pool2", type=int, default=8)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--count-mode", choices=[m.value for m in CountMode],
                   default=CountMode.TRAINABLE_ONLY.value)
    p.set_defaults(func=_cmd_params)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TooManyChannelsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except _EVALUATOR_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ChanselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
