"""Channel-subset selection strategies over a pluggable subset evaluator.

Every strategy takes `evaluate`, a callable from ChannelSubset to EvalResult,
so the same code runs against the built-in classifier, the arithmetic oracle,
a cache wrapper, or an external process.

Tie-breaking is smallest-channel-index / lexicographic everywhere, and each
step's argmax is reduced only after all of the step's candidates finish, so
results are independent of evaluation order (and of `jobs`).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateSamplingError,
    EmptyRegionError,
    LengthMismatchError,
    SelectionAbortedError,
    TooManyChannelsError,
    UnknownNameError,
    WidthMismatchError,
)
from .model import (
    ChannelSubset,
    EvalResult,
    Montage,
    ScoreVector,
    SelectionMethod,
    SelectionTrace,
    SubsetMask,
    TraceStep,
    canonicalize,
    subset_of,
)

EvaluateFn = Callable[[ChannelSubset], EvalResult]

EXHAUSTIVE_GUARD_DEFAULT = 20
_REDRAW_LIMIT = 1000


def _evaluate_all(evaluate: EvaluateFn, subsets: Sequence[ChannelSubset],
                  jobs: int) -> list[EvalResult]:
    if jobs <= 1 or len(subsets) <= 1:
        return [evaluate(s) for s in subsets]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(evaluate, subsets))


def _argmax_first(results: Sequence[EvalResult]) -> int:
    best = 0
    for i in range(1, len(results)):
        if results[i].accuracy > results[best].accuracy:
            best = i
    return best


def exhaustive_search(evaluate: EvaluateFn, n_channels: int, *,
                      max_channels_guard: int = EXHAUSTIVE_GUARD_DEFAULT,
                      force: bool = False, jobs: int = 1) -> SelectionTrace:
    """Evaluate all 2^C - 1 subsets; one trace step per size with that size's best.

    Candidate order within a size is lexicographic, so equal accuracies keep
    the lexicographically smallest index list.
    """
    if n_channels < 1:
        raise ValueError("need at least one channel")
    if n_channels > max_channels_guard and not force:
        raise TooManyChannelsError(n_channels, max_channels_guard)
    steps = []
    for size in range(1, n_channels + 1):
        combos = [ChannelSubset(c) for c in itertools.combinations(range(n_channels), size)]
        results = _evaluate_all(evaluate, combos, jobs)
        best = _argmax_first(results)
        steps.append(TraceStep(combos[best], results[best].accuracy, len(combos)))
    return SelectionTrace(tuple(steps), SelectionMethod.EXHAUSTIVE)


def greedy_forward_search(evaluate: EvaluateFn, n_channels: int, *,
                          jobs: int = 1) -> SelectionTrace:
    """Grow one channel per step, keeping the extension with the best accuracy.

    Runs to the full channel set (C(C+1)/2 evaluations); the trace's best_step
    marks the overall winner. A failed candidate aborts the search with a
    SelectionAbortedError carrying the completed steps.
    """
    if n_channels < 1:
        raise ValueError("need at least one channel")
    current: tuple[int, ...] = ()
    steps: list[TraceStep] = []
    for _ in range(n_channels):
        extensions = [ch for ch in range(n_channels) if ch not in current]
        candidates = [ChannelSubset(tuple(sorted(current + (ch,)))) for ch in extensions]
        try:
            results = _evaluate_all(evaluate, candidates, jobs)
        except Exception as exc:
            partial = (
                SelectionTrace(tuple(steps), SelectionMethod.GREEDY) if steps else None
            )
            raise SelectionAbortedError(
                f"candidate evaluation failed at step {len(steps) + 1}: {exc}", partial
            ) from exc
        best = _argmax_first(results)
        steps.append(TraceStep(candidates[best], results[best].accuracy, len(candidates)))
        current = candidates[best].indices
    return SelectionTrace(tuple(steps), SelectionMethod.GREEDY)


class ScoreMode(str, Enum):
    RAW_SUM = "raw_sum"
    OCCURRENCE_MEAN = "occurrence_mean"


@dataclass(frozen=True)
class WeightedRandomConfig:
    k: int
    p_include: float = 0.5
    seed: int = 0
    target_size: int | None = None
    score_mode: ScoreMode = ScoreMode.RAW_SUM

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (0.0 < self.p_include < 1.0):
            raise ValueError("p_include must lie strictly between 0 and 1")
        if self.target_size is not None and self.target_size < 1:
            raise ValueError("target_size must be >= 1 when given")


def sample_masks(cfg: WeightedRandomConfig, n_channels: int) -> list[SubsetMask]:
    """Draw k membership masks, each bit independently 1 with p_include.

    All-zero draws are rejected and redrawn; kept draws are deterministic for a
    fixed (cfg, n_channels).
    """
    rng = np.random.default_rng(cfg.seed)
    masks = []
    for _ in range(cfg.k):
        redraws = 0
        while True:
            bits = (rng.random(n_channels) < cfg.p_include).astype(int)
            if bits.any():
                break
            redraws += 1
            if redraws >= _REDRAW_LIMIT:
                raise DegenerateSamplingError(
                    f"{_REDRAW_LIMIT} consecutive all-zero draws at p={cfg.p_include}"
                )
        masks.append(SubsetMask(tuple(int(b) for b in bits)))
    return masks


def score_channels(masks: Sequence[SubsetMask], weights: Sequence[float],
                   mode: ScoreMode = ScoreMode.RAW_SUM) -> ScoreVector:
    """Per-channel accuracy-weighted occurrence scores.

    raw_sum:          v_i = sum_j mask_ji * w_j        (summed in j order)
    occurrence_mean:  v_i = raw_sum_i / max(1, #occurrences_i)
    """
    if len(masks) != len(weights) or len(masks) == 0:
        raise LengthMismatchError(
            f"{len(masks)} masks vs {len(weights)} weights (both must be equal and >= 1)"
        )
    width = masks[0].width
    if any(m.width != width for m in masks):
        raise WidthMismatchError("all masks must cover the same channel count")
    for w in weights:
        w = float(w)
        if not np.isfinite(w) or w < 0:
            raise ValueError("weights must be finite and non-negative")
    scores = np.zeros(width, dtype=np.float64)
    occurrences = np.zeros(width, dtype=np.float64)
    for mask, weight in zip(masks, weights):  # j order fixes float associativity
        bits = np.asarray(mask.bits, dtype=np.float64)
        scores += bits * float(weight)
        occurrences += bits
    if mode is ScoreMode.OCCURRENCE_MEAN:
        scores = scores / np.maximum(1.0, occurrences)
    return ScoreVector(tuple(scores), len(masks))


def rank_channels(scores: ScoreVector) -> list[int]:
    """Channel indices by descending score; ties keep the smaller index first."""
    return sorted(range(len(scores)), key=lambda i: (-scores.scores[i], i))


@dataclass(frozen=True)
class WeightedRandomResult:
    scores: ScoreVector
    ranked_channels: tuple[int, ...]
    trace: SelectionTrace
    target_subset: ChannelSubset | None
    target_accuracy: float | None


def weighted_random_search(evaluate: EvaluateFn, n_channels: int,
                           cfg: WeightedRandomConfig, *, jobs: int = 1) -> WeightedRandomResult:
    """Sample k random subsets, evaluate each, score channels, rank them.

    With target_size set, the top-scoring channels form a final subset that is
    re-evaluated and appended to the trace.
    """
    if cfg.target_size is not None and cfg.target_size > n_channels:
        raise ValueError(f"target_size {cfg.target_size} exceeds {n_channels} channels")
    masks = sample_masks(cfg, n_channels)
    subsets = [subset_of(m) for m in masks]
    results = _evaluate_all(evaluate, subsets, jobs)
    weights = [r.accuracy for r in results]
    scores = score_channels(masks, weights, cfg.score_mode)
    ranked = rank_channels(scores)
    steps = [
        TraceStep(subset, result.accuracy, 1)
        for subset, result in zip(subsets, results)
    ]
    target_subset = None
    target_accuracy = None
    if cfg.target_size is not None:
        target_subset = canonicalize(ranked[: cfg.target_size], n_channels)
        target_result = evaluate(target_subset)
        target_accuracy = target_result.accuracy
        steps.append(TraceStep(target_subset, target_result.accuracy, 1))
    trace = SelectionTrace(tuple(steps), SelectionMethod.WEIGHTED_RANDOM)
    return WeightedRandomResult(scores, tuple(ranked), trace, target_subset, target_accuracy)


DEFAULT_REGION_PREFIXES = ("FC", "C", "CP")


@dataclass(frozen=True)
class RegionSpec:
    """Scalp region described by 10-20 row prefixes, or overridden outright."""

    row_prefixes: tuple[str, ...] = DEFAULT_REGION_PREFIXES
    explicit_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "row_prefixes", tuple(self.row_prefixes))
        if self.explicit_names is not None:
            object.__setattr__(self, "explicit_names", tuple(self.explicit_names))
        if not self.row_prefixes and not self.explicit_names:
            raise ValueError("need at least one row prefix or explicit name")


def row_prefix(label: str) -> str:
    """10-20 row of an electrode label: leading letters, minus a midline 'z'.

    'C3' -> 'C', 'FCz' -> 'FC', 'Fp1' -> 'Fp', 'POz' -> 'PO'.
    """
    run = ""
    for ch in label:
        if ch.isalpha():
            run += ch
        else:
            break
    if len(run) >= 2 and run[-1] in "zZ":
        run = run[:-1]
    return run


def task_based_subset(montage: Montage, region: RegionSpec = RegionSpec()) -> ChannelSubset:
    """Channels whose labels fall in the region; no evaluations involved."""
    if region.explicit_names is not None:
        indices = []
        for name in region.explicit_names:
            try:
                indices.append(montage.index_of(name))
            except KeyError:
                raise UnknownNameError(name) from None
        return canonicalize(indices, montage.n_channels)
    wanted = {p.upper() for p in region.row_prefixes}
    indices = [
        i for i, name in enumerate(montage.channel_names)
        if row_prefix(name).upper() in wanted
    ]
    if not indices:
        raise EmptyRegionError(
            f"no channel in rows {sorted(wanted)} among {montage.channel_names}"
        )
    return ChannelSubset(tuple(indices))


@dataclass(frozen=True)
class CurvePoint:
    size: int
    accuracy: float
    subset: ChannelSubset


def accuracy_curve(trace: SelectionTrace) -> list[CurvePoint]:
    """Best accuracy observed at each distinct subset size, sizes ascending."""
    best: dict[int, TraceStep] = {}
    for step in trace.steps:
        size = step.subset.size
        if size not in best or step.accuracy > best[size].accuracy:
            best[size] = step
    return [
        CurvePoint(size, best[size].accuracy, best[size].subset)
        for size in sorted(best)
    ]
