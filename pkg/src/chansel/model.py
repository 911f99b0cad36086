"""Core domain types: montages, trial sets, channel subsets, traces.

All types are immutable after construction and safe to share across threads.
Channel indices are 0-based everywhere; montage names carry the human-facing
identity and appear next to indices in reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import (
    AllZeroMaskError,
    EmptySubsetError,
    IndexOutOfRangeError,
)

# The conventional 22-electrode 10-20 montage used by the four-class motor
# imagery recordings this tool is typically pointed at.
TEN_TWENTY_22 = (
    "Fz",
    "FC3", "FC1", "FCz", "FC2", "FC4",
    "C5", "C3", "C1", "Cz", "C2", "C4", "C6",
    "CP3", "CP1", "CPz", "CP2", "CP4",
    "P1", "Pz", "P2",
    "POz",
)


@dataclass(frozen=True)
class Montage:
    """Ordered electrode labels plus the sampling rate they were recorded at."""

    channel_names: tuple[str, ...]
    fs_hz: float

    def __post_init__(self):
        names = tuple(self.channel_names)
        object.__setattr__(self, "channel_names", names)
        if len(names) < 1:
            raise ValueError("montage needs at least one channel")
        if any(not isinstance(n, str) or not n for n in names):
            raise ValueError("channel names must be non-empty strings")
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        if not (float(self.fs_hz) > 0 and np.isfinite(self.fs_hz)):
            raise ValueError("sampling rate must be a positive finite number")
        object.__setattr__(self, "fs_hz", float(self.fs_hz))

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    def index_of(self, name: str) -> int:
        """Case-insensitive lookup of a channel label."""
        lowered = [n.lower() for n in self.channel_names]
        try:
            return lowered.index(name.lower())
        except ValueError:
            raise KeyError(name) from None


def generic_names(n_channels: int) -> tuple[str, ...]:
    """Placeholder labels ch00, ch01, ... for synthetic montages."""
    width = max(2, len(str(n_channels - 1)))
    return tuple(f"ch{i:0{width}d}" for i in range(n_channels))


class TrialSet:
    """N labeled trials, each a C x T float32 sample matrix.

    Labels are class ids in 1..K with every class present at least once.
    Samples are stored as float32 (the container format's payload precision)
    and frozen against mutation.
    """

    def __init__(self, montage: Montage, samples, labels, n_classes: int):
        samples = np.asarray(samples, dtype=np.float32)
        labels = np.asarray(labels, dtype=np.int64)
        if samples.ndim != 3:
            raise ValueError("samples must have shape (n_trials, n_channels, n_samples)")
        n, c, t = samples.shape
        if c != montage.n_channels:
            raise ValueError(f"samples have {c} channels but montage has {montage.n_channels}")
        if n < 1 or t < 1:
            raise ValueError("need at least one trial and one time sample")
        if labels.shape != (n,):
            raise ValueError("labels must be one class id per trial")
        k = int(n_classes)
        if k < 1:
            raise ValueError("n_classes must be >= 1")
        if labels.min() < 1 or labels.max() > k:
            raise ValueError(f"labels must lie in [1, {k}]")
        present = set(np.unique(labels).tolist())
        missing = sorted(set(range(1, k + 1)) - present)
        if missing:
            raise ValueError(f"class {missing[0]} has no trials")
        if not np.isfinite(samples).all():
            raise ValueError("samples must all be finite")
        samples = samples.copy()
        labels = labels.copy()
        samples.flags.writeable = False
        labels.flags.writeable = False
        self.montage = montage
        self.samples = samples
        self.labels = labels
        self.n_classes = k

    @property
    def n_trials(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[2]

    def __repr__(self):
        return (
            f"TrialSet(n_trials={self.n_trials}, n_channels={self.n_channels}, "
            f"n_samples={self.n_samples}, n_classes={self.n_classes})"
        )


@dataclass(frozen=True, order=True)
class ChannelSubset:
    """Canonical (strictly increasing, non-empty) tuple of channel indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx:
            raise EmptySubsetError("channel subset cannot be empty")
        for i in idx:
            if i < 0:
                raise IndexOutOfRangeError(i, 0)
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing; use canonicalize()")

    @property
    def size(self) -> int:
        return len(self.indices)

    def validate_for(self, n_channels: int) -> None:
        if self.indices[-1] >= n_channels:
            raise IndexOutOfRangeError(self.indices[-1], n_channels)

    def names(self, montage: Montage) -> tuple[str, ...]:
        self.validate_for(montage.n_channels)
        return tuple(montage.channel_names[i] for i in self.indices)

    def __contains__(self, index: int) -> bool:
        return index in self.indices

    def __iter__(self):
        return iter(self.indices)

    def __str__(self):
        return "{" + ",".join(str(i) for i in self.indices) + "}"


def canonicalize(indices: Iterable[int], n_channels: int | None = None) -> ChannelSubset:
    """Sort, deduplicate and bound-check a raw index list."""
    idx = [int(i) for i in indices]
    if not idx:
        raise EmptySubsetError("channel subset cannot be empty")
    for i in idx:
        if i < 0 or (n_channels is not None and i >= n_channels):
            raise IndexOutOfRangeError(i, n_channels if n_channels is not None else 0)
    return ChannelSubset(tuple(sorted(set(idx))))


@dataclass(frozen=True)
class SubsetMask:
    """One-hot channel membership vector; bit i says whether channel i is in."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        object.__setattr__(self, "bits", bits)
        if len(bits) < 1:
            raise ValueError("mask must cover at least one channel")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("mask bits must be 0 or 1")

    @property
    def width(self) -> int:
        return len(self.bits)


def mask_of(subset: ChannelSubset, n_channels: int) -> SubsetMask:
    subset.validate_for(n_channels)
    bits = [0] * n_channels
    for i in subset.indices:
        bits[i] = 1
    return SubsetMask(tuple(bits))


def subset_of(mask: SubsetMask) -> ChannelSubset:
    idx = tuple(i for i, b in enumerate(mask.bits) if b)
    if not idx:
        raise AllZeroMaskError("mask has no set bits")
    return ChannelSubset(idx)


def restrict(trials: TrialSet, subset: ChannelSubset) -> TrialSet:
    """Keep only the subset's channels (ascending index order), all else unchanged."""
    subset.validate_for(trials.n_channels)
    montage = Montage(
        tuple(trials.montage.channel_names[i] for i in subset.indices),
        trials.montage.fs_hz,
    )
    samples = trials.samples[:, list(subset.indices), :]
    return TrialSet(montage, samples, trials.labels, trials.n_classes)


@dataclass(frozen=True)
class EvalResult:
    """One subset evaluation: the accuracy weight plus reproducibility metadata."""

    subset: ChannelSubset
    accuracy: float
    per_fold_accuracy: tuple[float, ...] | None
    evaluator_id: str
    seed: int
    wall_time_ms: int

    def __post_init__(self):
        acc = float(self.accuracy)
        object.__setattr__(self, "accuracy", acc)
        if not (0.0 <= acc <= 1.0):
            raise ValueError(f"accuracy {acc} outside [0, 1]")
        if self.per_fold_accuracy is not None:
            folds = tuple(float(a) for a in self.per_fold_accuracy)
            object.__setattr__(self, "per_fold_accuracy", folds)
            if any(not (0.0 <= a <= 1.0) for a in folds):
                raise ValueError("per-fold accuracies must lie in [0, 1]")
        if int(self.seed) < 0:
            raise ValueError("seed must be unsigned")
        if int(self.wall_time_ms) < 0:
            raise ValueError("wall time cannot be negative")


@dataclass(frozen=True)
class ScoreVector:
    """Per-channel accumulated scores plus the number of contributing subsets."""

    scores: tuple[float, ...]
    k_subsets: int

    def __post_init__(self):
        scores = tuple(float(s) for s in self.scores)
        object.__setattr__(self, "scores", scores)
        if len(scores) < 1:
            raise ValueError("score vector cannot be empty")
        if any(not np.isfinite(s) or s < 0 for s in scores):
            raise ValueError("scores must be finite and non-negative")
        if int(self.k_subsets) < 1:
            raise ValueError("k_subsets must be >= 1")

    def __len__(self):
        return len(self.scores)


class SelectionMethod(str, Enum):
    EXHAUSTIVE = "exhaustive"
    GREEDY = "greedy"
    WEIGHTED_RANDOM = "weighted_random"
    TASK_BASED = "task_based"


@dataclass(frozen=True)
class TraceStep:
    subset: ChannelSubset
    accuracy: float
    candidates_evaluated: int

    def __post_init__(self):
        if not (0.0 <= float(self.accuracy) <= 1.0):
            raise ValueError("step accuracy outside [0, 1]")
        if int(self.candidates_evaluated) < 1:
            raise ValueError("a recorded step evaluated at least one candidate")


@dataclass(frozen=True)
class SelectionTrace:
    """Per-step winners of a search run; best_step is the global accuracy argmax."""

    steps: tuple[TraceStep, ...]
    method: SelectionMethod
    best_step: int = field(init=False)

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise ValueError("trace needs at least one step")
        if self.method is SelectionMethod.GREEDY:
            for s, step in enumerate(steps):
                if step.subset.size != s + 1:
                    raise ValueError(f"greedy step {s} must hold a subset of size {s + 1}")
                if s > 0 and not set(steps[s - 1].subset.indices) < set(step.subset.indices):
                    raise ValueError(f"greedy step {s} must strictly extend step {s - 1}")
        best = 0
        for i, step in enumerate(steps):
            if step.accuracy > steps[best].accuracy:
                best = i
        object.__setattr__(self, "best_step", best)

    @property
    def best(self) -> TraceStep:
        return self.steps[self.best_step]

    def __len__(self):
        return len(self.steps)
