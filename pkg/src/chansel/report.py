"""Run reports, the accuracy-vs-size curve CSV, and the compact-CNN parameter
estimator used to quantify what dropping channels buys.

Reports are line-oriented text (diff-able, trivially grep-able); the curve is
CSV with header "size,accuracy,subset". Accuracies print as fractions in
[0, 1] with 4 decimals. The only non-deterministic report field is
wall_time_ms, which mask_wall_time() strips for comparisons.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path

from .model import ChannelSubset, Montage, SelectionTrace
from .selectors import CurvePoint

REPORT_TAG = "chansel-report 1"


class CountMode(str, Enum):
    TRAINABLE_ONLY = "trainable_only"
    ALL_BATCHNORM = "all_batchnorm"


@dataclass(frozen=True)
class EegnetArch:
    """Hyperparameters of the compact depthwise/separable CNN family.

    Only the depthwise spatial filter depends on the channel count, so the
    parameter count is linear in c with slope f1*d.
    """

    c: int
    t: int
    f1: int = 8
    d: int = 2
    f2: int = 16
    kern_len: int = 64
    sep_kern: int = 16
    pool1: int = 4
    pool2: int = 8
    n_classes: int = 4
    count_mode: CountMode = CountMode.TRAINABLE_ONLY

    def __post_init__(self):
        for name in ("c", "t", "f1", "d", "f2", "kern_len", "sep_kern",
                     "pool1", "pool2", "n_classes"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.pool1 * self.pool2 > self.t:
            raise ValueError(
                f"pooling {self.pool1}*{self.pool2} exceeds {self.t} time samples"
            )


def eegnet_param_count(arch: EegnetArch) -> int:
    """Parameter count of the architecture; batchnorm weighs 2m or 4m per layer
    depending on whether running statistics are included."""
    bn_factor = 2 if arch.count_mode is CountMode.TRAINABLE_ONLY else 4

    def bn(m: int) -> int:
        return bn_factor * m

    temporal = arch.f1 * arch.kern_len
    depthwise = arch.c * arch.f1 * arch.d
    separable = arch.sep_kern * arch.f1 * arch.d + arch.f1 * arch.d * arch.f2
    dense_width = arch.f2 * ((arch.t // arch.pool1) // arch.pool2)
    dense = dense_width * arch.n_classes + arch.n_classes
    return (
        temporal
        + bn(arch.f1)
        + depthwise
        + bn(arch.f1 * arch.d)
        + separable
        + bn(arch.f2)
        + dense
    )


def format_kilo(count: int) -> str:
    """2548 -> '2.55k' with half-up rounding at two decimals."""
    kilo = (Decimal(count) / Decimal(1000)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{kilo}k"


@dataclass(frozen=True)
class RunReport:
    method: str
    dataset_path: str
    dataset_digest: str
    evaluator_id: str
    seed: int
    trace: SelectionTrace | None
    curve: tuple[CurvePoint, ...]
    selected: ChannelSubset | None
    selected_accuracy: float | None
    montage: Montage
    total_evaluations: int
    cache_hits: int
    wall_time_ms: int
    extra_lines: tuple[str, ...] = ()

    def __post_init__(self):
        if self.trace is not None:
            best = self.trace.steps[self.trace.best_step]
            if self.selected != best.subset:
                raise ValueError("selected subset must match the trace's best step")


def _names_joined(subset: ChannelSubset, montage: Montage) -> str:
    return "+".join(sorted(subset.names(montage)))


def render_report(report: RunReport) -> str:
    lines = [
        REPORT_TAG,
        f"method: {report.method}",
        f"dataset: {report.dataset_path}",
        f"dataset_digest: {report.dataset_digest}",
        f"evaluator: {report.evaluator_id}",
        f"seed: {report.seed}",
        "accuracy_convention: fraction of correct trials in [0,1]",
        f"total_evaluations: {report.total_evaluations}",
        f"cache_hits: {report.cache_hits}",
        f"wall_time_ms: {report.wall_time_ms}",
    ]
    lines.extend(report.extra_lines)
    if report.selected is not None:
        lines.append(f"selected_size: {report.selected.size}")
        lines.append(f"selected_indices: {','.join(str(i) for i in report.selected.indices)}")
        lines.append(f"selected_names: {_names_joined(report.selected, report.montage)}")
        if report.selected_accuracy is not None:
            lines.append(f"selected_accuracy: {report.selected_accuracy:.4f}")
    if report.trace is not None:
        lines.append(f"best_step: {report.trace.best_step + 1}")
        lines.append(f"steps: {len(report.trace.steps)}")
        for i, step in enumerate(report.trace.steps, start=1):
            indices = ",".join(str(x) for x in step.subset.indices)
            lines.append(
                f"step {i}: size={step.subset.size} accuracy={step.accuracy:.4f} "
                f"candidates={step.candidates_evaluated} indices={indices} "
                f"names={_names_joined(step.subset, report.montage)}"
            )
    return "\n".join(lines) + "\n"


def render_curve_csv(curve: tuple[CurvePoint, ...] | list[CurvePoint],
                     montage: Montage) -> str:
    rows = ["size,accuracy,subset"]
    for point in curve:
        rows.append(f"{point.size},{point.accuracy:.4f},{_names_joined(point.subset, montage)}")
    return "\n".join(rows) + "\n"


def mask_wall_time(text: str) -> str:
    """Replace wall-time values so reports from different runs compare equal."""
    out = []
    for line in text.splitlines():
        if line.startswith("wall_time_ms:"):
            line = "wall_time_ms: <masked>"
        out.append(line)
    return "\n".join(out) + ("\n" if text.endswith("\n") else "")


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory; rename on success."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_bytes_atomic(path: str | os.PathLike, payload: bytes) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
