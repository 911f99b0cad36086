"""Trial-set persistence and generation.

The on-disk container (ETS) is deliberately minimal and bit-exact:

    bytes 0..3   magic "ETS1"
    bytes 4..7   header length, unsigned 32-bit little-endian
    header       UTF-8 JSON object with exactly the keys
                 n_trials, n_channels, n_samples, fs_hz, channel_names,
                 labels, dtype ("f32le"), layout ("trial-channel-time"),
                 serialized with sorted keys and compact separators
    payload      n_trials * n_channels * n_samples little-endian float32,
                 nested trial -> channel -> time

Two writes of the same trial set produce identical byte streams, which is what
makes SHA-256 fingerprinting and cross-process caching sound.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, TextIO

import numpy as np

from .errors import (
    BadLabelError,
    BadMagicError,
    BadNumberError,
    HeaderParseError,
    NonFiniteSampleError,
    PayloadLengthMismatchError,
    RaggedRowsError,
    SpecInvalidError,
)
from .model import ChannelSubset, Montage, TrialSet, generic_names

ETS_MAGIC = b"ETS1"
DTYPE_TAG = "f32le"
LAYOUT_TAG = "trial-channel-time"

# Log noise-scale step, per unit of separation, between adjacent classes on an
# informative channel. 0.03 keeps single planted channels clearly above chance
# without saturating multi-channel accuracy at the generator's default scales.
CLASS_LOG_SNR_STEP = 0.03


@dataclass(frozen=True)
class EtsHeader:
    n_trials: int
    n_channels: int
    n_samples: int
    fs_hz: float
    channel_names: tuple[str, ...]
    labels: tuple[int, ...]
    dtype: str = DTYPE_TAG
    layout: str = LAYOUT_TAG

    def __post_init__(self):
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))
        if len(self.channel_names) != self.n_channels:
            raise HeaderParseError("channel_names length disagrees with n_channels")
        if len(self.labels) != self.n_trials:
            raise HeaderParseError("labels length disagrees with n_trials")
        if self.dtype != DTYPE_TAG:
            raise HeaderParseError(f"unsupported dtype tag {self.dtype!r}")
        if self.layout != LAYOUT_TAG:
            raise HeaderParseError(f"unsupported layout tag {self.layout!r}")

    @classmethod
    def for_trials(cls, trials: TrialSet) -> "EtsHeader":
        return cls(
            n_trials=trials.n_trials,
            n_channels=trials.n_channels,
            n_samples=trials.n_samples,
            fs_hz=trials.montage.fs_hz,
            channel_names=trials.montage.channel_names,
            labels=tuple(int(x) for x in trials.labels),
        )

    def to_bytes(self) -> bytes:
        doc = {
            "n_trials": self.n_trials,
            "n_channels": self.n_channels,
            "n_samples": self.n_samples,
            "fs_hz": self.fs_hz,
            "channel_names": list(self.channel_names),
            "labels": list(self.labels),
            "dtype": self.dtype,
            "layout": self.layout,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "EtsHeader":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise HeaderParseError(f"header is not valid UTF-8 JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise HeaderParseError("header document must be a JSON object")
        required = {
            "n_trials", "n_channels", "n_samples", "fs_hz",
            "channel_names", "labels", "dtype", "layout",
        }
        missing = required - doc.keys()
        if missing:
            raise HeaderParseError(f"header missing keys: {sorted(missing)}")
        try:
            return cls(
                n_trials=int(doc["n_trials"]),
                n_channels=int(doc["n_channels"]),
                n_samples=int(doc["n_samples"]),
                fs_hz=float(doc["fs_hz"]),
                channel_names=tuple(doc["channel_names"]),
                labels=tuple(int(x) for x in doc["labels"]),
                dtype=doc["dtype"],
                layout=doc["layout"],
            )
        except (TypeError, ValueError) as exc:
            raise HeaderParseError(f"header field malformed: {exc}") from exc


def write_ets(trials: TrialSet, sink: BinaryIO) -> int:
    """Serialize; returns the number of bytes written."""
    header = EtsHeader.for_trials(trials).to_bytes()
    payload = np.ascontiguousarray(trials.samples, dtype="<f4").tobytes()
    written = 0
    for chunk in (ETS_MAGIC, struct.pack("<I", len(header)), header, payload):
        sink.write(chunk)
        written += len(chunk)
    return written


def _read_exact(source: BinaryIO, n: int) -> bytes:
    buf = source.read(n)
    return buf if buf is not None else b""


def read_ets(source: BinaryIO) -> TrialSet:
    """Inverse of write_ets. Leaves the stream positioned after the payload."""
    magic = _read_exact(source, 4)
    if magic != ETS_MAGIC:
        raise BadMagicError(f"expected magic {ETS_MAGIC!r}, found {magic!r}")
    raw_len = _read_exact(source, 4)
    if len(raw_len) != 4:
        raise HeaderParseError("stream ends inside the header length field")
    (header_len,) = struct.unpack("<I", raw_len)
    raw_header = _read_exact(source, header_len)
    if len(raw_header) != header_len:
        raise HeaderParseError("stream ends inside the header document")
    header = EtsHeader.from_bytes(raw_header)

    expected = header.n_trials * header.n_channels * header.n_samples * 4
    payload = _read_exact(source, expected)
    if len(payload) != expected:
        raise PayloadLengthMismatchError(expected, len(payload))
    samples = np.frombuffer(payload, dtype="<f4").reshape(
        header.n_trials, header.n_channels, header.n_samples
    )
    if not np.isfinite(samples).all():
        raise NonFiniteSampleError("payload contains NaN or infinite samples")
    try:
        montage = Montage(header.channel_names, header.fs_hz)
        return TrialSet(montage, samples, header.labels, max(header.labels))
    except ValueError as exc:
        raise HeaderParseError(str(exc)) from exc


def fingerprint(trials: TrialSet) -> str:
    """SHA-256 hex digest of the canonical ETS serialization."""
    buf = io.BytesIO()
    write_ets(trials, buf)
    return hashlib.sha256(buf.getvalue()).hexdigest()


def import_csv(source: TextIO, fs_hz: float, channel_names: Iterable[str]) -> TrialSet:
    """Read one trial per CSV row: integer label, then C*T values channel-major.

    Comma separated, optional surrounding spaces, '#' lines and blank lines
    ignored. All rows must have the same width, and that width minus the label
    must split evenly into len(channel_names) channels.
    """
    names = tuple(channel_names)
    c = len(names)
    if c < 1:
        raise ValueError("need at least one channel name")
    labels: list[int] = []
    rows: list[np.ndarray] = []
    width: int | None = None
    t: int | None = None
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip() for f in stripped.split(",")]
        if width is None:
            width = len(fields)
            if (width - 1) % c != 0 or width - 1 < c:
                raise RaggedRowsError(
                    f"row {lineno}: {width - 1} values do not divide into {c} channels",
                    lineno,
                )
            t = (width - 1) // c
        elif len(fields) != width:
            raise RaggedRowsError(
                f"row {lineno}: expected {width} fields, found {len(fields)}", lineno
            )
        try:
            label = int(fields[0])
        except ValueError:
            raise BadLabelError(f"row {lineno}: label {fields[0]!r} is not an integer") from None
        if label < 1:
            raise BadLabelError(f"row {lineno}: label {label} must be >= 1")
        labels.append(label)
        values = np.empty(width - 1, dtype=np.float64)
        for col, text in enumerate(fields[1:], start=2):
            try:
                values[col - 2] = float(text)
            except ValueError:
                raise BadNumberError(lineno, col, text) from None
        rows.append(values.reshape(c, t))
    if not rows:
        raise RaggedRowsError("no data rows found", 0)
    samples = np.stack(rows).astype(np.float32)
    montage = Montage(names, fs_hz)
    try:
        return TrialSet(montage, samples, labels, max(labels))
    except ValueError as exc:
        raise BadLabelError(str(exc)) from exc


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic synthetic trial set with planted channels.

    Informative channels carry class-dependent signal power: for class y the
    noise scale is noise_sigma * exp(CLASS_LOG_SNR_STEP * separation *
    (y - (K+1)/2)), so band-power and variance features separate the classes
    while non-informative channels stay exchangeable with plain noise.
    separation = 0 removes the planted structure entirely.
    """

    n_trials: int
    n_channels: int
    n_samples: int
    n_classes: int
    informative_channels: ChannelSubset
    separation: float = 6.0
    noise_sigma: float = 1.0
    fs_hz: float = 128.0

    def __post_init__(self):
        if self.n_classes < 2:
            raise SpecInvalidError("need at least two classes")
        if self.n_trials < self.n_classes:
            raise SpecInvalidError("need at least one trial per class")
        if self.n_channels < 1 or self.n_samples < 1:
            raise SpecInvalidError("channel and sample counts must be positive")
        try:
            self.informative_channels.validate_for(self.n_channels)
        except Exception as exc:
            raise SpecInvalidError(f"informative channels invalid: {exc}") from exc
        if not (self.separation >= 0 and np.isfinite(self.separation)):
            raise SpecInvalidError("separation must be finite and non-negative")
        if not (self.noise_sigma > 0 and np.isfinite(self.noise_sigma)):
            raise SpecInvalidError("noise sigma must be positive")
        if not (self.fs_hz > 0 and np.isfinite(self.fs_hz)):
            raise SpecInvalidError("sampling rate must be positive")


def synth(spec: SynthSpec, seed: int) -> TrialSet:
    """Generate the trial set described by spec; identical bytes for equal (spec, seed)."""
    rng = np.random.default_rng(seed)
    n, c, t, k = spec.n_trials, spec.n_channels, spec.n_samples, spec.n_classes
    labels = (np.arange(n) % k) + 1
    samples = rng.standard_normal((n, c, t)) * spec.noise_sigma
    if spec.separation > 0:
        scale = np.exp(CLASS_LOG_SNR_STEP * spec.separation * (labels - (k + 1) / 2))
        cols = list(spec.informative_channels.indices)
        samples[:, cols, :] *= scale[:, None, None]
    montage = Montage(generic_names(c), spec.fs_hz)
    return TrialSet(montage, samples.astype(np.float32), labels, k)
