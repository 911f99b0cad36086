"""Self-contained reader/writer for the ETS trial-set container.

Layout: magic "ETS1", u32-LE header length, UTF-8 JSON header (keys n_trials,
n_channels, n_samples, fs_hz, channel_names, labels, dtype="f32le",
layout="trial-channel-time"; sorted keys, compact separators), then
n_trials*n_channels*n_samples little-endian float32 samples nested
trial -> channel -> time.

serialize() reproduces that byte stream canonically, so the SHA-256 of a
load/serialize round trip can be compared against the digest any other
implementation computes for the same data.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

MAGIC = b"ETS1"
DTYPE_TAG = "f32le"
LAYOUT_TAG = "trial-channel-time"


class EtsError(ValueError):
    pass


def read_ets(path: str) -> tuple[np.ndarray, np.ndarray, list[str], float]:
    """Return (samples float32 N x C x T, labels int N, channel names, fs_hz)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise EtsError(f"bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise EtsError("truncated header length field")
    (header_len,) = struct.unpack("<I", raw[4:8])
    header_end = 8 + header_len
    if len(raw) < header_end:
        raise EtsError("truncated header document")
    try:
        header = json.loads(raw[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EtsError(f"header is not valid JSON: {exc}") from exc
    try:
        n = int(header["n_trials"])
        c = int(header["n_channels"])
        t = int(header["n_samples"])
        fs = float(header["fs_hz"])
        names = [str(x) for x in header["channel_names"]]
        labels = np.asarray([int(x) for x in header["labels"]], dtype=np.int64)
        dtype = header["dtype"]
        layout = header["layout"]
    except (KeyError, TypeError, ValueError) as exc:
        raise EtsError(f"header field malformed: {exc}") from exc
    if dtype != DTYPE_TAG or layout != LAYOUT_TAG:
        raise EtsError(f"unsupported tags dtype={dtype!r} layout={layout!r}")
    if len(names) != c or len(labels) != n:
        raise EtsError("header list lengths disagree with counts")
    expected = n * c * t * 4
    payload = raw[header_end:header_end + expected]
    if len(payload) != expected:
        raise EtsError(f"payload truncated: expected {expected} bytes, got {len(payload)}")
    samples = np.frombuffer(payload, dtype="<f4").reshape(n, c, t)
    if not np.isfinite(samples).all():
        raise EtsError("payload contains non-finite samples")
    return samples, labels, names, fs


def serialize(samples: np.ndarray, labels, names, fs: float) -> bytes:
    samples = np.ascontiguousarray(samples, dtype="<f4")
    n, c, t = samples.shape
    header = json.dumps(
        {
            "n_trials": n,
            "n_channels": c,
            "n_samples": t,
            "fs_hz": float(fs),
            "channel_names": [str(x) for x in names],
            "labels": [int(x) for x in labels],
            "dtype": DTYPE_TAG,
            "layout": LAYOUT_TAG,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header)) + header + samples.tobytes()


def digest_file(path: str) -> str:
    """SHA-256 of the canonical re-serialization of the file's contents."""
    samples, labels, names, fs = read_ets(path)
    return hashlib.sha256(serialize(samples, labels, names, fs)).hexdigest()
