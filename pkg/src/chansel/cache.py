"""Subset-keyed evaluation cache with at-most-once backend invocation.

Greedy search revisits nothing, but exhaustive/random runs and warm restarts
do; evaluations can be expensive (an external evaluator may train a network),
so results are memoized under (evaluator_id, dataset_digest, subset, seed).
Concurrent callers asking for the same key block on the first invocation
instead of duplicating it. Errors are never cached: a transient failure must
not poison its subset.

Set persist_dir to also append every fresh result to a JSON-lines file that
future processes preload.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .model import ChannelSubset, EvalResult

CACHE_FILENAME = "chansel-cache.jsonl"


@dataclass(frozen=True)
class EvalCacheKey:
    evaluator_id: str
    dataset_digest: str
    subset: ChannelSubset
    seed: int


class _Pending:
    __slots__ = ("event", "result", "error")

    def __init__(self):
        self.event = threading.Event()
        self.result: EvalResult | None = None
        self.error: BaseException | None = None


class EvalCache:
    def __init__(self, persist_dir: str | os.PathLike | None = None):
        self._lock = threading.Lock()
        self._results: dict[EvalCacheKey, EvalResult] = {}
        self._pending: dict[EvalCacheKey, _Pending] = {}
        self.hits = 0
        self.misses = 0
        self._persist_path: Path | None = None
        if persist_dir is not None:
            directory = Path(persist_dir)
            directory.mkdir(parents=True, exist_ok=True)
            self._persist_path = directory / CACHE_FILENAME
            self._load_persisted()

    def evaluate(self, key: EvalCacheKey, backend: Callable[[], EvalResult]) -> EvalResult:
        """Return the cached result for key, invoking backend at most once."""
        while True:
            with self._lock:
                if key in self._results:
                    self.hits += 1
                    return self._results[key]
                pending = self._pending.get(key)
                if pending is None:
                    pending = _Pending()
                    self._pending[key] = pending
                    owner = True
                    self.misses += 1
                else:
                    owner = False
            if owner:
                try:
                    result = backend()
                except BaseException as exc:
                    with self._lock:
                        del self._pending[key]
                    pending.error = exc
                    pending.event.set()
                    raise
                with self._lock:
                    self._results[key] = result
                    del self._pending[key]
                pending.result = result
                pending.event.set()
                self._append_persisted(key, result)
                return result
            pending.event.wait()
            if pending.error is not None:
                # the invocation we piggybacked on failed; surface its error
                raise pending.error
            if pending.result is not None:
                with self._lock:
                    self.hits += 1
                return pending.result
            # owner vanished without outcome (should not happen); retry

    def __len__(self):
        with self._lock:
            return len(self._results)

    # --- persistence -----------------------------------------------------------

    def _load_persisted(self):
        path = self._persist_path
        if path is None or not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    key = EvalCacheKey(
                        evaluator_id=rec["evaluator_id"],
                        dataset_digest=rec["dataset_digest"],
                        subset=ChannelSubset(tuple(rec["channels"])),
                        seed=int(rec["seed"]),
                    )
                    per_fold = rec.get("per_fold_accuracy")
                    result = EvalResult(
                        subset=key.subset,
                        accuracy=float(rec["accuracy"]),
                        per_fold_accuracy=tuple(per_fold) if per_fold is not None else None,
                        evaluator_id=key.evaluator_id,
                        seed=key.seed,
                        wall_time_ms=int(rec.get("wall_time_ms", 0)),
                    )
                except (KeyError, TypeError, ValueError, json.JSONDecodeError):
                    continue  # tolerate torn writes from interrupted runs
                self._results.setdefault(key, result)

    def _append_persisted(self, key: EvalCacheKey, result: EvalResult):
        path = self._persist_path
        if path is None:
            return
        rec = {
            "evaluator_id": key.evaluator_id,
            "dataset_digest": key.dataset_digest,
            "channels": list(key.subset.indices),
            "seed": key.seed,
            "accuracy": result.accuracy,
            "per_fold_accuracy": (
                list(result.per_fold_accuracy) if result.per_fold_accuracy is not None else None
            ),
            "wall_time_ms": result.wall_time_ms,
        }
        line = json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"
        with self._lock:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()


def cache_dir_from_env() -> str | None:
    """Honor CHANSEL_CACHE_DIR; unset or empty means no persistence."""
    value = os.environ.get("CHANSEL_CACHE_DIR", "")
    return value or None
