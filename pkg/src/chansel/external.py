"""Child-process evaluator sessions speaking the chansel-eval line protocol.

One record per line, UTF-8 JSON, over the child's stdin/stdout (stderr passes
through for logs):

    hello    {"protocol": "chansel-eval", "version": 1, "name": "<text>"}
    request  {"id": N, "op": "evaluate", "dataset": "<path>",
              "channels": [sorted 0-based indices], "seed": S}
    success  {"id": N, "ok": true, "accuracy": A}      (extra fields ignored)
    failure  {"id": N, "ok": false, "error": "<text>"}
    bye      {"op": "shutdown"}                        (evaluator exits 0)

Structural violations (non-JSON line, wrong id, missing fields) tear the
session down and reap the process. An ok=false reply or an out-of-range
accuracy is a content error: it raises but leaves the session usable.
"""

from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
import time
from typing import Sequence

from .errors import (
    AccuracyOutOfRangeError,
    EvaluatorError,
    ProcessExitedError,
    ProtocolMalformedError,
    ProtocolTimeoutError,
)
from .model import ChannelSubset, EvalResult

PROTOCOL_NAME = "chansel-eval"
PROTOCOL_VERSION = 1

_EOF = object()


class ExternalEvaluatorSession:
    def __init__(self, command: Sequence[str] | str, hello_timeout_s: float = 30.0):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=None,  # pass evaluator logs through
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._request_id = 0
        self._closed = False
        self._lock = threading.Lock()
        hello = self._read_record(hello_timeout_s)
        if hello.get("protocol") != PROTOCOL_NAME or hello.get("version") != PROTOCOL_VERSION:
            self.close()
            raise ProtocolMalformedError(
                f"bad hello record: {hello!r}", line=json.dumps(hello)
            )
        self.name = str(hello.get("name", "unnamed"))

    def _pump(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(_EOF)

    def _read_record(self, timeout_s: float) -> dict:
        try:
            line = self._lines.get(timeout=timeout_s)
        except queue.Empty:
            self.close()
            raise ProtocolTimeoutError(
                f"no reply from {self.command[0]} within {timeout_s} s"
            ) from None
        if line is _EOF:
            code = self._proc.wait()
            self.close()
            raise ProcessExitedError(code)
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            self.close()
            raise ProtocolMalformedError(f"not a JSON record: {line!r}", line=line) from None
        if not isinstance(record, dict):
            self.close()
            raise ProtocolMalformedError(f"record is not an object: {line!r}", line=line)
        return record

    def _send(self, record: dict):
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(record) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            code = self._proc.poll()
            self.close()
            raise ProcessExitedError(code) from None

    def evaluate(self, dataset_path: str, subset: ChannelSubset, seed: int,
                 timeout_s: float = 300.0) -> EvalResult:
        with self._lock:
            if self._closed:
                raise ProcessExitedError(self._proc.poll())
            start = time.perf_counter()
            self._request_id += 1
            request_id = self._request_id
            self._send({
                "id": request_id,
                "op": "evaluate",
                "dataset": str(dataset_path),
                "channels": list(subset.indices),
                "seed": int(seed),
            })
            reply = self._read_record(timeout_s)
            if reply.get("id") != request_id:
                self.close()
                raise ProtocolMalformedError(
                    f"reply id {reply.get('id')!r} does not match request id {request_id}",
                    line=json.dumps(reply),
                )
            if "ok" not in reply:
                self.close()
                raise ProtocolMalformedError(f"reply lacks 'ok': {reply!r}")
            if not reply["ok"]:
                raise EvaluatorError(str(reply.get("error", "unspecified evaluator failure")))
            accuracy = reply.get("accuracy")
            if not isinstance(accuracy, (int, float)) or not (0.0 <= float(accuracy) <= 1.0):
                raise AccuracyOutOfRangeError(accuracy)
            return EvalResult(
                subset=subset,
                accuracy=float(accuracy),
                per_fold_accuracy=None,
                evaluator_id=f"external:{self.name}",
                seed=int(seed),
                wall_time_ms=int((time.perf_counter() - start) * 1000),
            )

    def shutdown(self, timeout_s: float = 10.0) -> int | None:
        """Polite stop: send the shutdown record and wait for exit."""
        if self._closed:
            return self._proc.poll()
        try:
            self._send({"op": "shutdown"})
        except ProcessExitedError:
            pass
        try:
            code = self._proc.wait(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            code = None
        self.close()
        return code if code is not None else self._proc.poll()

    def close(self):
        if self._closed:
            return
        self._closed = True
        for stream in (self._proc.stdin, self._proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    @property
    def alive(self) -> bool:
        return not self._closed and self._proc.poll() is None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()
        return False


class ExternalSessionPool:
    """Fixed-size pool of sessions; one in-flight request per session.

    Sessions that die on a structural protocol violation are discarded rather
    than respawned, so persistent evaluator bugs fail fast instead of looping.
    """

    def __init__(self, command: Sequence[str] | str, size: int = 1,
                 hello_timeout_s: float = 30.0):
        if size < 1:
            raise ValueError("pool needs at least one session")
        self._idle: queue.Queue = queue.Queue()
        self._sessions: list[ExternalEvaluatorSession] = []
        try:
            for _ in range(size):
                session = ExternalEvaluatorSession(command, hello_timeout_s)
                self._sessions.append(session)
                self._idle.put(session)
        except Exception:
            self.close()
            raise
        self.name = self._sessions[0].name

    def evaluate(self, dataset_path: str, subset: ChannelSubset, seed: int,
                 timeout_s: float = 300.0) -> EvalResult:
        session = self._idle.get()
        try:
            result = session.evaluate(dataset_path, subset, seed, timeout_s)
        except (EvaluatorError, AccuracyOutOfRangeError):
            self._idle.put(session)  # content error; session still healthy
            raise
        except Exception:
            if session.alive:
                session.close()
            raise
        self._idle.put(session)
        return result

    def close(self):
        for session in self._sessions:
            try:
                session.shutdown()
            except Exception:
                session.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
