"""chansel-eval protocol server: one JSON record per line over stdio.

Emits the hello record, then answers "evaluate" requests with the held-out
accuracy of the configured classifier on the requested channel subset. Any
per-request failure becomes an ok:false reply; the loop never dies on a bad
request. A {"op": "shutdown"} record (or EOF) exits 0.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from .classifier import PluginConfig, held_out_accuracy
from .ets import digest_file, read_ets, serialize

PROTOCOL = "chansel-eval"
VERSION = 1
NAME = "pyeval-logreg"


def _emit(stream, record: dict):
    stream.write(json.dumps(record) + "\n")
    stream.flush()


class _DatasetCache:
    """One-slot cache: selection loops hammer the same file request after request."""

    def __init__(self):
        self._path = None
        self._data = None
        self._digest = None

    def load(self, path: str):
        if path != self._path:
            samples, labels, names, fs = read_ets(path)
            self._digest = hashlib.sha256(serialize(samples, labels, names, fs)).hexdigest()
            self._data = (samples, labels, names, fs)
            self._path = path
        return self._data

    @property
    def digest(self) -> str:
        return self._digest


def serve(stdin=None, stdout=None, cfg: PluginConfig = PluginConfig()) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    _emit(stdout, {"protocol": PROTOCOL, "version": VERSION, "name": NAME})
    datasets = _DatasetCache()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            print(f"pyeval: discarding non-record line: {exc}", file=sys.stderr)
            _emit(stdout, {"id": -1, "ok": False, "error": f"not a JSON record: {exc}"})
            continue
        if not isinstance(request, dict):
            _emit(stdout, {"id": -1, "ok": False, "error": "record is not an object"})
            continue
        op = request.get("op")
        if op == "shutdown":
            return 0
        request_id = request.get("id", -1)
        if op != "evaluate":
            _emit(stdout, {"id": request_id, "ok": False, "error": f"unknown op {op!r}"})
            continue
        try:
            samples, labels, _names, _fs = datasets.load(str(request["dataset"]))
            accuracy = held_out_accuracy(
                samples, labels, list(request["channels"]), int(request.get("seed", 0)), cfg
            )
            _emit(stdout, {
                "id": request_id,
                "ok": True,
                "accuracy": accuracy,
                "dataset_digest": datasets.digest,
            })
        except Exception as exc:  # reply, never crash the loop
            _emit(stdout, {"id": request_id, "ok": False, "error": str(exc)})
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chansel-pyeval",
        description="Reference chansel-eval plugin (log-variance logistic regression).",
    )
    sub = parser.add_subparsers(dest="command")
    p_serve = sub.add_parser("serve", help="run the stdio request loop (default)")
    p_serve.add_argument("--test-fraction", type=float, default=0.25)
    p_serve.add_argument("--max-iterations", type=int, default=300)
    p_digest = sub.add_parser("digest", help="print the canonical digest of an ETS file")
    p_digest.add_argument("path")
    args = parser.parse_args(argv)
    if args.command == "digest":
        try:
            print(digest_file(args.path))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return 0
    cfg = PluginConfig(
        test_fraction=getattr(args, "test_fraction", 0.25),
        max_iterations=getattr(args, "max_iterations", 300),
    )
    return serve(cfg=cfg)


if __name__ == "__main__":
    sys.exit(main())
