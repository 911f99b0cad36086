import os
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
SRC_DIR = REPO_ROOT / "src"
PYEVAL_SRC = REPO_ROOT / "pyeval" / "src"


def _pythonpath(*extra: Path) -> str:
    parts = [str(p) for p in (SRC_DIR, *extra)]
    existing = os.environ.get("PYTHONPATH")
    if existing:
        parts.append(existing)
    return os.pathsep.join(parts)


@pytest.fixture
def run_cli():
    """Invoke the chansel CLI in a subprocess with a clean cache environment."""

    def run(*args, env=None, timeout=300):
        merged = dict(os.environ)
        merged.pop("CHANSEL_CACHE_DIR", None)
        merged["PYTHONPATH"] = _pythonpath(PYEVAL_SRC)
        if env:
            merged.update(env)
        return subprocess.run(
            [sys.executable, "-m", "chansel", *[str(a) for a in args]],
            capture_output=True,
            text=True,
            timeout=timeout,
            env=merged,
        )

    return run


@pytest.fixture
def pyeval_command():
    """Command line that launches the reference external evaluator plugin."""
    return [sys.executable, "-m", "pyeval"]


@pytest.fixture(autouse=True)
def _no_ambient_cache(monkeypatch):
    monkeypatch.delenv("CHANSEL_CACHE_DIR", raising=False)


@pytest.fixture(autouse=True)
def _pyeval_importable(monkeypatch):
    monkeypatch.setenv("PYTHONPATH", _pythonpath(PYEVAL_SRC))
