"""Content-hash keyed stage cache and the run lock that guards an output directory."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Optional, Union

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

logger = logging.getLogger(__name__)

CACHE_ENV = "FUZZY_CONNECTOME_CACHE"
LOCK_NAME = ".run.lock"
DONE_MARKER = ".done"


class LockHeldError(RuntimeError):
    pass


def cache_root(output_dir: Union[str, Path]) -> Path:
    env = os.getenv(CACHE_ENV)
    return Path(env) if env else Path(output_dir) / ".cache"


def file_digest(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def content_key(*parts: Any) -> str:
    """sha256 over the canonical JSON of the parts (sorted keys, no whitespace)."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class StageCache:
    """One directory per (stage, key); a stage counts as cached once its marker exists."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def stage_dir(self, stage: str, key: str) -> Path:
        return self.root / stage / key[:16]

    def is_complete(self, stage: str, key: str) -> bool:
        marker = self.stage_dir(stage, key) / DONE_MARKER
        return marker.exists() and marker.read_text(encoding="utf-8") == key

    def prepare(self, stage: str, key: str) -> Path:
        d = self.stage_dir(stage, key)
        d.mkdir(parents=True, exist_ok=True)
        stale = d / DONE_MARKER
        if stale.exists():
            stale.unlink()
        return d

    def mark_complete(self, stage: str, key: str) -> None:
        (self.stage_dir(stage, key) / DONE_MARKER).write_text(key, encoding="utf-8")


class RunLock:
    """Exclusive lock file in the output directory; acquisition is retried with backoff."""

    def __init__(self, directory: Union[str, Path]):
        self.path = Path(directory) / LOCK_NAME
        self._held = False

    def _try_acquire(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockHeldError(f"{self.path} is held by another run")
        with os.fdopen(fd, "w") as fh:
            fh.write(str(os.getpid()))
        self._held = True

    @retry(
        wait=wait_exponential(multiplier=1, min=1, max=10),
        stop=stop_after_attempt(3),
        retry=retry_if_exception_type(LockHeldError),
        reraise=True,
    )
    def acquire(self) -> None:
        self._try_acquire()

    def release(self) -> None:
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False

    def __enter__(self) -> "RunLock":
        self.acquire()
        return self

    def __exit__(self, *exc: Optional[BaseException]) -> None:
        self.release()
