from __future__ import annotations

from typing import List, Optional


class FuzzyConnectomeError(Exception):
    """Base class for every error raised by the package."""


class DatasetError(FuzzyConnectomeError, ValueError):
    """Manifest or series file problem; message names the subject and file."""

    def __init__(self, message: str, subject_id: Optional[str] = None, location: Optional[str] = None):
        parts = [message]
        if subject_id is not None:
            parts.append(f"subject={subject_id}")
        if location is not None:
            parts.append(f"location={location}")
        super().__init__(" | ".join(parts))
        self.subject_id = subject_id
        self.location = location


class ConfigError(FuzzyConnectomeError, ValueError):
    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class ShapeError(FuzzyConnectomeError, ValueError):
    pass


class DivergenceError(FuzzyConnectomeError, RuntimeError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class SingularSystemError(FuzzyConnectomeError, RuntimeError):
    def __init__(self, message: str, rule: Optional[int] = None):
        super().__init__(message if rule is None else f"{message} (rule {rule})")
        self.rule = rule


class StageError(FuzzyConnectomeError, RuntimeError):
    """A pipeline stage failed; keeps the last artifact that was written successfully."""

    def __init__(self, stage: str, cause: BaseException, last_good_artifact: Optional[str] = None):
        msg = f"stage '{stage}' failed: {cause}"
        if last_good_artifact:
            msg += f" (last good artifact: {last_good_artifact})"
        super().__init__(msg)
        self.stage = stage
        self.cause = cause
        self.last_good_artifact = last_good_artifact
