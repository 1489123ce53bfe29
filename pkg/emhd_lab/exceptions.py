"""
Exception hierarchy for EMHD Lab.

Every error raised on purpose by the package derives from EMHDError so the
command-line front end can map it to an exit code.
"""
from typing import Any, Dict, List, Optional


class EMHDError(Exception):
    """Base class for all EMHD Lab errors."""


class FieldValueError(EMHDError, ValueError):
    """A field holds non-finite samples or coefficients."""


class RangeError(EMHDError, ValueError):
    """A parameter lies outside the range where its definition applies."""


class RepresentabilityError(EMHDError, ValueError):
    """A Fourier mode would land above the dealias cutoff."""


class ConfigError(EMHDError, ValueError):
    """Configuration failed to load; carries every violation found."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        listing = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid configuration ({len(self.violations)} problem(s)):\n{listing}")


class IntegrationAbort(EMHDError):
    """Time integration stopped before reaching its end time.

    Attributes:
        time: Simulation time at which the integration stopped
        partial: Hook outputs collected up to the abort
    """

    def __init__(self, message: str, time: float,
                 partial: Optional[Dict[str, List[Any]]] = None):
        self.time = time
        self.partial = partial if partial is not None else {}
        super().__init__(f"{message} (t={time:.17g})")


class BlowUpError(IntegrationAbort):
    """The state became non-finite during a step."""


class StepSizeError(IntegrationAbort):
    """The suggested step fell below the configured minimum."""


class SnapshotError(EMHDError):
    """A snapshot could not be decoded.

    Attributes:
        offset: Byte offset at which the problem was detected
    """

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class BadMagicError(SnapshotError):
    """Snapshot does not start with the expected magic bytes."""


class UnsupportedVersionError(SnapshotError):
    """Snapshot was written by a format version this reader does not know."""


class TruncatedSnapshotError(SnapshotError):
    """Snapshot ends before its declared payload."""


class NonFiniteSnapshotError(SnapshotError):
    """Snapshot payload contains NaN or infinite values."""


class SeriesWriteError(EMHDError):
    """A CSV series could not be written."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"cannot write series {path}: {reason}")
