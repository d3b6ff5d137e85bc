"""Exception types shared across the package.

Invalid arguments raise the builtin ``ValueError``; the classes here cover
failures that carry diagnostics or need to map onto CLI exit codes.
"""

from __future__ import annotations


class TailTreeError(Exception):
    """Base class for package-specific errors."""


class InputError(TailTreeError):
    """Malformed external input (CSV, JSON, config). CLI exit code 2."""


class EstimationError(TailTreeError):
    """An estimator failed to produce a usable value. CLI exit code 3.

    ``details`` holds whatever the failing routine knew at the time
    (clamped boundary values, achieved tolerances, per-edge failures).
    """

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = dict(details or {})
