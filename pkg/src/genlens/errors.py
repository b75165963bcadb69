"""Exception types shared across the package.

Every error raised on a user-facing path derives from GenlensError so the
CLI can map validation failures to exit code 2 and everything else to 1.
"""

from __future__ import annotations


class GenlensError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GenlensError):
    """Bad input: malformed graph, wrong shapes, out-of-range arguments."""


class GraphError(ValidationError):
    """Structural problem in a causal graph definition."""


class ShapeError(ValidationError):
    """Tensor arguments with incompatible or unsupported shapes."""


class ManifestError(ValidationError):
    """Problem reading or writing a model manifest or weight blob."""
