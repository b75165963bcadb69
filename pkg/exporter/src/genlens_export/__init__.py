"""Convert torch generator checkpoints into the portable manifest+blob format."""

from __future__ import annotations

__version__ = "0.1.0"

from .blob import dump_tensors
from .export import (
    ExportError,
    ExportResult,
    ExportSpec,
    builtin_mapping,
    expected_shapes,
    export_checkpoint,
    manifest_dict,
)
from .models import ARCHITECTURES, ArchSpec, Generator, build_model, init_weights

__all__ = [
    "ARCHITECTURES",
    "ArchSpec",
    "ExportError",
    "ExportResult",
    "ExportSpec",
    "Generator",
    "__version__",
    "build_model",
    "builtin_mapping",
    "dump_tensors",
    "expected_shapes",
    "export_checkpoint",
    "init_weights",
    "manifest_dict",
]
