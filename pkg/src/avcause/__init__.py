"""Causal classification pipeline for autonomous-vehicle incident reports."""

from .ingest import UnifiedRecord, filter_and_unify, merge_sources
from .taxonomy import ClassificationRecord, decode_label, validate

__version__ = "0.1.0"

__all__ = [
    "ClassificationRecord",
    "UnifiedRecord",
    "decode_label",
    "filter_and_unify",
    "merge_sources",
    "validate",
    "__version__",
]
