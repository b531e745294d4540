"""Feature catalog and matrix construction over trace channels."""

from .catalog import (
    FUNCTION_NAMES,
    FeatureSpec,
    compute_feature,
    raw_catalog,
    selected_catalog,
)
from .matrix import FeatureMatrix, extract_row

__all__ = [
    "FUNCTION_NAMES",
    "FeatureSpec",
    "compute_feature",
    "raw_catalog",
    "selected_catalog",
    "FeatureMatrix",
    "extract_row",
]
