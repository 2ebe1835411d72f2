"""pdcbell: simulator and analysis toolkit for fair-sampling-free
local-realism tests with parametric down-conversion photon pairs."""

from .core import (Angle, AngleScan, CountRecord, DetectionEfficiency,
                   ExperimentConfig, UncertainValue, normalize_angle,
                   scan_validate, uv_contrast, uv_ratio)

__all__ = [
    "Angle", "AngleScan", "CountRecord", "DetectionEfficiency",
    "ExperimentConfig", "UncertainValue", "normalize_angle",
    "scan_validate", "uv_contrast", "uv_ratio",
]

__version__ = "0.1.0"
