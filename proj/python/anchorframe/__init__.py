"""Occlusion-aware keyframe selection for video editing."""

from ._core import (
    AnchorframeError,
    BoundingBox,
    base_score,
    completeness_score,
    generate_scene,
    iou,
    region_weighted_mse,
    run_cli,
    utility,
)

__all__ = [
    "AnchorframeError",
    "BoundingBox",
    "base_score",
    "completeness_score",
    "generate_scene",
    "iou",
    "region_weighted_mse",
    "run_cli",
    "utility",
]
__version__ = "0.1.0"
