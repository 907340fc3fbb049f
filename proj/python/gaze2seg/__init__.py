"""Gaze-guided lesion segmentation: phantom synthesis, saliency, random-walker
segmentation, and evaluation metrics."""

from ._core import (
    dice,
    hausdorff_mm,
    make_phantom,
    random_walker,
    run_pipeline,
    saliency_map,
)

__all__ = [
    "dice",
    "hausdorff_mm",
    "make_phantom",
    "random_walker",
    "run_pipeline",
    "saliency_map",
]
