"""camfault: deterministic camera-failure injection and detection-robustness
evaluation for RGB image corpora."""

__version__ = "0.1.0"

from .raster import ImageBuffer, SeedSpec, derive_seed, load_image, make_rng, save_image
from .presets import FailurePreset, Family, apply, get_preset, preset_catalog
from .kitti import Bbox2D, Detection, GroundTruthObject, parse_detections, parse_labels, write_detections
from .evaluation import (
    ApResult,
    DifficultyFilter,
    ap40,
    evaluate_dataset,
    filter_difficulty,
    iou,
    match_detections,
    pr_curve,
)
from .taxonomy import FailureModeRecord, list_by_component, load_registry, lookup

__all__ = [
    "__version__",
    "ImageBuffer",
    "SeedSpec",
    "derive_seed",
    "load_image",
    "make_rng",
    "save_image",
    "FailurePreset",
    "Family",
    "apply",
    "get_preset",
    "preset_catalog",
    "Bbox2D",
    "Detection",
    "GroundTruthObject",
    "parse_detections",
    "parse_labels",
    "write_detections",
    "ApResult",
    "DifficultyFilter",
    "ap40",
    "evaluate_dataset",
    "filter_difficulty",
    "iou",
    "match_detections",
    "pr_curve",
    "FailureModeRecord",
    "list_by_component",
    "load_registry",
    "lookup",
]
