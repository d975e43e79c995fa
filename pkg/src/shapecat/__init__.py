"""Animal/plant silhouette categorization from projection and profile descriptors."""

__version__ = "0.1.0"

from .dataset_io import (  # noqa: E402
    BinaryImage,
    ClassLabel,
    GrayscaleImage,
    Polarity,
    binarize,
    load_grayscale,
    rescale,
    scan_dataset,
    synth_silhouette,
)
from .descriptors import Atom, Concat, FeatureVector, extract, moments  # noqa: E402
from .metrics import ConfusionCounts, ScoreReport, confusion, score  # noqa: E402

__all__ = [
    "Atom", "BinaryImage", "ClassLabel", "Concat", "ConfusionCounts", "FeatureVector", "GrayscaleImage",
    "Polarity", "ScoreReport", "binarize", "confusion", "extract", "load_grayscale", "moments", "rescale",
    "scan_dataset", "score", "synth_silhouette",
]
