"""Activation extraction from vision models into net2rdm interchange files."""

__version__ = "0.1.0"

from .errors import (
    DuplicateStimulus,
    ExtractError,
    NoImages,
    UnknownLayer,
    UnknownModel,
    UnreadableImage,
    WeightsUnavailable,
)
from .extract import ExtractionJob, discover_images, extract
from .models import ModifiedResNet, build_model, list_layers, list_models
from .preprocess import CLIP_SPEC, IMAGENET_SPEC, PreprocessSpec, load_image

__all__ = [
    "__version__",
    "DuplicateStimulus",
    "ExtractError",
    "NoImages",
    "UnknownLayer",
    "UnknownModel",
    "UnreadableImage",
    "WeightsUnavailable",
    "ExtractionJob",
    "discover_images",
    "extract",
    "ModifiedResNet",
    "build_model",
    "list_layers",
    "list_models",
    "CLIP_SPEC",
    "IMAGENET_SPEC",
    "PreprocessSpec",
    "load_image",
]
