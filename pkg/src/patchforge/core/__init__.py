"""Core abstractions for patchforge."""

from .config import AttackConfig
from .detector import BaseDetector, LossSpec, detector_registry, loss_gradient
from .errors import PatchForgeError
from .types import BBox, Detection, ImageGrid, LossKind, MetricsReport, Patch, RawPrediction

__all__ = [
    "AttackConfig",
    "BaseDetector",
    "LossSpec",
    "detector_registry",
    "loss_gradient",
    "PatchForgeError",
    "BBox",
    "Detection",
    "ImageGrid",
    "LossKind",
    "MetricsReport",
    "Patch",
    "RawPrediction",
]
