"""
Built-in detectors. Importing this package registers them with
``detector_registry``.
"""

from ..core.detector import BaseDetector, detector_registry
from .replay import ReplayDetector
from .toy import ToyDetector, make_toy_detector


def get_detector(spec: str) -> BaseDetector:
    return detector_registry.create(spec)


__all__ = ["ReplayDetector", "ToyDetector", "get_detector", "make_toy_detector"]
