"""Dataset directories and their cached clean detections."""

from .cache import DetectionCache, cache_root
from .manifest import DatasetManifest, ImageEntry, open_dataset, scan_dataset

__all__ = ["DatasetManifest", "DetectionCache", "ImageEntry", "cache_root", "open_dataset", "scan_dataset"]
