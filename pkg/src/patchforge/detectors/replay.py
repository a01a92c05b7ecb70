"""
Replays raw candidates recorded in a detection-exchange file.

Lets a detector that runs elsewhere take part in filtering and evaluation.
Images are looked up by their dataset id, so only clean images can be
replayed; patched images have no recorded candidates.

The cache key names the file by its resolved path, and the identity adds
a digest of its contents, so a file recorded again in place invalidates
the clean-detection cache.
"""

import hashlib
import re
from pathlib import Path
from typing import Union

from ..core.detector import BaseDetector, detector_registry
from ..core.errors import InputError
from ..core.patching import PATCHED_SUFFIX
from ..core.types import Candidates, DetectorInfo, ImageGrid
from ..services.exchange_service import read_detection_exchange


class ReplayDetector(BaseDetector):
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.document = read_detection_exchange(self.path)
        self.digest = hashlib.sha256(self.path.read_bytes()).hexdigest()
        class_count = next(
            (len(c[0].class_scores) for c in self.document.images.values() if c),
            1,
        )
        self._info = DetectorInfo(name=self.document.detector or "replay", class_count=class_count)

    @property
    def info(self) -> DetectorInfo:
        return self._info

    @property
    def cache_key(self) -> str:
        location = hashlib.sha1(str(self.path.resolve()).encode("utf-8")).hexdigest()[:10]
        return "replay-" + re.sub(r"[^A-Za-z0-9_.-]+", "_", self.path.stem) + "-" + location

    @property
    def identity(self) -> str:
        return f"{self.name}@sha256:{self.digest[:16]}"

    def forward(self, image: ImageGrid) -> Candidates:
        if image.source_id and image.source_id.endswith(PATCHED_SUFFIX):
            raise InputError(
                f"{self.path} holds clean-image candidates only; a replayed detector cannot score patched images"
            )
        if image.source_id not in self.document.images:
            raise InputError(f"{self.path} has no candidates for image {image.source_id!r}")
        return Candidates.from_predictions(self.document.images[image.source_id], self.info.class_count)


detector_registry.register("replay", ReplayDetector, "candidates replayed from a detection-exchange file (path=...)")
