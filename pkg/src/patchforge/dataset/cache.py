"""
Clean-detection cache.

Raw candidates of clean images are stored as a detection-exchange file at
<cache root>/<detector cache key>/clean.json. The cache root is
<dataset>/.cache unless PATCHFORGE_CACHE is set, in which case each dataset
gets its own subdirectory there. A file recorded under other thresholds is
stale and deleted on first access, and so is a file recorded by a detector
with another identity.
"""

import hashlib
import logging
import os
from pathlib import Path
from typing import Dict, List, Optional

from ..core.errors import ExchangeFormatError
from ..core.types import ExchangeDocument, RawPrediction
from ..services.exchange_service import read_detection_exchange, write_detection_exchange

logger = logging.getLogger("patchforge")

CACHE_ENV = "PATCHFORGE_CACHE"
CACHE_FILE = "clean.json"


def cache_root(dataset_root: Path) -> Path:
    override = os.environ.get(CACHE_ENV)
    if override:
        resolved = dataset_root.resolve()
        digest = hashlib.sha1(str(resolved).encode("utf-8")).hexdigest()[:10]
        return Path(override).expanduser() / f"{resolved.name}-{digest}"
    return dataset_root / ".cache"


class DetectionCache:
    def __init__(
        self,
        dataset_root: Path,
        detector_key: str,
        conf_threshold: float,
        nms_iou_threshold: float,
        identity: Optional[str] = None,
    ):
        self.path = cache_root(dataset_root) / detector_key / CACHE_FILE
        self.detector_key = detector_key
        self.identity = identity or detector_key
        self.conf_threshold = conf_threshold
        self.nms_iou_threshold = nms_iou_threshold

    def load(self) -> Dict[str, List[RawPrediction]]:
        if not self.path.exists():
            return {}
        try:
            document = read_detection_exchange(self.path)
        except ExchangeFormatError as e:
            logger.warning("discarding corrupt detection cache %s", e)
            self.invalidate()
            return {}
        if document.detector != self.identity:
            logger.info("detection cache %s was recorded by %s; invalidating", self.path, document.detector)
            self.invalidate()
            return {}
        if (document.conf_threshold, document.nms_iou_threshold) != (self.conf_threshold, self.nms_iou_threshold):
            logger.info(
                "detection cache %s was built for conf=%g nms=%g; invalidating",
                self.path, document.conf_threshold, document.nms_iou_threshold,
            )
            self.invalidate()
            return {}
        return document.images

    def save(self, records: Dict[str, List[RawPrediction]]) -> Optional[Path]:
        document = ExchangeDocument(
            detector=self.identity,
            conf_threshold=self.conf_threshold,
            nms_iou_threshold=self.nms_iou_threshold,
            images=dict(records),
        )
        try:
            return write_detection_exchange(document, self.path)
        except OSError as e:
            logger.warning("could not write detection cache %s: %s", self.path, e)
            return None

    def invalidate(self) -> None:
        self.path.unlink(missing_ok=True)
