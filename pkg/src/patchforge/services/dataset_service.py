"""
Dataset filtering: keep the images the detector sees at least one person in.

The clean post-NMS person detections of each kept image become its
ground-truth boxes, for both training and evaluation.
"""

import logging
from dataclasses import replace
from typing import Dict, List

from patchforge.core.detections import DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_IOU_THRESHOLD, nms, person_detections
from patchforge.core.detector import BaseDetector
from patchforge.core.errors import InputError
from patchforge.core.types import PERSON_CLASS, RawPrediction
from patchforge.dataset.cache import DetectionCache
from patchforge.dataset.manifest import DatasetManifest

logger = logging.getLogger("patchforge")


def filter_person_images(
    detector: BaseDetector,
    manifest: DatasetManifest,
    conf_threshold: float = DEFAULT_CONF_THRESHOLD,
    nms_iou_threshold: float = DEFAULT_NMS_IOU_THRESHOLD,
    class_id: int = PERSON_CLASS,
    use_cache: bool = True,
) -> DatasetManifest:
    """
    Filtered copy of ``manifest`` whose entries carry ``gt_boxes``.

    Unreadable images and images the detector cannot take are skipped and
    listed in ``skipped``. Never mutates the input manifest.
    """
    cache = (
        DetectionCache(manifest.root, detector.cache_key, conf_threshold, nms_iou_threshold, detector.identity)
        if use_cache
        else None
    )
    cached: Dict[str, List[RawPrediction]] = cache.load() if cache else {}
    fresh = 0

    kept, skipped = [], list(manifest.skipped)
    records: Dict[str, List[RawPrediction]] = {}
    for entry in manifest.entries:
        raw = cached.get(entry.id)
        if raw is None:
            try:
                raw = detector.detect_raw(manifest.load_image(entry))
            except InputError as e:
                logger.warning("skipping %s: %s", entry.id, e)
                skipped.append(entry.id)
                continue
            fresh += 1
        records[entry.id] = raw

        people = person_detections(nms(raw, conf_threshold, nms_iou_threshold), class_id)
        if people:
            kept.append(replace(entry, gt_boxes=[d.box for d in people]))

    if cache and fresh:
        cache.save(records)
    logger.info(
        "%s on %s: %d of %d images contain a detected person (%d skipped)",
        detector.name, manifest.name, len(kept), len(manifest.entries), len(skipped) - len(manifest.skipped),
    )
    return manifest.with_entries(kept, skipped)
