"""
Patch evaluation: PASR, AP and ASR of one detector on one filtered dataset,
and the detector x dataset transfer grid.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import torch

from patchforge.core.config import AttackConfig
from patchforge.core.detector import BaseDetector
from patchforge.core.errors import EmptyDatasetError
from patchforge.core.metrics import build_report
from patchforge.core.patching import apply_patch, plan_placements
from patchforge.core.types import Detection, MetricsReport, Patch
from patchforge.dataset.manifest import DatasetManifest, ImageEntry
from patchforge.services.dataset_service import filter_person_images

logger = logging.getLogger("patchforge")


def _patched_detections(
    detector: BaseDetector,
    manifest: DatasetManifest,
    entry: ImageEntry,
    patch: Optional[Patch],
    config: AttackConfig,
) -> List[Detection]:
    image = manifest.load_image(entry)
    with torch.no_grad():
        if patch is not None:
            placements = plan_placements(entry.gt_boxes or [], config.patch_scale, image.extent)
            image = apply_patch(image, placements, patch.pixels.detach())
        return detector.detect(image, config.conf_threshold, config.nms_iou_threshold)


def evaluate_patch(
    detector: BaseDetector,
    manifest: DatasetManifest,
    patch: Optional[Patch],
    config: AttackConfig,
    workers: int = 1,
    detector_label: str = "",
    patch_label: str = "",
) -> MetricsReport:
    """
    Paste ``patch`` on every ground-truth person of the filtered manifest and
    score the detector's output against the clean ground truth. ``patch=None``
    evaluates the clean images.
    """
    if not manifest.entries:
        raise EmptyDatasetError(f"nothing to evaluate in {manifest.root}: no image with a detected person")

    def run(entry: ImageEntry) -> List[Detection]:
        return _patched_detections(detector, manifest, entry, patch, config)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, manifest.entries))
    else:
        results = [run(entry) for entry in manifest.entries]

    dets: Dict[str, List[Detection]] = {e.id: r for e, r in zip(manifest.entries, results)}
    return build_report(
        dets,
        manifest.gts(),
        detector=detector_label or detector.name,
        dataset=manifest.name,
        patch=patch_label or ("none" if patch is None else "patch"),
        iou_threshold=config.match_iou_threshold,
        class_id=config.class_id,
    )


def evaluate_transfer(
    detectors: Sequence[Tuple[str, BaseDetector]],
    datasets: Sequence[DatasetManifest],
    patch: Optional[Patch],
    config: AttackConfig,
    workers: int = 1,
    patch_label: str = "",
) -> List[MetricsReport]:
    """
    One report per (dataset, detector) cell. Each detector filters each
    dataset itself, so ground truth always comes from the detector under
    test. Cells where the detector finds no person are skipped with a warning.
    """
    reports = []
    for dataset in datasets:
        for label, detector in detectors:
            filtered = filter_person_images(detector, dataset, config.conf_threshold, config.nms_iou_threshold, config.class_id)
            if not filtered.entries:
                logger.warning("%s finds no person in %s; skipping", label, dataset.name)
                continue
            reports.append(evaluate_patch(detector, filtered, patch, config, workers, label, patch_label))
    return reports
