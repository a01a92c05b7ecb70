"""Metrics computed straight from files: exchange pairs and per-frame flags."""

import re
from pathlib import Path
from typing import List, Union

from patchforge.core.errors import InputError
from patchforge.core.metrics import DEFAULT_MATCH_IOU, build_report
from patchforge.core.types import PERSON_CLASS, MetricsReport
from patchforge.services.exchange_service import post_nms, read_detection_exchange

_FLAG_SPLIT = re.compile(r"[\s,]+")


def metrics_from_exchange(
    predictions_path: Union[str, Path],
    ground_truth_path: Union[str, Path],
    iou_threshold: float = DEFAULT_MATCH_IOU,
    class_id: int = PERSON_CLASS,
) -> MetricsReport:
    """
    Score a prediction file against a ground-truth file. Both go through NMS
    with their own thresholds. Ground truth is the person detections of the
    second file, and images without any are left out, as in dataset filtering.
    """
    predictions = read_detection_exchange(predictions_path)
    truth = read_detection_exchange(ground_truth_path)

    gts = {
        image_id: [d.box for d in dets if d.class_id == class_id]
        for image_id, dets in post_nms(truth).items()
    }
    gts = {image_id: boxes for image_id, boxes in gts.items() if boxes}
    if not gts:
        raise InputError(f"{ground_truth_path} contains no person detections to evaluate against")

    dets = post_nms(predictions)
    return build_report(
        {image_id: dets.get(image_id, []) for image_id in gts},
        gts,
        detector=predictions.detector,
        dataset=truth.detector or Path(ground_truth_path).stem,
        patch=Path(predictions_path).stem,
        iou_threshold=iou_threshold,
        class_id=class_id,
    )


def read_frame_flags(path: Union[str, Path]) -> List[int]:
    """Whitespace- or comma-separated 0/1 values, 1 = no person detected in that frame."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read frame flags {path}: {e}") from e
    flags = []
    for i, token in enumerate(t for t in _FLAG_SPLIT.split(text) if t):
        if token not in ("0", "1"):
            raise InputError(f"{path}: frame {i} has flag {token!r}; expected 0 or 1")
        flags.append(int(token))
    return flags
