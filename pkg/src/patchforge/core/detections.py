"""
Detector post-processing: confidence fusion, threshold filter, class-wise NMS.
"""

from typing import List, Sequence, Tuple

import numpy as np

from .types import PERSON_CLASS, Detection, RawPrediction

DEFAULT_CONF_THRESHOLD = 0.25
DEFAULT_NMS_IOU_THRESHOLD = 0.45


def fuse_confidence(raw: RawPrediction) -> Tuple[int, float]:
    """argmax class (lowest index on ties) and objectness * that class score."""
    class_id = int(np.argmax(raw.class_scores))
    return class_id, raw.objectness * raw.class_scores[class_id]


def _overlaps(boxes: np.ndarray, areas: np.ndarray, i: int, rest: np.ndarray) -> np.ndarray:
    """IoU of box i against boxes[rest]; a zero union gives 0."""
    w = np.minimum(boxes[i, 2], boxes[rest, 2]) - np.maximum(boxes[i, 0], boxes[rest, 0])
    h = np.minimum(boxes[i, 3], boxes[rest, 3]) - np.maximum(boxes[i, 1], boxes[rest, 1])
    inter = np.where((w > 0) & (h > 0), w * h, 0.0)
    union = areas[rest] + areas[i] - inter
    return np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)


def nms(
    candidates: Sequence[RawPrediction],
    conf_threshold: float = DEFAULT_CONF_THRESHOLD,
    iou_threshold: float = DEFAULT_NMS_IOU_THRESHOLD,
) -> List[Detection]:
    """
    Greedy class-wise Non-Maximum Suppression.

    Candidates below conf_threshold are dropped first. The survivor with the
    highest confidence (lowest input index on ties) is kept and every
    same-class survivor overlapping it by more than iou_threshold is removed;
    repeat until nothing is left. Output is sorted by confidence, descending.
    """
    if not 0.0 <= conf_threshold <= 1.0 or not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    if not candidates:
        return []

    boxes = np.array([c.box.as_list() for c in candidates], dtype=np.float64)
    scores = np.array([c.class_scores for c in candidates], dtype=np.float64)
    objectness = np.array([c.objectness for c in candidates], dtype=np.float64)
    class_ids = scores.argmax(axis=1)
    conf = objectness * scores[np.arange(len(candidates)), class_ids]
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])

    survivors = np.flatnonzero(conf >= conf_threshold)
    # stable, so equal confidences keep input order
    order = survivors[np.argsort(-conf[survivors], kind="stable")]

    keep: List[int] = []
    while order.size:
        best, rest = int(order[0]), order[1:]
        keep.append(best)
        other_class = class_ids[rest] != class_ids[best]
        order = rest[other_class | (_overlaps(boxes, areas, best, rest) <= iou_threshold)]
    return [Detection(candidates[i].box, float(conf[i]), int(class_ids[i])) for i in keep]


def person_detections(dets: Sequence[Detection], class_id: int = PERSON_CLASS) -> List[Detection]:
    return [d for d in dets if d.class_id == class_id]
