"""
Evaluation math: TP/FP matching, AP, ASR, PASR and the video miss-streak.

PASR is image-level: an image counts as attacked when at least one of its
ground-truth persons has zero overlap with every predicted box. AP and ASR use
the usual IoU >= threshold matching and are kept for comparison.
"""

from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .geometry import iou
from .types import PERSON_CLASS, BBox, Detection, MatchResult, MetricsReport, PerImageResult

DEFAULT_MATCH_IOU = 0.5


def _confidence_order(dets: Sequence[Detection]) -> List[int]:
    return sorted(range(len(dets)), key=lambda i: -dets[i].confidence)


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[BBox],
    iou_threshold: float = DEFAULT_MATCH_IOU,
    class_id: int = PERSON_CLASS,
) -> MatchResult:
    """
    Greedy one-to-one matching in confidence order.

    A detection is TP when it is of the target class and its best-IoU
    still-unmatched GT reaches iou_threshold. tp_flags follow input order.
    """
    tp_flags = [False] * len(dets)
    matched: Dict[int, int] = {}
    taken = set()
    for di in _confidence_order(dets):
        det = dets[di]
        if det.class_id != class_id:
            continue
        best_gt, best_iou = -1, 0.0
        for gi, gt in enumerate(gts):
            if gi in taken:
                continue
            overlap = iou(det.box, gt)
            if overlap > best_iou:
                best_gt, best_iou = gi, overlap
        if best_gt >= 0 and best_iou >= iou_threshold:
            tp_flags[di] = True
            matched[di] = best_gt
            taken.add(best_gt)
    return MatchResult(tp_flags=tp_flags, fn_count=len(gts) - len(taken), matched_gt=matched)


def average_precision(
    dets: Mapping[str, Sequence[Detection]],
    gts: Mapping[str, Sequence[BBox]],
    iou_threshold: float = DEFAULT_MATCH_IOU,
    class_id: int = PERSON_CLASS,
) -> float:
    """
    Single-class AP over a dataset, all-point summation of the P-R curve:
    sum of (R_i - R_{i-1}) * P_i with R_0 = 0. No precision envelope.
    """
    total_gt = sum(len(boxes) for boxes in gts.values())
    if total_gt == 0:
        return 0.0

    confidences: List[float] = []
    flags: List[bool] = []
    for image_id, image_dets in dets.items():
        person = [d for d in image_dets if d.class_id == class_id]
        result = match_detections(person, gts.get(image_id, []), iou_threshold, class_id)
        confidences.extend(d.confidence for d in person)
        flags.extend(result.tp_flags)
    if not flags:
        return 0.0

    order = np.argsort(-np.asarray(confidences, dtype=np.float64), kind="stable")
    hits = np.asarray(flags, dtype=bool)[order]
    precision = np.cumsum(hits) / np.arange(1, hits.size + 1)
    # recall only moves at a TP, by exactly 1 / total_gt
    return float(precision[hits].sum() / total_gt)


def asr(tp_count: int, gt_count: int) -> float:
    """1 - TP / TP'."""
    if gt_count <= 0:
        raise ValueError("ASR is undefined without ground-truth objects")
    if tp_count < 0 or tp_count > gt_count:
        raise ValueError(f"tp_count must lie in [0, {gt_count}], got {tp_count}")
    return 1.0 - tp_count / gt_count


def object_attack_success(gt: BBox, dets: Sequence[Detection]) -> int:
    return int(all(iou(gt, d.box) == 0.0 for d in dets))


def image_attack_success(gts: Sequence[BBox], dets: Sequence[Detection]) -> int:
    if not gts:
        raise ValueError("image has no ground-truth boxes; it should have been filtered out")
    return int(any(object_attack_success(gt, dets) for gt in gts))


def pasr(per_image_flags: Sequence[int]) -> float:
    if not per_image_flags:
        raise ValueError("PASR needs at least one image")
    return sum(1 for f in per_image_flags if f) / len(per_image_flags)


def longest_miss_streak(frame_flags: Sequence[int], fps: float) -> Tuple[int, float]:
    """Longest run of undetected frames (flag 1), in frames and seconds."""
    if fps <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    best = run = 0
    for flag in frame_flags:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best, best / fps


def build_report(
    dets: Mapping[str, Sequence[Detection]],
    gts: Mapping[str, Sequence[BBox]],
    detector: str = "",
    dataset: str = "",
    patch: str = "",
    iou_threshold: float = DEFAULT_MATCH_IOU,
    class_id: int = PERSON_CLASS,
) -> MetricsReport:
    """
    Aggregate PASR, AP and ASR over the images listed in ``gts``.

    Only target-class detections take part; images without GT boxes are
    expected to have been filtered out already.
    """
    if not gts:
        raise ValueError("no images to evaluate")

    per_image: List[PerImageResult] = []
    tp_total = gt_total = 0
    person_dets: Dict[str, List[Detection]] = {}
    for image_id, image_gts in gts.items():
        person = [d for d in dets.get(image_id, []) if d.class_id == class_id]
        person_dets[image_id] = person
        flag = image_attack_success(image_gts, person)
        tp_total += match_detections(person, image_gts, iou_threshold, class_id).tp_count
        gt_total += len(image_gts)
        per_image.append(PerImageResult(image_id, bool(flag), len(image_gts), len(person)))

    return MetricsReport(
        detector=detector,
        dataset=dataset,
        patch=patch,
        pasr=pasr([int(r.success) for r in per_image]),
        map=average_precision(person_dets, gts, iou_threshold, class_id),
        asr=asr(tp_total, gt_total),
        image_count=len(per_image),
        per_image=per_image,
        tp_count=tp_total,
        gt_count=gt_total,
    )


def improvement(ours: MetricsReport, baseline: MetricsReport) -> Dict[str, float]:
    """Percentage-point gains over a baseline: PASR up, mAP down, ASR up are positive."""
    return {
        "pasr": (ours.pasr - baseline.pasr) * 100.0,
        "map": (baseline.map - ours.map) * 100.0,
        "asr": (ours.asr - baseline.asr) * 100.0,
    }
