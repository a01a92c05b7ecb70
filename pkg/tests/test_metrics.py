"""Tests for matching, AP, ASR, PASR and the miss streak."""

import random

import pytest

from patchforge.core.geometry import iou
from patchforge.core.metrics import (
    asr,
    average_precision,
    build_report,
    image_attack_success,
    improvement,
    longest_miss_streak,
    match_detections,
    object_attack_success,
    pasr,
)
from patchforge.core.types import BBox, Detection

GT = BBox(0, 0, 100, 200)


def _det(box, conf=0.9, cls=0):
    return Detection(BBox(*box), conf, cls)


def test_match_single_tp():
    result = match_detections([_det((0, 0, 100, 140))], [GT])
    assert (result.tp_count, result.fp_count, result.fn_count) == (1, 0, 0)
    assert result.matched_gt == {0: 0}


def test_match_fragments_are_all_fp():
    """Verify three low-IoU fragments give 0 TP, 3 FP, 1 FN."""
    dets = [_det((0, 0, 100, 60)), _det((0, 70, 100, 130), 0.8), _det((0, 140, 100, 200), 0.7)]
    result = match_detections(dets, [GT])
    assert (result.tp_count, result.fp_count, result.fn_count) == (0, 3, 1)


def test_match_no_detections():
    result = match_detections([], [GT, BBox(200, 0, 300, 200)])
    assert (result.tp_count, result.fp_count, result.fn_count) == (0, 0, 2)


def test_match_in_confidence_order():
    """Verify the higher-confidence detection claims the GT even when listed second."""
    low, high = _det((0, 0, 100, 200), 0.5), _det((0, 0, 100, 190), 0.9)
    result = match_detections([low, high], [GT])
    assert result.tp_flags == [False, True]


def test_match_non_person_is_fp():
    result = match_detections([_det((0, 0, 100, 200), cls=2)], [GT])
    assert result.tp_flags == [False]
    assert result.fn_count == 1


def test_average_precision_examples():
    assert average_precision({"a": [_det((0, 0, 100, 200))]}, {"a": [GT]}) == 1.0
    fragments = [_det((0, 0, 100, 60)), _det((0, 70, 100, 130)), _det((0, 140, 100, 200))]
    assert average_precision({"a": fragments}, {"a": [GT]}) == 0.0
    assert average_precision({"a": []}, {"a": [GT]}) == 0.0
    assert average_precision({}, {}) == 0.0


def test_average_precision_sums_recall_steps():
    """Two GT, ranked TP, FP, TP: 0.5*1 + 0.5*(2/3)."""
    gts = {"a": [BBox(0, 0, 10, 10)], "b": [BBox(0, 0, 10, 10)]}
    dets = {
        "a": [_det((0, 0, 10, 10), 0.9), _det((50, 50, 60, 60), 0.8)],
        "b": [_det((0, 0, 10, 10), 0.7)],
    }
    assert average_precision(dets, gts) == pytest.approx(0.5 + 0.5 * 2 / 3)


def test_asr_examples():
    assert asr(4, 10) == 0.6
    assert asr(10, 10) == 0.0
    assert asr(0, 10) == 1.0
    with pytest.raises(ValueError):
        asr(0, 0)
    with pytest.raises(ValueError):
        asr(11, 10)


def test_object_and_image_attack_success():
    assert object_attack_success(GT, []) == 1
    assert object_attack_success(GT, [_det((0, 0, 100, 80))]) == 0
    assert object_attack_success(GT, [_det((100, 0, 150, 50))]) == 1
    other = BBox(300, 0, 400, 200)
    assert image_attack_success([GT, other], [_det((0, 0, 100, 200))]) == 1
    assert image_attack_success([GT, other], [_det((0, 0, 100, 200)), _det((300, 0, 400, 100))]) == 0
    with pytest.raises(ValueError):
        image_attack_success([], [])


def test_pasr():
    assert pasr([1, 0, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        pasr([])


def test_pasr_matches_naive_double_loop():
    """Verify build_report PASR against a direct per-object, per-image count on 500 instances."""
    rng = random.Random(4)

    def box():
        x, y = rng.randint(0, 40), rng.randint(0, 40)
        return BBox(x, y, x + rng.randint(1, 20), y + rng.randint(1, 20))

    for _ in range(500):
        n_images = rng.randint(1, 5)
        gts = {f"i{k}": [box() for _ in range(rng.randint(1, 3))] for k in range(n_images)}
        dets = {k: [Detection(box(), rng.random(), 0) for _ in range(rng.randint(0, 4))] for k in gts}

        hits = 0
        for k, boxes in gts.items():
            attacked = False
            for g in boxes:
                if all(iou(g, d.box) == 0.0 for d in dets[k]):
                    attacked = True
            hits += int(attacked)
        assert build_report(dets, gts).pasr == hits / len(gts)


def test_overestimation_scenarios():
    """Verify fragmentation and partial boxes read as full attacks under mAP/ASR but not PASR."""
    fragments = [_det((0, 0, 100, 60)), _det((0, 70, 100, 130)), _det((0, 140, 100, 200))]
    for dets in (fragments, [_det((0, 0, 100, 80))]):
        report = build_report({"a": dets}, {"a": [GT]})
        assert (report.map, report.asr, report.pasr) == (0.0, 1.0, 0.0)
    gone = build_report({"a": []}, {"a": [GT]})
    assert gone.pasr == 1.0


def test_build_report_counts():
    gts = {"a": [GT], "b": [GT]}
    dets = {"a": [_det((0, 0, 100, 200))], "b": []}
    report = build_report(dets, gts, detector="toy", dataset="d", patch="p")
    assert report.image_count == 2
    assert (report.tp_count, report.gt_count) == (1, 2)
    assert report.asr == 0.5
    assert [r.success for r in report.per_image] == [False, True]
    with pytest.raises(ValueError):
        build_report({}, {})


def test_build_report_ignores_other_classes():
    report = build_report({"a": [_det((0, 0, 100, 200), cls=1)]}, {"a": [GT]})
    assert report.pasr == 1.0
    assert report.per_image[0].detection_count == 0


def test_improvement_in_points():
    ours = build_report({"a": []}, {"a": [GT]})
    base = build_report({"a": [_det((0, 0, 100, 200))]}, {"a": [GT]})
    assert improvement(ours, base) == {"pasr": 100.0, "map": 100.0, "asr": 100.0}


def _random_box(rng, span=40, size=20):
    x, y = rng.randint(0, span), rng.randint(0, span)
    return BBox(x, y, x + rng.randint(1, size), y + rng.randint(1, size))


def test_average_precision_never_rises_when_a_true_positive_is_dropped():
    """TPs copy distinct GT boxes and FPs sit far from every GT, so no duplicate can take a freed GT."""
    rng = random.Random(11)
    for _ in range(300):
        gts, dets = {}, {}
        for k in range(rng.randint(1, 4)):
            boxes = [BBox(30 * j, 0, 30 * j + 20, 20) for j in range(rng.randint(1, 3))]
            hit = [Detection(b, rng.random(), 0) for b in boxes if rng.random() < 0.7]
            far = [BBox(500 + 30 * j, 500, 520 + 30 * j, 520) for j in range(rng.randint(0, 3))]
            miss = [Detection(b, rng.random(), 0) for b in far]
            gts[f"i{k}"], dets[f"i{k}"] = boxes, hit + miss
        tps = [(k, d) for k, image_dets in dets.items() for d in image_dets if d.box.x1 < 500]
        if not tps:
            continue
        before = average_precision(dets, gts)
        _, dropped = rng.choice(tps)
        fewer = {k: [d for d in v if d is not dropped] for k, v in dets.items()}
        assert average_precision(fewer, gts) <= before + 1e-12


def test_object_attack_success_never_drops_when_detections_are_removed():
    rng = random.Random(12)
    for _ in range(500):
        gt = _random_box(rng)
        dets = [Detection(_random_box(rng), rng.random(), 0) for _ in range(rng.randint(0, 5))]
        subset = [d for d in dets if rng.random() < 0.5]
        assert object_attack_success(gt, subset) >= object_attack_success(gt, dets)


def test_asr_and_true_positive_share_sum_to_one():
    rng = random.Random(13)
    for _ in range(300):
        gts = {f"i{k}": [_random_box(rng) for _ in range(rng.randint(1, 3))] for k in range(rng.randint(1, 4))}
        dets = {k: [Detection(_random_box(rng), rng.random(), 0) for _ in range(rng.randint(0, 4))] for k in gts}
        report = build_report(dets, gts)
        tp = sum(match_detections(dets[k], gts[k]).tp_count for k in gts)
        assert report.tp_count == tp
        assert report.asr + tp / report.gt_count == pytest.approx(1.0)


def test_longest_miss_streak():
    flags = [0] * 10 + [1] * 69 + [0] * 5 + [1] * 12
    frames, seconds = longest_miss_streak(flags, 30)
    assert frames == 69
    assert seconds == pytest.approx(2.30)
    assert longest_miss_streak([], 30) == (0, 0.0)
    with pytest.raises(ValueError):
        longest_miss_streak([1], 0)
