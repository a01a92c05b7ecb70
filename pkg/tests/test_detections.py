"""Tests for confidence fusion and NMS."""

import random

import pytest

from patchforge.core.detections import fuse_confidence, nms
from patchforge.core.geometry import iou
from patchforge.core.types import BBox, RawPrediction


def _raw(box, obj, *scores):
    return RawPrediction(BBox(*box), obj, tuple(scores))


def _random_candidates(rng: random.Random, n: int):
    out = []
    for _ in range(n):
        x, y = rng.uniform(0, 50), rng.uniform(0, 50)
        w, h = rng.uniform(1, 30), rng.uniform(1, 30)
        out.append(_raw((x, y, x + w, y + h), rng.random(), rng.random(), rng.random()))
    return out


@pytest.mark.parametrize("raw, expected", [
    (_raw((0, 0, 1, 1), 0.8, 0.9, 0.1), (0, 0.72)),
    (_raw((0, 0, 1, 1), 1.0, 1.0), (0, 1.0)),
    (_raw((0, 0, 1, 1), 0.5, 0.3, 0.3), (0, 0.15)),
])
def test_fuse_confidence(raw, expected):
    class_id, conf = fuse_confidence(raw)
    assert class_id == expected[0]
    assert conf == pytest.approx(expected[1])


def test_raw_prediction_range_checked():
    with pytest.raises(ValueError):
        _raw((0, 0, 1, 1), 1.2, 0.5)
    with pytest.raises(ValueError):
        _raw((0, 0, 1, 1), 0.5, -0.1)


def test_nms_examples():
    assert nms([]) == []
    kept = nms([_raw((0, 0, 10, 10), 0.9, 1.0), _raw((0, 0, 10, 10), 0.8, 1.0)], 0.25, 0.45)
    assert len(kept) == 1
    assert kept[0].confidence == pytest.approx(0.9)
    assert nms([_raw((0, 0, 10, 10), 0.1, 1.0)], 0.25, 0.45) == []


def test_nms_is_class_wise():
    """Verify overlapping boxes of different classes both survive."""
    person = _raw((0, 0, 10, 10), 0.9, 0.9, 0.1)
    car = _raw((0, 0, 10, 10), 0.9, 0.1, 0.8)
    kept = nms([person, car], 0.25, 0.45)
    assert sorted(d.class_id for d in kept) == [0, 1]


def test_nms_ties_keep_input_order():
    a = _raw((0, 0, 10, 10), 0.5, 1.0)
    b = _raw((1, 0, 11, 10), 0.5, 1.0)
    kept = nms([a, b], 0.25, 0.45)
    assert [d.box for d in kept] == [a.box]


def test_nms_rejects_bad_thresholds():
    with pytest.raises(ValueError):
        nms([], 1.5, 0.45)


def test_nms_properties_on_random_sets():
    """Verify pairwise IoU bound, sort order, monotonicity and idempotence."""
    rng = random.Random(3)
    for _ in range(200):
        cands = _random_candidates(rng, rng.randint(0, 25))
        out = nms(cands, 0.2, 0.45)

        for i, a in enumerate(out):
            for b in out[i + 1:]:
                if a.class_id == b.class_id:
                    assert iou(a.box, b.box) <= 0.45
        assert [d.confidence for d in out] == sorted((d.confidence for d in out), reverse=True)
        assert len(nms(cands, 0.5, 0.45)) <= len(out)

        refed = [
            RawPrediction(d.box, d.confidence, tuple(1.0 if c == d.class_id else 0.0 for c in range(2)))
            for d in out
        ]
        again = nms(refed, 0.2, 0.45)
        assert [(d.box, d.class_id) for d in again] == [(d.box, d.class_id) for d in out]

        assert nms(cands, 0.2, 0.45) == out
