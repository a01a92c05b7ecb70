"""Tests for the attack objectives and the TV penalty."""

import pytest
import torch

from patchforge.core.losses import (
    RANK_RANDOM,
    batch_mean,
    largest_gt_box,
    lcsl,
    loss_variant,
    select_top_k,
    total_loss,
    tv_loss,
)
from patchforge.core.types import BBox, Candidates, LossKind, Patch

TARGET = BBox(0, 0, 10, 10)


def _cands(rows):
    """rows of (box, objectness, person score, other score)."""
    return Candidates(
        boxes=torch.tensor([list(r[0]) for r in rows], dtype=torch.float64),
        objectness=torch.tensor([r[1] for r in rows], dtype=torch.float64),
        class_scores=torch.tensor([[r[2], r[3]] for r in rows], dtype=torch.float64),
    )


def test_select_top_k_by_score_product():
    cands = _cands([
        ((0, 0, 1, 1), 0.5, 0.5, 0.0),   # 0.25
        ((0, 0, 1, 1), 0.9, 0.9, 0.0),   # 0.81
        ((0, 0, 1, 1), 1.0, 0.25, 0.0),  # 0.25, tie with index 0
        ((0, 0, 1, 1), 0.6, 0.5, 0.0),   # 0.30
    ])
    picked = select_top_k(cands, 3)
    assert picked.objectness.tolist() == [0.9, 0.6, 0.5]
    assert len(select_top_k(cands, 10)) == 4
    with pytest.raises(ValueError):
        select_top_k(cands, 0)


def test_select_top_k_random_is_seeded():
    cands = _cands([((i, 0, i + 1, 1), 0.1 * i, 0.5, 0.0) for i in range(10)])
    a = select_top_k(cands, 4, RANK_RANDOM, rng=torch.Generator().manual_seed(5))
    b = select_top_k(cands, 4, RANK_RANDOM, rng=torch.Generator().manual_seed(5))
    assert len(a) == 4
    assert torch.equal(a.boxes, b.boxes)
    assert len(set(a.boxes[:, 0].tolist())) == 4


def test_lcsl_is_max_of_triple_product():
    cands = _cands([
        ((0, 0, 10, 10), 0.5, 0.8, 0.0),   # 0.4 * 1
        ((0, 0, 10, 5), 0.9, 0.9, 0.0),    # 0.81 * 0.5
        ((20, 20, 30, 30), 1.0, 1.0, 0.0),  # disjoint
    ])
    assert float(lcsl(cands, TARGET)) == pytest.approx(0.405)


def test_lcsl_empty_selection_is_zero():
    empty = Candidates.from_predictions([], 2)
    assert float(lcsl(empty, TARGET)) == 0.0
    assert float(loss_variant(LossKind.LCSL, empty, TARGET, 10)) == 0.0


def test_lcsl_rejects_zero_area_target():
    with pytest.raises(ValueError):
        lcsl(_cands([((0, 0, 1, 1), 0.5, 0.5, 0.0)]), BBox(1, 1, 1, 5))


def test_obj_cls_and_lcsl_coincide_at_full_overlap():
    """Verify the score-only product equals LCSL when every box is the target."""
    g = torch.Generator().manual_seed(0)
    n = 30
    cands = Candidates(
        boxes=torch.tensor([TARGET.as_list()] * n, dtype=torch.float64),
        objectness=torch.rand(n, generator=g, dtype=torch.float64),
        class_scores=torch.rand(n, 2, generator=g, dtype=torch.float64),
    )
    for k in (1, 5, 10, 50):
        assert float(loss_variant("obj_cls", cands, TARGET, k)) == pytest.approx(
            float(loss_variant("lcsl", cands, TARGET, k))
        )


def test_iou_only_is_zero_when_disjoint():
    cands = _cands([((20 + i, 20, 25 + i, 25), 0.9, 0.9, 0.0) for i in range(12)])
    term = loss_variant(LossKind.IOU_ONLY, cands, TARGET, 10, rng=torch.Generator().manual_seed(0))
    assert float(term) == 0.0


def test_obj_variant_with_unbounded_k_is_max_objectness():
    cands = _cands([((0, 0, 1, 1), o, 0.1, 0.9) for o in (0.2, 0.7, 0.4)])
    assert float(loss_variant(LossKind.OBJ, cands, TARGET, 1000)) == pytest.approx(0.7)


def test_variant_values():
    cands = _cands([
        ((0, 0, 10, 10), 0.5, 0.8, 0.0),
        ((0, 0, 10, 5), 0.9, 0.6, 0.0),
    ])
    assert float(loss_variant("cls", cands, TARGET, 10)) == pytest.approx(0.8)
    assert float(loss_variant("cls_iou", cands, TARGET, 10)) == pytest.approx(0.8)
    assert float(loss_variant("obj_iou", cands, TARGET, 10)) == pytest.approx(0.5)
    assert float(loss_variant("obj_iou", cands, TARGET, 1)) == pytest.approx(0.45)


def test_largest_gt_box():
    boxes = [BBox(0, 0, 2, 2), BBox(0, 0, 3, 3), BBox(5, 5, 8, 8)]
    assert largest_gt_box(boxes) == BBox(0, 0, 3, 3)
    with pytest.raises(ValueError):
        largest_gt_box([])


def test_tv_loss_values():
    flat = Patch(torch.full((3, 4, 4), 0.3, dtype=torch.float64))
    assert float(tv_loss(flat)) == pytest.approx(0.0, abs=1e-5)

    stripes = torch.zeros(3, 3, 3, dtype=torch.float64)
    stripes[:, :, 1] = 1.0
    # every (dx, dy) pair in the 2x2 difference grid has |dx| = 1, dy = 0
    assert float(tv_loss(stripes)) == pytest.approx(1.0)


def test_total_loss_combines_terms():
    adv, tv = torch.tensor(0.4), torch.tensor(0.1)
    breakdown = total_loss(adv, tv, 2.5)
    assert float(breakdown.total) == pytest.approx(0.65)
    assert breakdown.as_floats()["tv"] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        total_loss(adv, tv, -1.0)


def test_batch_mean():
    terms = [torch.tensor(0.2, dtype=torch.float64), torch.tensor(0.4, dtype=torch.float64)]
    assert float(batch_mean(terms)) == pytest.approx(0.3)
    assert float(batch_mean([])) == 0.0
