"""
Attack objectives.

Every per-image term is a hard max over a selected candidate subset of some
product of objectness, person score and IoU with the largest GT box. The
``lcsl`` kind multiplies all three; the other kinds are the score-only and
ablation baselines. Gradients at a max tie go to the first maximal element.
"""

from typing import Optional, Sequence, Union

import torch

from .geometry import area, iou_tensor
from .types import PERSON_CLASS, BBox, Candidates, LossBreakdown, LossKind, Patch

RANK_PRODUCT = "score-product"
RANK_RANDOM = "random"

DEFAULT_LAMBDA_TV = 2.5
TV_EPS = 1e-12


def _stable_top(scores: torch.Tensor, k: int) -> torch.Tensor:
    order = torch.sort(scores.detach(), descending=True, stable=True).indices
    return order[:k]


def select_top_k(
    candidates: Candidates,
    k: int,
    ranking: str = RANK_PRODUCT,
    rng: Optional[torch.Generator] = None,
    class_id: int = PERSON_CLASS,
) -> Candidates:
    """
    Keep the k candidates with the largest objectness * class score
    (lowest index first on ties), or k seeded random draws without
    replacement when ranking is "random".
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(candidates)
    if n == 0:
        return candidates
    if ranking == RANK_PRODUCT:
        idx = _stable_top(candidates.objectness * candidates.class_scores[:, class_id], k)
    elif ranking == RANK_RANDOM:
        idx = torch.randperm(n, generator=rng)[: min(k, n)]
    else:
        raise ValueError(f"unknown ranking: {ranking!r}")
    return candidates.subset(idx)


def largest_gt_box(gts: Sequence[BBox]) -> BBox:
    if not gts:
        raise ValueError("largest_gt_box needs at least one box")
    best = gts[0]
    for box in gts[1:]:
        if area(box) > area(best):
            best = box
    return best


def _hard_max(terms: torch.Tensor) -> torch.Tensor:
    if terms.numel() == 0:
        return torch.zeros((), dtype=torch.float64)
    # max(dim=0) routes the gradient to the first maximal index
    return terms.max(dim=0).values


def _check_target(gt_max: BBox) -> None:
    if area(gt_max) <= 0:
        raise ValueError("gt_max must have positive area")


def lcsl(
    selected: Candidates,
    gt_max: BBox,
    class_id: int = PERSON_CLASS,
    iou_eps: float = 0.0,
) -> torch.Tensor:
    """max_j objectness_j * score_j[class_id] * IoU(box_j, gt_max); 0 when empty."""
    _check_target(gt_max)
    if len(selected) == 0:
        return torch.zeros((), dtype=torch.float64)
    overlap = iou_tensor(selected.boxes, gt_max, iou_eps)
    return _hard_max(selected.objectness * selected.class_scores[:, class_id] * overlap)


def loss_variant(
    kind: Union[LossKind, str],
    candidates: Candidates,
    gt_max: BBox,
    k: int,
    rng: Optional[torch.Generator] = None,
    class_id: int = PERSON_CLASS,
    iou_eps: float = 0.0,
) -> torch.Tensor:
    """One image's adversarial term for the given loss kind."""
    kind = LossKind(kind)
    _check_target(gt_max)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(candidates) == 0:
        return torch.zeros((), dtype=torch.float64)

    obj = candidates.objectness
    cls = candidates.class_scores[:, class_id]

    if kind is LossKind.LCSL:
        return lcsl(select_top_k(candidates, k, RANK_PRODUCT, class_id=class_id), gt_max, class_id, iou_eps)
    if kind is LossKind.IOU_ONLY:
        picked = select_top_k(candidates, k, RANK_RANDOM, rng=rng, class_id=class_id)
        return _hard_max(iou_tensor(picked.boxes, gt_max, iou_eps))

    if kind in (LossKind.OBJ, LossKind.OBJ_IOU):
        idx = _stable_top(obj, k)
    elif kind in (LossKind.CLS, LossKind.CLS_IOU):
        idx = _stable_top(cls, k)
    else:
        idx = _stable_top(obj * cls, k)

    if kind is LossKind.OBJ:
        return _hard_max(obj[idx])
    if kind is LossKind.CLS:
        return _hard_max(cls[idx])
    if kind is LossKind.OBJ_CLS:
        return _hard_max(obj[idx] * cls[idx])

    overlap = iou_tensor(candidates.boxes[idx], gt_max, iou_eps)
    if kind is LossKind.CLS_IOU:
        return _hard_max(cls[idx] * overlap)
    return _hard_max(obj[idx] * overlap)


def tv_loss(patch: Union[Patch, torch.Tensor]) -> torch.Tensor:
    """
    Mean of sqrt(dx^2 + dy^2 + eps) over channels and the (H-1) x (W-1)
    forward-difference grid.
    """
    pixels = patch.pixels if isinstance(patch, Patch) else patch
    if pixels.shape[-1] < 2 or pixels.shape[-2] < 2:
        raise ValueError("tv_loss needs a patch side of at least 2")
    base = pixels[..., :-1, :-1]
    dx = pixels[..., :-1, 1:] - base
    dy = pixels[..., 1:, :-1] - base
    return torch.sqrt(dx * dx + dy * dy + TV_EPS).mean()


def total_loss(adv, tv, lambda_tv: float = DEFAULT_LAMBDA_TV, per_image_adv=None) -> LossBreakdown:
    if lambda_tv < 0:
        raise ValueError("lambda_tv must be non-negative")
    return LossBreakdown(adv=adv, tv=tv, lambda_tv=lambda_tv, per_image_adv=list(per_image_adv or []))


def batch_mean(terms: Sequence[torch.Tensor]) -> torch.Tensor:
    """Arithmetic mean of per-image terms, reduced in input order."""
    if not terms:
        return torch.zeros((), dtype=torch.float64)
    return torch.stack(list(terms)).sum() / len(terms)
