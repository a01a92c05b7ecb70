"""
Box arithmetic: area, intersection, IoU and smoothed IoU.

Scalar functions work on BBox values and are what evaluation uses. The
``*_tensor`` variants take (N, 4) tensors and keep autograd intact for the
training losses.
"""

import torch

from .types import BBox


def area(b: BBox) -> float:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def intersection_area(a: BBox, b: BBox) -> float:
    # Half-open regions: edge or corner contact gives zero overlap.
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def union_area(a: BBox, b: BBox) -> float:
    return area(a) + area(b) - intersection_area(a, b)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union. Two degenerate boxes give 0, not 0/0."""
    union = union_area(a, b)
    if union <= 0:
        return 0.0
    return intersection_area(a, b) / union


def smoothed_iou(a: BBox, b: BBox, eps: float) -> float:
    """(|a∩b| + eps) / (|a∪b| + eps); strictly positive and continuous."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return (intersection_area(a, b) + eps) / (union_area(a, b) + eps)


def box_tensor(b: BBox, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    return torch.tensor(b.as_list(), dtype=dtype)


def iou_tensor(boxes: torch.Tensor, target: BBox, eps: float = 0.0) -> torch.Tensor:
    """
    IoU of every row of ``boxes`` (N, 4) against ``target``.

    eps = 0 is exact IoU (0 for a 0/0 union); eps > 0 is the smoothed form.
    """
    t = box_tensor(target, boxes.dtype)
    w = (torch.minimum(boxes[:, 2], t[2]) - torch.maximum(boxes[:, 0], t[0])).clamp(min=0)
    h = (torch.minimum(boxes[:, 3], t[3]) - torch.maximum(boxes[:, 1], t[1])).clamp(min=0)
    inter = w * h
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    union = areas + area(target) - inter
    if eps > 0:
        return (inter + eps) / (union + eps)
    safe = torch.where(union > 0, union, torch.ones_like(union))
    return torch.where(union > 0, inter / safe, torch.zeros_like(union))
