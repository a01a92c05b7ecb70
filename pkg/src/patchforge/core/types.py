"""Shared types and data structures for patchforge."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import torch

PERSON_CLASS = 0


@dataclass(frozen=True)
class BBox:
    """
    Axis-aligned box in pixel coordinates, corner format.

    (x1, y1) is the top-left corner, (x2, y2) the bottom-right one. Zero-area
    boxes are allowed, negative extents are not.
    """
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"BBox coordinates must be finite: {coords}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"BBox has negative extent: {coords}")

    @classmethod
    def from_center(cls, cx: float, cy: float, width: float, height: float) -> "BBox":
        return cls(cx - width / 2, cy - height / 2, cx + width / 2, cy + height / 2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def as_list(self) -> List[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class RawPrediction:
    """One pre-NMS detector candidate: box, objectness and per-class scores."""
    box: BBox
    objectness: float
    class_scores: Tuple[float, ...]

    def __post_init__(self):
        if not 0.0 <= self.objectness <= 1.0:
            raise ValueError(f"objectness out of [0,1]: {self.objectness}")
        if len(self.class_scores) < 1:
            raise ValueError("class_scores must hold at least one class")
        for score in self.class_scores:
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"class score out of [0,1]: {score}")


@dataclass(frozen=True)
class Detection:
    """Post-NMS detection. confidence = objectness * class score of class_id."""
    box: BBox
    confidence: float
    class_id: int


@dataclass
class MatchResult:
    tp_flags: List[bool]
    fn_count: int
    matched_gt: Dict[int, int] = field(default_factory=dict)  # detection index -> gt index

    @property
    def tp_count(self) -> int:
        return sum(self.tp_flags)

    @property
    def fp_count(self) -> int:
        return len(self.tp_flags) - self.tp_count


@dataclass
class PerImageResult:
    image_id: str
    success: bool
    gt_count: int
    detection_count: int


@dataclass
class MetricsReport:
    """Evaluation record for one (detector, dataset, patch) triple."""
    detector: str
    dataset: str
    patch: str
    pasr: float
    map: float
    asr: float
    image_count: int
    per_image: List[PerImageResult] = field(default_factory=list)
    tp_count: int = 0
    gt_count: int = 0


class LossKind(Enum):
    LCSL = "lcsl"
    OBJ = "obj"
    CLS = "cls"
    OBJ_CLS = "obj_cls"
    IOU_ONLY = "iou_only"
    CLS_IOU = "cls_iou"
    OBJ_IOU = "obj_iou"


@dataclass
class LossBreakdown:
    """
    adv + lambda_tv * tv. Values are tensors during training and plain floats
    once detached for logging.
    """
    adv: object
    tv: object
    lambda_tv: float
    per_image_adv: List[object] = field(default_factory=list)

    @property
    def total(self):
        return self.adv + self.lambda_tv * self.tv

    def as_floats(self) -> Dict[str, float]:
        return {
            "adv": float(self.adv),
            "tv": float(self.tv),
            "total": float(self.total),
        }


@dataclass
class Candidates:
    """
    Tensor view of a candidate set, the form the differentiable losses consume.

    boxes: (N, 4) corner format; objectness: (N,); class_scores: (N, C).
    """
    boxes: torch.Tensor
    objectness: torch.Tensor
    class_scores: torch.Tensor

    def __len__(self) -> int:
        return int(self.objectness.shape[0])

    @property
    def class_count(self) -> int:
        return int(self.class_scores.shape[1])

    def subset(self, indices: torch.Tensor) -> "Candidates":
        return Candidates(self.boxes[indices], self.objectness[indices], self.class_scores[indices])

    @classmethod
    def from_predictions(cls, preds: Sequence[RawPrediction], class_count: Optional[int] = None) -> "Candidates":
        if not preds:
            c = class_count or 1
            empty = torch.zeros(0, dtype=torch.float64)
            return cls(torch.zeros(0, 4, dtype=torch.float64), empty, torch.zeros(0, c, dtype=torch.float64))
        return cls(
            boxes=torch.tensor([p.box.as_list() for p in preds], dtype=torch.float64),
            objectness=torch.tensor([p.objectness for p in preds], dtype=torch.float64),
            class_scores=torch.tensor([list(p.class_scores) for p in preds], dtype=torch.float64),
        )

    def to_predictions(self) -> List[RawPrediction]:
        boxes = self.boxes.detach().tolist()
        obj = self.objectness.detach().tolist()
        scores = self.class_scores.detach().tolist()
        return [
            RawPrediction(BBox(*b), float(o), tuple(float(s) for s in sc))
            for b, o, sc in zip(boxes, obj, scores)
        ]


@dataclass
class Patch:
    """Square RGB patch, pixels (3, side, side) in [0, 1]."""
    pixels: torch.Tensor

    def __post_init__(self):
        if self.pixels.dim() != 3 or self.pixels.shape[0] != 3:
            raise ValueError(f"Patch pixels must be (3, side, side), got {tuple(self.pixels.shape)}")
        if self.pixels.shape[1] != self.pixels.shape[2]:
            raise ValueError("Patch must be square")
        if self.pixels.shape[1] < 2:
            raise ValueError("Patch side must be >= 2")

    @property
    def side(self) -> int:
        return int(self.pixels.shape[1])


@dataclass
class ImageGrid:
    """RGB image, pixels (3, H, W) in [0, 1] (channel-first, torch layout)."""
    pixels: torch.Tensor
    source_id: Optional[str] = None

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])

    @property
    def extent(self) -> Tuple[int, int]:
        return self.height, self.width


@dataclass(frozen=True)
class Placement:
    """
    Where the patch lands for one target box.

    full_region is the unclipped square; patch_region is its intersection with
    the image and is what gets composited.
    """
    target_box: BBox
    patch_region: BBox
    full_region: BBox
    scale: float


@dataclass
class PaddingResult:
    image: ImageGrid
    offset: Tuple[int, int]  # (dx, dy) applied to source coordinates
    padded: bool


@dataclass(frozen=True)
class DetectorInfo:
    name: str
    class_count: int
    input_extent: Optional[Tuple[int, int]] = None  # None = any size
    differentiable: bool = False


@dataclass(frozen=True)
class ToyDetectorParams:
    seed: int = 0
    grid_stride: int = 8
    kernel_size: int = 5
    anchor_scales: Tuple[float, ...] = (2.0, 4.0)
    class_count: int = 2

    def __post_init__(self):
        if self.grid_stride < 1:
            raise ValueError("grid_stride must be positive")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be an odd positive integer")
        if not self.anchor_scales or any(s <= 0 for s in self.anchor_scales):
            raise ValueError("anchor_scales must be non-empty and positive")
        if self.class_count < 1:
            raise ValueError("class_count must be >= 1")


@dataclass
class ExchangeDocument:
    """
    Raw detector candidates for a whole dataset, keyed by image id in file
    order, together with the thresholds the producer intends for NMS.
    """
    detector: str
    conf_threshold: float
    nms_iou_threshold: float
    images: Dict[str, List[RawPrediction]] = field(default_factory=dict)


@dataclass
class EpochLog:
    """Epoch means over all optimizer steps, and the learning rate they used."""
    epoch: int
    adv_loss: float
    tv_loss: float
    total_loss: float
    learning_rate: float
