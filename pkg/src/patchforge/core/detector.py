"""
Detector base class, name registry and the patch-loss gradient.

Adding a detector = subclass BaseDetector + register a factory under a name.
Specs on the command line look like ``toy`` or ``toy:seed=3,grid_stride=16``.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import torch
import yaml

from .detections import DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_IOU_THRESHOLD, nms
from .errors import ConfigError, DetectorNotDifferentiableError, ExtentError
from .losses import DEFAULT_LAMBDA_TV, largest_gt_box, loss_variant, total_loss, tv_loss
from .patching import apply_patch
from .types import (
    PERSON_CLASS,
    BBox,
    Candidates,
    Detection,
    DetectorInfo,
    ImageGrid,
    LossBreakdown,
    LossKind,
    Patch,
    Placement,
    RawPrediction,
)


class BaseDetector(ABC):
    @property
    @abstractmethod
    def info(self) -> DetectorInfo: ...

    @abstractmethod
    def forward(self, image: ImageGrid) -> Candidates:
        """Full pre-NMS candidate set as tensors; differentiable detectors keep autograd."""

    @property
    def name(self) -> str:
        return self.info.name

    @property
    def cache_key(self) -> str:
        """Directory-safe name of this detector's clean-detection cache entry."""
        return self.name

    @property
    def identity(self) -> str:
        """Recorded in the clean-detection cache; a different identity invalidates it."""
        return self.cache_key

    def check_extent(self, image: ImageGrid) -> None:
        expected = self.info.input_extent
        if expected is not None and image.extent != tuple(expected):
            raise ExtentError(
                f"{self.name} expects {expected[1]}x{expected[0]} images, got {image.width}x{image.height}"
            )

    def detect_raw(self, image: ImageGrid) -> List[RawPrediction]:
        with torch.no_grad():
            return self.forward(image).to_predictions()

    def detect(
        self,
        image: ImageGrid,
        conf_threshold: float = DEFAULT_CONF_THRESHOLD,
        nms_iou_threshold: float = DEFAULT_NMS_IOU_THRESHOLD,
    ) -> List[Detection]:
        return nms(self.detect_raw(image), conf_threshold, nms_iou_threshold)


DetectorFactory = Callable[..., BaseDetector]


def parse_detector_spec(spec: str) -> Tuple[str, Dict[str, Any]]:
    """'name:k=v,k2=v2' -> (name, {k: v, k2: v2}); values are YAML scalars."""
    name, _, rest = spec.strip().partition(":")
    if not name:
        raise ConfigError(f"empty detector name in {spec!r}")
    params: Dict[str, Any] = {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"bad detector option {item!r} in {spec!r}; expected key=value")
        try:
            params[key.strip()] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"bad value for {key} in {spec!r}: {e}") from e
    return name.lower(), params


class DetectorRegistry:
    def __init__(self):
        self._factories: Dict[str, DetectorFactory] = {}
        self._descriptions: Dict[str, str] = {}

    def register(self, name: str, factory: DetectorFactory, description: str = "") -> None:
        self._factories[name.lower()] = factory
        self._descriptions[name.lower()] = description

    def create(self, spec: str) -> BaseDetector:
        name, params = parse_detector_spec(spec)
        factory = self._factories.get(name)
        if factory is None:
            raise ConfigError(f"unknown detector {name!r} (available: {', '.join(self.names()) or 'none'})")
        try:
            return factory(**params)
        except TypeError as e:
            raise ConfigError(f"bad options for detector {name!r}: {e}") from e
        except ValueError as e:
            raise ConfigError(f"invalid detector {spec!r}: {e}") from e

    def names(self) -> List[str]:
        return list(self._factories.keys())

    def describe(self) -> Dict[str, str]:
        return dict(self._descriptions)


detector_registry = DetectorRegistry()


@dataclass
class LossSpec:
    kind: LossKind = LossKind.LCSL
    top_k: int = 10
    lambda_tv: float = DEFAULT_LAMBDA_TV
    class_id: int = PERSON_CLASS
    iou_eps: float = 0.0
    rng: Optional[torch.Generator] = None


def require_differentiable(detector: BaseDetector) -> None:
    if not detector.info.differentiable:
        raise DetectorNotDifferentiableError(
            f"detector {detector.name!r} is not differentiable and cannot drive patch training; "
            "evaluate it through a detection-exchange file and optimize against an in-process "
            "differentiable detector instead"
        )


def adversarial_term(
    detector: BaseDetector,
    image: ImageGrid,
    placements: Sequence[Placement],
    pixels: torch.Tensor,
    spec: LossSpec,
    gt_max: Optional[BBox] = None,
) -> torch.Tensor:
    """Per-image attack loss of the patched image; 0 when there is nothing to patch."""
    if not placements:
        return torch.zeros((), dtype=torch.float64)
    target = gt_max if gt_max is not None else largest_gt_box([p.target_box for p in placements])
    patched = apply_patch(image, placements, pixels)
    candidates = detector.forward(patched)
    return loss_variant(spec.kind, candidates, target, spec.top_k, spec.rng, spec.class_id, spec.iou_eps)


def patch_loss(
    detector: BaseDetector,
    image: ImageGrid,
    placements: Sequence[Placement],
    pixels: torch.Tensor,
    spec: LossSpec,
    gt_max: Optional[BBox] = None,
) -> LossBreakdown:
    adv = adversarial_term(detector, image, placements, pixels, spec, gt_max)
    return total_loss(adv, tv_loss(pixels), spec.lambda_tv, [adv])


def loss_gradient(
    detector: BaseDetector,
    image: ImageGrid,
    placements: Sequence[Placement],
    patch: Patch,
    spec: LossSpec,
    gt_max: Optional[BBox] = None,
) -> torch.Tensor:
    """d(total loss)/d(patch pixels), shaped like the patch."""
    require_differentiable(detector)
    pixels = patch.pixels.detach().clone().requires_grad_(True)
    total = patch_loss(detector, image, placements, pixels, spec, gt_max).total
    (grad,) = torch.autograd.grad(total, pixels, allow_unused=True)
    return torch.zeros_like(pixels) if grad is None else grad
