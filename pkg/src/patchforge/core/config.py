"""
Attack configuration: defaults, YAML loading, precedence and seeded streams.

Values resolve as CLI flag > config file > dataclass default. Config files
are flat YAML mappings keyed by the exact AttackConfig field names.
"""

import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import torch
import yaml

from .errors import ConfigError
from .types import LossKind

# Named sub-streams derived from the single seed. Ids are fixed forever;
# append new streams, never renumber.
RNG_STREAMS: Dict[str, int] = {
    "pspp": 1,
    "topk-random": 2,
    "init": 3,
    "cutout": 4,
    "batch": 5,
}

FIELD_HELP: Dict[str, str] = {
    "epochs": "training epochs M",
    "learning_rate": "Adam learning rate",
    "lambda_tv": "total-variation loss weight",
    "top_k": "candidates kept per image before the max",
    "pspp_probability": "probability of scale-preserving padding per image",
    "pspp_target": "padding canvas, HxW as (height, width)",
    "batch_size": "images per optimizer step",
    "patch_side": "patch side in pixels",
    "patch_scale": "patch side as a fraction of sqrt(box area)",
    "loss_kind": "attack objective (" + ", ".join(k.value for k in LossKind) + ")",
    "conf_threshold": "detector confidence threshold",
    "nms_iou_threshold": "NMS IoU threshold",
    "seed": "seed for every random stream",
    "pspp_fill": "padding canvas gray level",
    "iou_eps": "smoothing epsilon of the training IoU",
    "match_iou_threshold": "IoU for TP matching in mAP/ASR",
    "class_id": "attacked class index",
    "patch_init": "initial patch (gray, noise)",
    "beta1": "Adam beta1",
    "beta2": "Adam beta2",
    "scheduler_factor": "plateau schedule lr multiplier",
    "scheduler_patience": "plateau schedule patience in epochs",
    "cutout_probability": "probability of patch cutout per image (0 = off)",
    "cutout_fraction": "cutout square side as a fraction of the patch side",
    "cutout_fill": "cutout fill value",
}

_SIZE_RE = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")


def parse_size(text: str) -> Tuple[int, int]:
    """'WxH' -> (H, W)."""
    match = _SIZE_RE.match(text)
    if not match:
        raise ConfigError(f"expected a size like 1920x1080, got {text!r}")
    width, height = int(match.group(1)), int(match.group(2))
    return height, width


def format_size(size: Tuple[int, int]) -> str:
    height, width = size
    return f"{width}x{height}"


@dataclass
class AttackConfig:
    epochs: int = 1000
    learning_rate: float = 0.03
    lambda_tv: float = 2.5
    top_k: int = 10
    pspp_probability: float = 0.5
    pspp_target: Tuple[int, int] = (1920, 1920)
    batch_size: int = 8
    patch_side: int = 300
    patch_scale: float = 0.2
    loss_kind: LossKind = LossKind.LCSL
    conf_threshold: float = 0.25
    nms_iou_threshold: float = 0.45
    seed: int = 0

    pspp_fill: float = 0.5
    iou_eps: float = 1e-6
    match_iou_threshold: float = 0.5
    class_id: int = 0
    patch_init: str = "gray"
    beta1: float = 0.9
    beta2: float = 0.999
    scheduler_factor: float = 0.5
    scheduler_patience: int = 50
    cutout_probability: float = 0.0
    cutout_fraction: float = 0.25
    cutout_fill: float = 0.0

    # --- validation ---------------------------------------------------------

    def validate(self) -> "AttackConfig":
        errors: List[str] = []

        def check(ok: bool, message: str) -> None:
            if not ok:
                errors.append(message)

        check(self.epochs >= 0, "epochs must be >= 0")
        check(self.learning_rate > 0, "learning_rate must be positive")
        check(self.lambda_tv >= 0, "lambda_tv must be non-negative")
        check(self.top_k >= 1, "top_k must be >= 1")
        check(self.batch_size >= 1, "batch_size must be >= 1")
        check(self.patch_side >= 2, "patch_side must be >= 2")
        check(self.patch_scale > 0, "patch_scale must be positive")
        check(len(self.pspp_target) == 2 and min(self.pspp_target) >= 1, "pspp_target must be two positive integers")
        for name in (
            "pspp_probability", "conf_threshold", "nms_iou_threshold", "pspp_fill",
            "match_iou_threshold", "cutout_probability", "cutout_fill",
        ):
            value = getattr(self, name)
            check(0.0 <= value <= 1.0, f"{name} must lie in [0, 1], got {value}")
        check(self.iou_eps >= 0, "iou_eps must be non-negative")
        check(self.class_id >= 0, "class_id must be >= 0")
        check(self.patch_init in ("gray", "noise"), f"patch_init must be gray or noise, got {self.patch_init!r}")
        check(0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0, "beta1 and beta2 must lie in [0, 1)")
        check(0.0 < self.scheduler_factor < 1.0, "scheduler_factor must lie in (0, 1)")
        check(self.scheduler_patience >= 0, "scheduler_patience must be >= 0")
        check(0.0 < self.cutout_fraction <= 1.0, "cutout_fraction must lie in (0, 1]")

        if errors:
            raise ConfigError("invalid configuration: " + "; ".join(errors))
        return self

    # --- loading ------------------------------------------------------------

    @staticmethod
    def field_names() -> List[str]:
        return [f.name for f in fields(AttackConfig)]

    @classmethod
    def coerce(cls, values: Mapping[str, Any], source: str = "config") -> Dict[str, Any]:
        """Type-check and convert raw values; unknown keys are errors."""
        known = {f.name: f for f in fields(cls)}
        out: Dict[str, Any] = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"{source}: unknown key {key!r} (known: {', '.join(known)})")
            out[key] = _coerce_value(key, raw, type(getattr(cls(), key)), source)
        return out

    @classmethod
    def merged(
        cls,
        file_values: Optional[Mapping[str, Any]] = None,
        flag_values: Optional[Mapping[str, Any]] = None,
    ) -> "AttackConfig":
        values: Dict[str, Any] = {}
        values.update(cls.coerce(file_values or {}, "config file"))
        values.update(cls.coerce({k: v for k, v in (flag_values or {}).items() if v is not None}, "flags"))
        return replace(cls(), **values).validate()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "AttackConfig":
        return cls.merged(load_config_file(path))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["loss_kind"] = self.loss_kind.value
        data["pspp_target"] = format_size(self.pspp_target)
        return data

    # --- randomness ---------------------------------------------------------

    def _seed_sequence(self, stream: str) -> np.random.SeedSequence:
        if stream not in RNG_STREAMS:
            raise ValueError(f"unknown rng stream {stream!r}")
        return np.random.SeedSequence([self.seed & 0xFFFFFFFF, RNG_STREAMS[stream]])

    def rng(self, stream: str) -> np.random.Generator:
        return np.random.default_rng(self._seed_sequence(stream))

    def torch_generator(self, stream: str) -> torch.Generator:
        state = self._seed_sequence(stream).generate_state(1, dtype=np.uint64)[0]
        return torch.Generator().manual_seed(int(state) & 0x7FFFFFFFFFFFFFFF)


def _coerce_value(key: str, raw: Any, kind: type, source: str) -> Any:
    try:
        if kind is LossKind:
            return raw if isinstance(raw, LossKind) else LossKind(str(raw))
        if kind is tuple:
            if isinstance(raw, str):
                return parse_size(raw)
            height, width = (int(v) for v in raw)
            return height, width
        if isinstance(raw, bool):
            raise TypeError("booleans are not accepted")
        if kind is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise TypeError("expected an integer")
            return int(raw)
        if kind is float:
            return float(raw)
        return str(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source}: bad value for {key}: {raw!r} ({e})") from e


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat YAML mapping. Empty files give {}."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must be a key: value mapping")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"config file {path}: {key} must be a scalar, nested sections are not supported")
    return AttackConfig.coerce(data, f"config file {path}")


def help_lines() -> List[str]:
    """'name (default): description' for every field, used in CLI help."""
    defaults = AttackConfig().to_dict()
    return [f"{name} ({defaults[name]}): {FIELD_HELP.get(name, '')}" for name in AttackConfig.field_names()]
