"""
Patch placement, compositing and scale-preserving padding.

Compositing is x * (1 - M) + patch * M with M the indicator of each placement
square, written as a slice assignment on a copy of the image so autograd
reaches the patch pixels through the bilinear resize.
"""

import io
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from ..utils.filesystem import atomic_write_bytes
from .errors import ExtentError, InputError
from .geometry import area
from .types import BBox, ImageGrid, PaddingResult, Patch, Placement

DEFAULT_PATCH_SCALE = 0.2
DEFAULT_PSPP_FILL = 0.5
PATCH_INIT_MODES = ("gray", "noise")
# appended to the source id of every composited image
PATCHED_SUFFIX = "#patched"


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def plan_placements(
    boxes: Sequence[BBox],
    scale: float,
    image_extent: Tuple[int, int],
) -> List[Placement]:
    """
    One centered square of side scale * sqrt(area(box)) per box, clipped to
    the (H, W) image rectangle. Placements that clip to nothing are dropped.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    height, width = image_extent
    placements = []
    for box in boxes:
        side = scale * math.sqrt(area(box))
        if side <= 0:
            continue
        cx, cy = box.center
        full = BBox.from_center(cx, cy, side, side)
        x1, y1 = max(full.x1, 0.0), max(full.y1, 0.0)
        x2, y2 = min(full.x2, float(width)), min(full.y2, float(height))
        if x2 <= x1 or y2 <= y1:
            continue
        placements.append(Placement(box, BBox(x1, y1, x2, y2), full, scale))
    return placements


def _pixel_bounds(region: BBox) -> Tuple[int, int, int, int]:
    x1, y1 = _round(region.x1), _round(region.y1)
    x2 = max(_round(region.x2), x1 + 1)
    y2 = max(_round(region.y2), y1 + 1)
    return x1, y1, x2, y2


def apply_patch(image: ImageGrid, placements: Sequence[Placement], patch: Union[Patch, torch.Tensor]) -> ImageGrid:
    """
    Paste the bilinearly resized patch into every placement.

    The patch is resized to the full (unclipped) square, then cropped to the
    part inside the image, so a clipped placement shows the matching part of
    the patch rather than a squashed copy. Pixels outside every placement are
    returned unchanged. The result carries the source id with PATCHED_SUFFIX.
    """
    if not placements:
        return ImageGrid(image.pixels.clone(), image.source_id)

    pixels = patch.pixels if isinstance(patch, Patch) else patch
    pixels = pixels.to(image.pixels.dtype)
    out = image.pixels.clone()
    height, width = image.extent

    for placement in placements:
        fx1, fy1, fx2, fy2 = _pixel_bounds(placement.full_region)
        cx1, cy1 = max(fx1, 0), max(fy1, 0)
        cx2, cy2 = min(fx2, width), min(fy2, height)
        if cx2 <= cx1 or cy2 <= cy1:
            continue
        resized = F.interpolate(
            pixels.unsqueeze(0), size=(fy2 - fy1, fx2 - fx1), mode="bilinear", align_corners=False
        )[0]
        out[:, cy1:cy2, cx1:cx2] = resized[:, cy1 - fy1 : cy2 - fy1, cx1 - fx1 : cx2 - fx1]

    source_id = image.source_id + PATCHED_SUFFIX if image.source_id is not None else None
    return ImageGrid(out, source_id)


def apply_cutout(
    pixels: torch.Tensor,
    fraction: float,
    fill: float,
    rng: np.random.Generator,
) -> torch.Tensor:
    """Overwrite one random square of side fraction * side with fill."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"cutout fraction must lie in (0, 1], got {fraction}")
    side = pixels.shape[-1]
    cut = max(1, _round(fraction * side))
    y0 = int(rng.integers(0, side - cut + 1))
    x0 = int(rng.integers(0, side - cut + 1))
    mask = torch.zeros_like(pixels)
    mask[..., y0 : y0 + cut, x0 : x0 + cut] = 1.0
    return pixels * (1.0 - mask) + fill * mask


def pspp(
    image: ImageGrid,
    target: Tuple[int, int],
    probability: float,
    fill: float = DEFAULT_PSPP_FILL,
    rng: Optional[np.random.Generator] = None,
) -> PaddingResult:
    """
    With probability ``probability`` put the image, unresampled, at the
    center of a (H, W) = ``target`` canvas of constant ``fill``.

    One uniform draw is consumed per call whether or not padding fires, so
    the stream stays aligned across images. The returned offset (dx, dy)
    maps source coordinates into the canvas.
    """
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    if not 0.0 <= fill <= 1.0:
        raise ValueError(f"fill must lie in [0, 1], got {fill}")
    target_h, target_w = target
    height, width = image.extent
    if target_h < height or target_w < width:
        raise ExtentError(
            f"padding target {target_w}x{target_h} is smaller than image {width}x{height}"
            + (f" ({image.source_id})" if image.source_id else "")
        )

    rng = rng if rng is not None else np.random.default_rng()
    if rng.random() >= probability:
        return PaddingResult(image=image, offset=(0, 0), padded=False)

    dx, dy = (target_w - width) // 2, (target_h - height) // 2
    canvas = torch.full((3, target_h, target_w), fill, dtype=image.pixels.dtype)
    canvas[:, dy : dy + height, dx : dx + width] = image.pixels
    return PaddingResult(image=ImageGrid(canvas, image.source_id), offset=(dx, dy), padded=True)


def init_patch(side: int, mode: str = "gray", rng: Optional[np.random.Generator] = None) -> Patch:
    if side < 2:
        raise ValueError(f"patch side must be >= 2, got {side}")
    if mode == "gray":
        return Patch(torch.full((3, side, side), 0.5, dtype=torch.float64))
    if mode == "noise":
        rng = rng if rng is not None else np.random.default_rng()
        return Patch(torch.from_numpy(rng.random((3, side, side))))
    raise ValueError(f"unknown patch init mode {mode!r}; expected one of {', '.join(PATCH_INIT_MODES)}")


def save_patch_png(patch: Patch, path: Union[str, Path]) -> Path:
    """8-bit RGB PNG; a load round-trip differs by at most 1/510 per channel."""
    arr = (patch.pixels.detach().clamp(0.0, 1.0) * 255.0).round().to(torch.uint8)
    buffer = io.BytesIO()
    Image.fromarray(arr.permute(1, 2, 0).contiguous().numpy()).save(buffer, format="PNG")
    try:
        return atomic_write_bytes(path, buffer.getvalue())
    except OSError as e:
        raise InputError(f"cannot write patch {path}: {e}") from e


def load_rgb(path: Union[str, Path]) -> torch.Tensor:
    """Decode any Pillow-readable image to a (3, H, W) float64 tensor in [0, 1]."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except (OSError, UnidentifiedImageError) as e:
        raise InputError(f"cannot read image {path}: {e}") from e
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def load_patch_png(path: Union[str, Path]) -> Patch:
    pixels = load_rgb(path)
    if pixels.shape[1] != pixels.shape[2]:
        raise InputError(f"patch image {path} is not square: {pixels.shape[2]}x{pixels.shape[1]}")
    try:
        return Patch(pixels)
    except ValueError as e:
        raise InputError(f"invalid patch image {path}: {e}") from e
