"""Shared fixtures for tests."""

from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pytest
import torch
from PIL import Image

from patchforge.core.config import AttackConfig
from patchforge.core.types import ImageGrid
from patchforge.dataset.manifest import open_dataset
from patchforge.detectors.toy import make_toy_detector
from patchforge.services.dataset_service import filter_person_images

# Bright squares on a black 64x64 canvas: (x, y, side)
PERSON_LAYOUTS: List[Tuple[int, int, int]] = [
    (24, 24, 16),
    (8, 16, 16),
    (32, 8, 24),
    (16, 32, 16),
]


def person_pixels(size: int = 64, squares: Sequence[Tuple[int, int, int]] = ((24, 24, 16),)) -> np.ndarray:
    """uint8 HxWx3 image, black with white squares."""
    arr = np.zeros((size, size, 3), dtype=np.uint8)
    for x, y, side in squares:
        arr[y : y + side, x : x + side] = 255
    return arr


def write_png(path: Path, arr: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr).save(path)
    return path


def as_grid(arr: np.ndarray, source_id: str = "img") -> ImageGrid:
    return ImageGrid(torch.from_numpy(arr.astype(np.float64) / 255.0).permute(2, 0, 1).contiguous(), source_id)


def central_difference(f: Callable[[torch.Tensor], float], x: torch.Tensor, h: float = 1e-6) -> torch.Tensor:
    """Entry-wise central finite differences of a scalar function."""
    grad = torch.zeros_like(x)
    flat, out = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.numel()):
        orig = float(flat[i])
        flat[i] = orig + h
        plus = f(x)
        flat[i] = orig - h
        minus = f(x)
        flat[i] = orig
        out[i] = (plus - minus) / (2 * h)
    return grad


def relative_error(a: torch.Tensor, b: torch.Tensor) -> float:
    scale = max(float(a.norm()), float(b.norm()), 1e-12)
    return float((a - b).norm()) / scale


@pytest.fixture
def toy():
    return make_toy_detector()


@pytest.fixture
def person_image():
    return as_grid(person_pixels(), "person.png")


@pytest.fixture
def person_dataset(tmp_path):
    """Four 64x64 PNGs with one bright 'person' each, plus a blank image."""
    root = tmp_path / "data"
    for i, layout in enumerate(PERSON_LAYOUTS):
        write_png(root / f"img{i}.png", person_pixels(squares=[layout]))
    write_png(root / "blank.png", person_pixels(squares=[]))
    return root


@pytest.fixture
def small_config():
    """Desk-scale settings: whole-box patches, small canvas, no padding."""
    return AttackConfig(
        epochs=200,
        patch_side=16,
        patch_scale=1.0,
        pspp_probability=0.0,
        pspp_target=(96, 96),
        batch_size=8,
        seed=7,
    )


@pytest.fixture
def filtered_dataset(person_dataset, toy, small_config):
    return filter_person_images(
        toy, open_dataset(person_dataset), small_config.conf_threshold, small_config.nms_iou_threshold
    )
