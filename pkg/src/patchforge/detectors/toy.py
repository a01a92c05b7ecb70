"""
Seeded single-layer convolutional person detector.

One kernel bank per anchor scale: channel 0 is objectness, channel 1 the
person score, channels 2.. the remaining classes. Responses are averaged per
grid cell and squashed with a sigmoid. Person and objectness kernels are
positive and sum to one, so a uniform region of value v responds with
bias + gain * v: bright blobs read as people, dark paint suppresses them and
mid-gray stays below the default 0.25 confidence threshold.
"""

from typing import Tuple

import torch
import torch.nn.functional as F

from ..core.detector import BaseDetector, detector_registry
from ..core.errors import ExtentError
from ..core.types import Candidates, DetectorInfo, ImageGrid, ToyDetectorParams

OBJ_BIAS, OBJ_GAIN = -6.0, 10.0
PERSON_BIAS, PERSON_GAIN = -4.0, 8.0
OTHER_BIAS, OTHER_GAIN = -3.0, 2.0


def _kernel_bank(params: ToyDetectorParams) -> Tuple[torch.Tensor, torch.Tensor]:
    gen = torch.Generator().manual_seed(params.seed)
    k, classes = params.kernel_size, params.class_count
    weights, biases = [], []
    for _ in params.anchor_scales:
        obj = torch.randn(3, k, k, generator=gen, dtype=torch.float64).abs()
        weights.append(OBJ_GAIN * obj / obj.sum())
        biases.append(OBJ_BIAS)

        person = torch.randn(3, k, k, generator=gen, dtype=torch.float64).abs()
        weights.append(PERSON_GAIN * person / person.sum())
        biases.append(PERSON_BIAS)

        for _ in range(classes - 1):
            other = torch.randn(3, k, k, generator=gen, dtype=torch.float64)
            weights.append(OTHER_GAIN * other / other.abs().sum())
            biases.append(OTHER_BIAS)
    return torch.stack(weights), torch.tensor(biases, dtype=torch.float64)


class ToyDetector(BaseDetector):
    def __init__(self, params: ToyDetectorParams = ToyDetectorParams()):
        self.params = params
        self.weight, self.bias = _kernel_bank(params)
        self._info = DetectorInfo(name="toy", class_count=params.class_count, differentiable=True)

    @property
    def info(self) -> DetectorInfo:
        return self._info

    @property
    def cache_key(self) -> str:
        p = self.params
        scales = "-".join(f"{s:g}" for s in p.anchor_scales)
        return f"toy-s{p.seed}-g{p.grid_stride}-k{p.kernel_size}-a{scales}-c{p.class_count}"

    def check_extent(self, image: ImageGrid) -> None:
        stride = self.params.grid_stride
        if image.height < stride or image.width < stride:
            raise ExtentError(f"toy detector needs images of at least {stride}x{stride}, got {image.width}x{image.height}")

    def forward(self, image: ImageGrid) -> Candidates:
        self.check_extent(image)
        p = self.params
        stride, anchors, per_anchor = p.grid_stride, len(p.anchor_scales), 1 + p.class_count

        response = F.conv2d(
            image.pixels.to(torch.float64).unsqueeze(0), self.weight, self.bias, padding=p.kernel_size // 2
        )
        cells = torch.sigmoid(F.avg_pool2d(response, kernel_size=stride, stride=stride))[0]
        rows, cols = cells.shape[1], cells.shape[2]

        # (A*(1+C), R, Q) -> (R*Q*A, 1+C), cell-major then anchor
        scores = cells.reshape(anchors, per_anchor, rows, cols).permute(2, 3, 0, 1).reshape(-1, per_anchor)

        ys = (torch.arange(rows, dtype=torch.float64) + 0.5) * stride
        xs = (torch.arange(cols, dtype=torch.float64) + 0.5) * stride
        cy, cx = torch.meshgrid(ys, xs, indexing="ij")
        half = torch.tensor(p.anchor_scales, dtype=torch.float64) * stride / 2
        cx = cx.reshape(-1, 1).expand(-1, anchors).reshape(-1)
        cy = cy.reshape(-1, 1).expand(-1, anchors).reshape(-1)
        half = half.repeat(rows * cols)
        boxes = torch.stack([cx - half, cy - half, cx + half, cy + half], dim=1)

        return Candidates(boxes=boxes, objectness=scores[:, 0], class_scores=scores[:, 1:])


def make_toy_detector(params: ToyDetectorParams = ToyDetectorParams()) -> ToyDetector:
    return ToyDetector(params)


def _from_spec(**options) -> ToyDetector:
    # anchor_scales=2;4 on the command line, since commas separate options
    if "anchor_scales" in options:
        scales = options["anchor_scales"]
        if isinstance(scales, str):
            scales = scales.split(";")
        elif not isinstance(scales, (list, tuple)):
            scales = [scales]
        options["anchor_scales"] = tuple(float(s) for s in scales)
    return ToyDetector(ToyDetectorParams(**options))


detector_registry.register("toy", _from_spec, "seeded differentiable convolutional detector")
