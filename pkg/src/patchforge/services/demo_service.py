"""
Hand-built scenarios where mAP and ASR report a successful attack while
every person is still visibly detected, next to a true disappearance.
"""

from dataclasses import dataclass
from typing import List

from patchforge.core.metrics import build_report
from patchforge.core.types import BBox, Detection, MetricsReport

PERSON = BBox(0, 0, 100, 200)


@dataclass
class Scenario:
    name: str
    description: str
    detections: List[Detection]
    report: MetricsReport


def _scenario(name: str, description: str, detections: List[Detection]) -> Scenario:
    report = build_report({name: detections}, {name: [PERSON]}, detector="fixture", dataset=name, patch="-")
    return Scenario(name, description, detections, report)


def overestimation_scenarios() -> List[Scenario]:
    return [
        _scenario(
            "fragmentation",
            "person split into three boxes, each with IoU 0.3",
            [
                Detection(BBox(0, 0, 100, 60), 0.9, 0),
                Detection(BBox(0, 70, 100, 130), 0.8, 0),
                Detection(BBox(0, 140, 100, 200), 0.7, 0),
            ],
        ),
        _scenario(
            "below-threshold",
            "one box covering the upper body, IoU 0.4",
            [Detection(BBox(0, 0, 100, 80), 0.9, 0)],
        ),
        _scenario("disappearance", "no detection at all", []),
    ]
