"""
Detection exchange files: raw candidates of a whole dataset in one JSON
document, so detectors living outside this process can be evaluated.

    {"detector": ..., "conf_threshold": ..., "nms_iou_threshold": ...,
     "images": [{"id": ..., "detections": [
         {"box": [x1, y1, x2, y2], "objectness": ..., "class_scores": [...]}]}]}
"""

import json
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from patchforge.core.detections import nms
from patchforge.core.errors import ExchangeFormatError
from patchforge.core.types import BBox, Detection, ExchangeDocument, RawPrediction
from patchforge.utils.filesystem import atomic_write_text

_ID_KEY = re.compile(r'"id"\s*:')


def _record_lines(text: str) -> List[int]:
    """1-based line of every image record, located by its "id" key."""
    return [text.count("\n", 0, m.start()) + 1 for m in _ID_KEY.finditer(text)]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ExchangeFormatError(f"expected a number, got {value!r}", field=where)
    if not math.isfinite(value):
        raise ExchangeFormatError(f"expected a finite number, got {value!r}", field=where)
    return float(value)


def _unit(value: Any, where: str) -> float:
    number = _number(value, where)
    if not 0.0 <= number <= 1.0:
        raise ExchangeFormatError(f"value {number} outside [0, 1]", field=where)
    return number


def _require(obj: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ExchangeFormatError(f"missing required field {key!r}", field=f"{where}.{key}" if where else key)
    return obj[key]


def _parse_candidate(raw: Any, where: str) -> RawPrediction:
    if not isinstance(raw, dict):
        raise ExchangeFormatError("detection must be an object", field=where)
    box = _require(raw, "box", where)
    if not isinstance(box, list) or len(box) != 4:
        raise ExchangeFormatError("box must be [x1, y1, x2, y2]", field=f"{where}.box")
    coords = [_number(v, f"{where}.box[{i}]") for i, v in enumerate(box)]
    if coords[2] < coords[0] or coords[3] < coords[1]:
        raise ExchangeFormatError(f"box has negative extent: {coords}", field=f"{where}.box")

    objectness = _unit(_require(raw, "objectness", where), f"{where}.objectness")
    scores = _require(raw, "class_scores", where)
    if not isinstance(scores, list) or not scores:
        raise ExchangeFormatError("class_scores must be a non-empty list", field=f"{where}.class_scores")
    class_scores = tuple(_unit(v, f"{where}.class_scores[{i}]") for i, v in enumerate(scores))
    return RawPrediction(BBox(*coords), objectness, class_scores)


def parse_detection_exchange(text: str) -> ExchangeDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ExchangeFormatError(e.msg, line=e.lineno) from e
    if not isinstance(data, dict):
        raise ExchangeFormatError("top level must be an object")

    detector = _require(data, "detector", "")
    if not isinstance(detector, str):
        raise ExchangeFormatError("detector must be a string", field="detector")
    document = ExchangeDocument(
        detector=detector,
        conf_threshold=_unit(_require(data, "conf_threshold", ""), "conf_threshold"),
        nms_iou_threshold=_unit(_require(data, "nms_iou_threshold", ""), "nms_iou_threshold"),
    )

    images = _require(data, "images", "")
    if not isinstance(images, list):
        raise ExchangeFormatError("images must be a list", field="images")
    class_count = None
    lines = _record_lines(text)
    for i, record in enumerate(images):
        try:
            class_count = _parse_record(document, record, i, class_count)
        except ExchangeFormatError as e:
            if e.line is not None or len(lines) != len(images):
                raise
            raise ExchangeFormatError(e.message, e.field, lines[i]) from e
    return document


def _parse_record(document: ExchangeDocument, record: Any, i: int, class_count: Optional[int]) -> Optional[int]:
    where = f"images[{i}]"
    if not isinstance(record, dict):
        raise ExchangeFormatError("image record must be an object", field=where)
    image_id = _require(record, "id", where)
    if not isinstance(image_id, str) or not image_id:
        raise ExchangeFormatError("id must be a non-empty string", field=f"{where}.id")
    if image_id in document.images:
        raise ExchangeFormatError(f"duplicate image id {image_id!r}", field=f"{where}.id")
    dets = _require(record, "detections", where)
    if not isinstance(dets, list):
        raise ExchangeFormatError("detections must be a list", field=f"{where}.detections")

    candidates = []
    for j, raw in enumerate(dets):
        candidate = _parse_candidate(raw, f"{where}.detections[{j}]")
        if class_count is None:
            class_count = len(candidate.class_scores)
        elif len(candidate.class_scores) != class_count:
            raise ExchangeFormatError(
                f"expected {class_count} class scores, got {len(candidate.class_scores)}",
                field=f"{where}.detections[{j}].class_scores",
            )
        candidates.append(candidate)
    document.images[image_id] = candidates
    return class_count


def read_detection_exchange(path: Union[str, Path]) -> ExchangeDocument:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ExchangeFormatError(f"cannot read file: {e}", source=str(path)) from e
    try:
        return parse_detection_exchange(text)
    except ExchangeFormatError as e:
        raise e.with_source(str(path)) from e


def to_json(document: ExchangeDocument) -> Dict[str, Any]:
    return {
        "detector": document.detector,
        "conf_threshold": document.conf_threshold,
        "nms_iou_threshold": document.nms_iou_threshold,
        "images": [
            {
                "id": image_id,
                "detections": [
                    {
                        "box": c.box.as_list(),
                        "objectness": c.objectness,
                        "class_scores": list(c.class_scores),
                    }
                    for c in candidates
                ],
            }
            for image_id, candidates in document.images.items()
        ],
    }


def write_detection_exchange(document: ExchangeDocument, path: Union[str, Path]) -> Path:
    return atomic_write_text(path, json.dumps(to_json(document), indent=1) + "\n")


def post_nms(document: ExchangeDocument) -> Dict[str, List[Detection]]:
    """Run NMS on every image with the thresholds the document carries."""
    return {
        image_id: nms(candidates, document.conf_threshold, document.nms_iou_threshold)
        for image_id, candidates in document.images.items()
    }
