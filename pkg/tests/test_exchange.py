"""Tests for detection exchange files."""

import json

import pytest

from patchforge.core.errors import ExchangeFormatError, InputError
from patchforge.core.types import BBox, ExchangeDocument, RawPrediction
from patchforge.services.exchange_service import (
    parse_detection_exchange,
    post_nms,
    read_detection_exchange,
    to_json,
    write_detection_exchange,
)


def _document():
    return ExchangeDocument(
        detector="toy",
        conf_threshold=0.25,
        nms_iou_threshold=0.45,
        images={
            "a.png": [
                RawPrediction(BBox(0, 0, 10, 20), 0.9, (0.8, 0.1)),
                RawPrediction(BBox(1, 1, 11, 21), 0.7, (0.9, 0.05)),
            ],
            "b.png": [],
            "c.png": [RawPrediction(BBox(50, 50, 60.5, 70.25), 0.3, (0.2, 0.6))],
        },
    )


def _text(data):
    return json.dumps(data, indent=1)


def test_write_then_read(tmp_path):
    path = write_detection_exchange(_document(), tmp_path / "out" / "dets.json")
    assert read_detection_exchange(path) == _document()
    assert list(read_detection_exchange(path).images) == ["a.png", "b.png", "c.png"]


def test_missing_box_names_the_field():
    data = to_json(_document())
    del data["images"][0]["detections"][1]["box"]
    with pytest.raises(ExchangeFormatError) as excinfo:
        parse_detection_exchange(_text(data))
    assert excinfo.value.field == "images[0].detections[1].box"
    assert "missing required field 'box'" in str(excinfo.value)


@pytest.mark.parametrize(
    "mutate,field",
    [
        (lambda d: d["images"][0]["detections"][0].update(objectness=1.2), "images[0].detections[0].objectness"),
        (lambda d: d["images"][2]["detections"][0].update(class_scores=[0.2, -0.1]), "images[2].detections[0].class_scores[1]"),
        (lambda d: d["images"][0]["detections"][0].update(box=[0, 0, 10]), "images[0].detections[0].box"),
        (lambda d: d["images"][0]["detections"][0].update(box=[10, 0, 0, 5]), "images[0].detections[0].box"),
        (lambda d: d["images"][0]["detections"][0].update(box=[0, "0", 1, 1]), "images[0].detections[0].box[1]"),
        (lambda d: d["images"][0]["detections"][0].update(class_scores=[]), "images[0].detections[0].class_scores"),
        (lambda d: d["images"][1].update(id="a.png"), "images[1].id"),
        (lambda d: d["images"][2]["detections"][0].update(class_scores=[0.2]), "images[2].detections[0].class_scores"),
        (lambda d: d.update(conf_threshold=2), "conf_threshold"),
        (lambda d: d.pop("detector"), "detector"),
        (lambda d: d.update(images={}), "images"),
    ],
)
def test_invalid_documents(mutate, field):
    data = to_json(_document())
    mutate(data)
    with pytest.raises(ExchangeFormatError) as excinfo:
        parse_detection_exchange(_text(data))
    assert excinfo.value.field == field


def test_record_errors_carry_the_line_number():
    data = to_json(_document())
    data["images"][2]["detections"][0]["objectness"] = 1.2
    text = _text(data)
    expected = next(i for i, line in enumerate(text.splitlines(), 1) if '"id": "c.png"' in line)
    with pytest.raises(ExchangeFormatError) as excinfo:
        parse_detection_exchange(text)
    assert excinfo.value.line == expected
    assert f"line {expected}" in str(excinfo.value)


def test_syntax_errors_carry_the_line_number():
    with pytest.raises(ExchangeFormatError) as excinfo:
        parse_detection_exchange('{\n "detector": "toy",\n "images": [,]\n}')
    assert excinfo.value.line == 3


def test_read_errors_name_the_file(tmp_path):
    path = tmp_path / "dets.json"
    path.write_text("[]")
    with pytest.raises(ExchangeFormatError, match="dets.json"):
        read_detection_exchange(path)
    with pytest.raises(InputError, match="cannot read"):
        read_detection_exchange(tmp_path / "absent.json")


def test_post_nms_uses_document_thresholds():
    dets = post_nms(_document())
    assert [d.box for d in dets["a.png"]] == [BBox(0, 0, 10, 20)]
    assert dets["a.png"][0].confidence == pytest.approx(0.72)
    assert dets["b.png"] == []
    # 0.3 * 0.6 is below the 0.25 threshold
    assert dets["c.png"] == []
