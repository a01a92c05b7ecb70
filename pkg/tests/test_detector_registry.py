"""Tests for detector specs and the detector registry."""

import pytest

from patchforge.core.detector import DetectorRegistry, detector_registry, parse_detector_spec
from patchforge.core.errors import ConfigError, InputError
from patchforge.core.types import ExchangeDocument
from patchforge.detectors import ReplayDetector, ToyDetector, get_detector
from patchforge.services.exchange_service import write_detection_exchange


def test_parse_detector_spec():
    assert parse_detector_spec("toy") == ("toy", {})
    assert parse_detector_spec(" TOY:seed=3, grid_stride=16 ") == ("toy", {"seed": 3, "grid_stride": 16})
    assert parse_detector_spec("replay:path=out/dets.json") == ("replay", {"path": "out/dets.json"})
    assert parse_detector_spec("toy:anchor_scales=2;4") == ("toy", {"anchor_scales": "2;4"})


@pytest.mark.parametrize("spec", ["", ":seed=1", "toy:seed", "toy:=3"])
def test_bad_specs(spec):
    with pytest.raises(ConfigError):
        parse_detector_spec(spec)


def test_builtin_detectors_are_registered():
    assert {"toy", "replay"} <= set(detector_registry.names())
    assert detector_registry.describe()["toy"]


def test_create_toy_with_options():
    detector = get_detector("toy:seed=3,grid_stride=16,anchor_scales=2;4")
    assert isinstance(detector, ToyDetector)
    assert detector.params.seed == 3
    assert detector.params.grid_stride == 16
    assert detector.params.anchor_scales == (2.0, 4.0)
    assert detector.info.differentiable


def test_create_replay(tmp_path):
    path = write_detection_exchange(ExchangeDocument("remote", 0.25, 0.45), tmp_path / "remote run.json")
    detector = get_detector(f"replay:path={path}")
    assert isinstance(detector, ReplayDetector)
    assert detector.name == "remote"
    assert detector.cache_key.startswith("replay-remote_run-")
    assert detector.identity.startswith("remote@sha256:")
    assert not detector.info.differentiable


@pytest.mark.parametrize("spec", ["yolo", "toy:colour=red", "toy:kernel_size=4", "replay"])
def test_create_errors(spec):
    with pytest.raises(ConfigError):
        get_detector(spec)


def test_replay_of_missing_file_is_an_input_error(tmp_path):
    with pytest.raises(InputError):
        get_detector(f"replay:path={tmp_path / 'absent.json'}")


def test_private_registry():
    registry = DetectorRegistry()
    registry.register("Fixed", lambda: ToyDetector(), "always the default toy")
    assert registry.names() == ["fixed"]
    assert isinstance(registry.create("FIXED"), ToyDetector)
    with pytest.raises(ConfigError, match="available: fixed"):
        registry.create("toy")
