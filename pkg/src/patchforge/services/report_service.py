"""
Report and training-log writers.

CSV reports have one row per (detector, dataset, patch) triple with columns
detector,dataset,patch,pasr,map,asr,images. The JSON mirror carries the same
values plus the per-image breakdown. Floats are written with repr(), so both
formats hold identical numbers.
"""

import csv
import io
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from patchforge.core.errors import InputError
from patchforge.core.metrics import improvement
from patchforge.core.types import EpochLog, MetricsReport
from patchforge.utils.filesystem import atomic_write_text

REPORT_COLUMNS = ["detector", "dataset", "patch", "pasr", "map", "asr", "images"]
LOG_COLUMNS = ["epoch", "adv_loss", "tv_loss", "total_loss", "learning_rate"]
FORMATS = ("csv", "json")


def report_format(path: Union[str, Path], fmt: Optional[str] = None) -> str:
    fmt = (fmt or Path(path).suffix.lstrip(".") or "csv").lower()
    if fmt not in FORMATS:
        raise InputError(f"unknown report format {fmt!r}; use csv or json")
    return fmt


def report_row(report: MetricsReport) -> List[Any]:
    return [report.detector, report.dataset, report.patch, report.pasr, report.map, report.asr, report.image_count]


def report_to_json(report: MetricsReport) -> Dict[str, Any]:
    data: Dict[str, Any] = dict(zip(REPORT_COLUMNS, report_row(report)))
    data["tp"] = report.tp_count
    data["gt"] = report.gt_count
    data["per_image"] = [
        {"id": r.image_id, "success": r.success, "gt_count": r.gt_count, "detection_count": r.detection_count}
        for r in report.per_image
    ]
    return data


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def write_reports(reports: Sequence[MetricsReport], path: Union[str, Path], fmt: Optional[str] = None) -> Path:
    fmt = report_format(path, fmt)
    if fmt == "csv":
        text = _csv_text(REPORT_COLUMNS, [report_row(r) for r in reports])
    elif len(reports) == 1:
        text = json.dumps(report_to_json(reports[0]), indent=2) + "\n"
    else:
        text = json.dumps({"reports": [report_to_json(r) for r in reports]}, indent=2) + "\n"
    try:
        return atomic_write_text(path, text)
    except OSError as e:
        raise InputError(f"cannot write report {path}: {e}") from e


def write_report(report: MetricsReport, path: Union[str, Path], fmt: Optional[str] = None) -> Path:
    return write_reports([report], path, fmt)


def write_training_log(log: Sequence[EpochLog], path: Union[str, Path]) -> Path:
    rows = [[e.epoch, e.adv_loss, e.tv_loss, e.total_loss, e.learning_rate] for e in log]
    try:
        return atomic_write_text(path, _csv_text(LOG_COLUMNS, rows))
    except OSError as e:
        raise InputError(f"cannot write training log {path}: {e}") from e


def format_report(report: MetricsReport) -> str:
    return (
        f"{report.detector} on {report.dataset} ({report.image_count} images): "
        f"PASR {report.pasr:.4f}  mAP {report.map:.4f}  ASR {report.asr:.4f}"
    )


def format_improvement(ours: MetricsReport, baseline: MetricsReport) -> str:
    """Percentage-point gains; a positive mAP figure means mAP dropped."""
    gains = improvement(ours, baseline)
    return (
        f"gain over {baseline.patch or 'no patch'}: "
        f"PASR {gains['pasr']:+.1f} pp  mAP drop {gains['map']:+.1f} pp  ASR {gains['asr']:+.1f} pp"
    )
