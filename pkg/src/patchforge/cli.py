"""
CLI entry point. Thin dispatcher only.

Parse args -> call service -> print result. Exit status: 0 when every
requested artifact was written, 2 for usage errors, 3 for bad input or
configuration, 1 for other failures, 130 when interrupted.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from patchforge import __version__
from patchforge.core.config import AttackConfig, help_lines, load_config_file, parse_size
from patchforge.core.detector import detector_registry
from patchforge.core.errors import ConfigError, EmptyDatasetError, InputError, PatchForgeError
from patchforge.core.types import LossKind, Patch
from patchforge.utils import Colors, print_error, print_header, print_info, print_success, print_table, print_warning

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 3
EXIT_INTERRUPTED = 130

# flag dest -> AttackConfig field
FLAG_FIELDS: Dict[str, str] = {
    "seed": "seed",
    "epochs": "epochs",
    "lr": "learning_rate",
    "tv_weight": "lambda_tv",
    "topk": "top_k",
    "loss": "loss_kind",
    "pspp_prob": "pspp_probability",
    "pspp_size": "pspp_target",
    "patch_scale": "patch_scale",
    "patch_side": "patch_side",
    "batch_size": "batch_size",
    "conf_threshold": "conf_threshold",
    "nms_iou": "nms_iou_threshold",
}


def main():
    sys.exit(run())


def run(argv: Optional[List[str]] = None) -> int:
    try:
        return _main(argv)
    except KeyboardInterrupt:
        print(f"\n{Colors.YELLOW}Cancelled.{Colors.ENDC}")
        return EXIT_INTERRUPTED
    except EmptyDatasetError as e:
        print_error(str(e), "check the dataset path, or lower --conf-threshold")
        return EXIT_INPUT
    except (InputError, ConfigError) as e:
        print_error(str(e))
        return EXIT_INPUT
    except PatchForgeError as e:
        print_error(str(e))
        return EXIT_FAILURE


def _size(text: str):
    try:
        return parse_size(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")


def _add_attack_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML file of AttackConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--tv-weight", type=float, help="lambda_tv")
    p.add_argument("--topk", type=int)
    p.add_argument("--loss", choices=[k.value for k in LossKind])
    p.add_argument("--pspp-prob", type=float)
    p.add_argument("--pspp-size", type=_size, metavar="WxH")
    p.add_argument("--patch-scale", type=float)
    p.add_argument("--patch-side", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--conf-threshold", type=float)
    p.add_argument("--nms-iou", type=float)
    p.add_argument("--workers", type=int, default=1, help="evaluation threads")
    _add_common(p)


def _build_parser() -> argparse.ArgumentParser:
    detector_lines = [f"  {name:<8}{text}" for name, text in detector_registry.describe().items()]
    epilog = (
        "Detectors:\n" + "\n".join(detector_lines)
        + "\n\nAttackConfig fields (default):\n" + "\n".join(f"  {line}" for line in help_lines())
    )
    parser = argparse.ArgumentParser(
        prog="patchforge",
        description="Train and evaluate adversarial patches against person detectors",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def attack_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)

    # --- train ---
    p_train = attack_parser("train", "Train a patch against a differentiable detector")
    p_train.add_argument("--detector", default="toy", help="detector spec, e.g. toy or toy:seed=3")
    p_train.add_argument("--data", type=Path, required=True, help="dataset directory")
    p_train.add_argument("--out", type=Path, required=True, help="patch PNG to write")
    p_train.add_argument("--patch", help="initial patch: gray, random or a PNG (default: patch_init)")
    p_train.add_argument("--report", type=Path, help="also evaluate the trained patch and write this report")
    _add_attack_flags(p_train)

    # --- eval ---
    p_eval = attack_parser("eval", "Evaluate a patch: PASR, mAP and ASR")
    p_eval.add_argument("--detector", default="toy")
    p_eval.add_argument("--data", type=Path, required=True)
    p_eval.add_argument("--patch", required=True, help="PNG, gray, random or none")
    p_eval.add_argument("--report", type=Path, help="report file (.csv or .json)")
    p_eval.add_argument("--baseline", help="also evaluate this patch (PNG, gray, random or none) and print the gain over it")
    _add_attack_flags(p_eval)

    # --- transfer ---
    p_transfer = attack_parser("transfer", "Evaluate one patch over several detectors and datasets")
    p_transfer.add_argument("--detector", action="append", required=True, help="repeatable")
    p_transfer.add_argument("--data", type=Path, action="append", required=True, help="repeatable")
    p_transfer.add_argument("--patch", required=True)
    p_transfer.add_argument("--report", type=Path)
    _add_attack_flags(p_transfer)

    # --- metrics ---
    p_metrics = sub.add_parser("metrics", help="Metrics from a prediction / ground-truth exchange file pair")
    p_metrics.add_argument("predictions", type=Path)
    p_metrics.add_argument("ground_truth", type=Path)
    p_metrics.add_argument("--iou", type=float, default=0.5, help="TP matching IoU")
    p_metrics.add_argument("--report", type=Path)
    _add_common(p_metrics)

    # --- streak ---
    p_streak = sub.add_parser("streak", help="Longest run of frames without a detected person")
    p_streak.add_argument("flags", type=Path, help="file of per-frame 0/1 flags, 1 = missed")
    p_streak.add_argument("--fps", type=float, default=30.0)
    _add_common(p_streak)

    # --- demo-figure1 ---
    p_demo = sub.add_parser("demo-figure1", help="Show how mAP and ASR overstate an attack")
    _add_common(p_demo)

    return parser


def _main(argv: Optional[List[str]] = None) -> int:
    from patchforge import detectors  # noqa: F401  registers built-in detectors

    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    handlers = {
        "train": _handle_train,
        "eval": _handle_eval,
        "transfer": _handle_transfer,
        "metrics": _handle_metrics,
        "streak": _handle_streak,
        "demo-figure1": _handle_demo,
    }
    return handlers[args.command](args)


def _config_from_args(args) -> AttackConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flag_values: Dict[str, Any] = {field: getattr(args, dest) for dest, field in FLAG_FIELDS.items()}
    return AttackConfig.merged(file_values, flag_values)


def _resolve_patch(value: Optional[str], config: AttackConfig) -> Optional[Patch]:
    from patchforge.core.patching import init_patch, load_patch_png

    if value is None or value == "none":
        return None
    if value == "gray":
        return init_patch(config.patch_side, "gray")
    if value == "random":
        return init_patch(config.patch_side, "noise", config.rng("init"))
    return load_patch_png(value)


def _filtered(detector, data: Path, config: AttackConfig):
    from patchforge.dataset.manifest import open_dataset
    from patchforge.services.dataset_service import filter_person_images

    manifest = open_dataset(data)
    filtered = filter_person_images(detector, manifest, config.conf_threshold, config.nms_iou_threshold, config.class_id)
    print_info(f"{len(filtered)} of {len(manifest)} images in {data} contain a detected person")
    if filtered.skipped:
        print_warning(f"{len(filtered.skipped)} images skipped as unreadable: {', '.join(filtered.skipped[:3])}")
    return filtered


def _handle_train(args) -> int:
    from patchforge.core.patching import save_patch_png
    from patchforge.detectors import get_detector
    from patchforge.services.eval_service import evaluate_patch
    from patchforge.services.report_service import format_report, write_report, write_training_log
    from patchforge.services.train_service import train_patch
    from patchforge.utils import TrainingProgress

    config = _config_from_args(args)
    detector = get_detector(args.detector)
    filtered = _filtered(detector, args.data, config)
    initial = _resolve_patch(args.patch, config) if args.patch else None

    print_header(f"Training on {detector.name} for {config.epochs} epochs")
    with TrainingProgress(config.epochs) as progress:
        result = train_patch(config, detector, filtered, initial, on_epoch=progress.update)

    save_patch_png(result.patch, args.out)
    print_success(f"patch written to {args.out}")
    log_path = args.out.with_name(args.out.stem + ".log.csv")
    write_training_log(result.log, log_path)
    print_success(f"training log written to {log_path}")
    if result.log:
        first, last = result.log[0], result.log[-1]
        print_info(f"adversarial loss {first.adv_loss:.5f} -> {last.adv_loss:.5f}")

    if args.report:
        report = evaluate_patch(detector, filtered, result.patch, config, args.workers, args.detector, args.out.name)
        write_report(report, args.report)
        print_success(format_report(report))
        print_success(f"report written to {args.report}")
    return EXIT_OK


def _handle_eval(args) -> int:
    from patchforge.detectors import get_detector
    from patchforge.services.eval_service import evaluate_patch
    from patchforge.services.report_service import format_improvement, format_report, write_report

    config = _config_from_args(args)
    detector = get_detector(args.detector)
    patch = _resolve_patch(args.patch, config)
    baseline_patch = _resolve_patch(args.baseline, config) if args.baseline else None
    filtered = _filtered(detector, args.data, config)

    report = evaluate_patch(detector, filtered, patch, config, args.workers, args.detector, Path(args.patch).name)
    print_success(format_report(report))
    if args.baseline:
        baseline = evaluate_patch(
            detector, filtered, baseline_patch, config, args.workers, args.detector, Path(args.baseline).name
        )
        print_info(format_report(baseline))
        print_success(format_improvement(report, baseline))
    if args.report:
        write_report(report, args.report)
        print_success(f"report written to {args.report}")
    return EXIT_OK


def _handle_transfer(args) -> int:
    from patchforge.dataset.manifest import open_dataset
    from patchforge.detectors import get_detector
    from patchforge.services.eval_service import evaluate_transfer
    from patchforge.services.report_service import REPORT_COLUMNS, report_row, write_reports

    config = _config_from_args(args)
    detectors = [(spec, get_detector(spec)) for spec in args.detector]
    datasets = [open_dataset(path) for path in args.data]
    patch = _resolve_patch(args.patch, config)

    reports = evaluate_transfer(detectors, datasets, patch, config, args.workers, Path(args.patch).name)
    print_table(REPORT_COLUMNS, [report_row(r) for r in reports])
    if args.report:
        write_reports(reports, args.report)
        print_success(f"report written to {args.report}")
    return EXIT_OK


def _handle_metrics(args) -> int:
    from patchforge.services.metrics_service import metrics_from_exchange
    from patchforge.services.report_service import format_report, write_report

    report = metrics_from_exchange(args.predictions, args.ground_truth, args.iou)
    print_success(format_report(report))
    if args.report:
        write_report(report, args.report)
        print_success(f"report written to {args.report}")
    return EXIT_OK


def _handle_streak(args) -> int:
    from patchforge.core.metrics import longest_miss_streak
    from patchforge.services.metrics_service import read_frame_flags

    if args.fps <= 0:
        raise InputError(f"--fps must be positive, got {args.fps}")
    frames, seconds = longest_miss_streak(read_frame_flags(args.flags), args.fps)
    print_success(f"longest undetected streak: {frames} frames = {seconds:.2f} s at {args.fps:g} fps")
    return EXIT_OK


def _handle_demo(args) -> int:
    from patchforge.services.demo_service import overestimation_scenarios

    scenarios = overestimation_scenarios()
    print_header("Attack metrics on hand-built scenarios (one person, GT box 0,0,100,200)")
    print_table(
        ["scenario", "mAP", "ASR", "PASR", "boxes"],
        [[s.name, s.report.map, s.report.asr, s.report.pasr, len(s.detections)] for s in scenarios],
    )
    print()
    for s in scenarios:
        print_info(f"{s.name}: {s.description}")
    return EXIT_OK


if __name__ == "__main__":
    main()
