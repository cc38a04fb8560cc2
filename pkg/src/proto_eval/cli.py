"""Command-line surface: convert, split, account, evaluate, image-eval, ledger.

Exit codes: 0 success, 1 I/O or parse failure, 2 validation
discrepancies, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import annotations, reports, splits, training
from .detection_metrics import EvalConfig, evaluate_detections
from .errors import ParseError, ProtoEvalError, UndefinedMetricError, ValidationError
from .formatting import percent
from .image_metrics import EvalPolicy, evaluate_image_level
from .types import DatasetManifest, ImageRecord

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DISCREPANCY = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INPUT


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# convert
# ---------------------------------------------------------------------------

def _input_files(root: Path, suffix: str) -> list[Path]:
    if root.is_dir():
        return sorted(p for p in root.iterdir() if p.suffix == suffix and p.is_file())
    return [root]


def cmd_convert(args) -> int:
    root = Path(args.input)
    if not root.exists():
        return _fail(f"input path does not exist: {root}")
    suffix = ".xml" if args.format == "rect-xml" else ".txt"
    files = _input_files(root, suffix)
    if not files:
        print(f"warning: no {suffix} files under {root}, writing an empty manifest",
              file=sys.stderr)

    if args.format == "normalized":
        if not args.class_names:
            raise _UsageError("--class-names is required for --format normalized")
        if not args.image_size:
            raise _UsageError("--image-size is required for --format normalized")
        width, height = args.image_size

    errors: list[str] = []
    records: list[ImageRecord] = []

    if args.format == "rect-xml":
        texts: dict[Path, str] = {}
        class_names = list(args.class_names or [])
        for path in files:
            try:
                text = _read(str(path))
                texts[path] = text
                if not args.class_names:
                    for name in annotations.rect_label_class_names(text):
                        if name not in class_names:
                            class_names.append(name)
            except (ProtoEvalError, OSError) as exc:
                errors.append(f"{path}: {exc}")
        for path, text in texts.items():
            try:
                records.append(annotations.parse_rect_label_xml(
                    text, class_names, image_id=path.stem, source=args.source))
            except ProtoEvalError as exc:
                errors.append(f"{path}: {exc}")
    else:
        class_names = list(args.class_names)
        for path in files:
            try:
                objects = annotations.parse_normalized_labels(
                    _read(str(path)), width, height, class_names)
                records.append(ImageRecord(
                    image_id=path.stem, source=args.source, capture=None,
                    objects=objects, is_negative=not objects))
            except (ProtoEvalError, OSError) as exc:
                errors.append(f"{path}: {exc}")

    for line in errors:
        print(f"error: {line}", file=sys.stderr)
    if errors and not args.partial:
        print(f"error: {len(errors)} file(s) failed; nothing written "
              f"(use --partial to keep the rest)", file=sys.stderr)
        return EXIT_INPUT

    manifest = DatasetManifest(class_names=tuple(class_names), images=tuple(records))
    _write(args.out, annotations.serialize_manifest(manifest))
    n_objects = sum(len(r.objects) for r in manifest.images)
    print(f"wrote {args.out}: {len(manifest.images)} images, {n_objects} objects, "
          f"{len(class_names)} classes")
    return EXIT_OK


# ---------------------------------------------------------------------------
# split / account
# ---------------------------------------------------------------------------

def cmd_split(args) -> int:
    if abs(sum(args.ratios) - 1.0) > 1e-9:
        raise _UsageError(f"--ratios must sum to 1, got {sum(args.ratios)!r}")
    if any(r < 0 for r in args.ratios):
        raise _UsageError("--ratios must be non-negative")
    manifest = annotations.parse_manifest(_read(args.manifest))
    assignment = splits.generate_split(
        manifest, args.ratios, seed=args.seed,
        stratify=args.stratify, group_by_capture=args.group_by_capture)
    order = [record.image_id for record in manifest.images]
    _write(args.out, splits.format_split_file(assignment, order=order))
    sizes = {name: 0 for name in splits.SPLIT_NAMES}
    for name in assignment.assignments.values():
        sizes[name] += 1
    print(f"wrote {args.out}: " + ", ".join(f"{k}={v}" for k, v in sizes.items()))
    return EXIT_OK


def cmd_account(args) -> int:
    manifest = annotations.parse_manifest(_read(args.manifest))
    assignment = splits.parse_split_file(_read(args.split))
    accounting = splits.compute_accounting(manifest, assignment)
    _write(args.out, splits.accounting_csv(accounting))
    if manifest.images:
        fraction = splits.positive_fraction(manifest)
        print(f"wrote {args.out}: {accounting.totals.images} images, "
              f"positive fraction {percent(fraction, 1)}")
    else:
        print(f"wrote {args.out}: 0 images")
    if args.expected:
        declared = splits.parse_declared_counts(_read(args.expected))
        found = splits.validate_accounting(accounting, declared)
        for item in found:
            print(f"discrepancy: {item.message}")
        if found:
            print(f"{len(found)} discrepancy(ies) against {args.expected}")
            return EXIT_DISCREPANCY
        print(f"no discrepancies against {args.expected}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate / image-eval
# ---------------------------------------------------------------------------

def _parse_thresholds(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise _UsageError(f"bad --iou-thresholds value: {text!r}")


def _eval_config(args) -> EvalConfig:
    try:
        return EvalConfig(
            iou_thresholds=_parse_thresholds(args.iou_thresholds),
            confidence_threshold=args.confidence_threshold,
            interpolation={"all": "all_point", "eleven": "eleven_point"}[args.interpolation],
        )
    except ValidationError as exc:
        raise _UsageError(str(exc))


def cmd_evaluate(args) -> int:
    manifest = annotations.parse_manifest(_read(args.manifest))
    detection_sets = annotations.parse_detections(_read(args.detections))
    config = _eval_config(args)
    try:
        result = evaluate_detections(
            manifest, detection_sets, config, ignore_missing=args.ignore_missing)
    except UndefinedMetricError as exc:
        return _fail(str(exc))
    _write(args.out, reports.evaluation_report_csv(result.map_results, manifest.class_names))
    if args.pr_curves:
        _write(args.pr_curves, reports.pr_curve_csv(result.curves, manifest.class_names))
    label = Path(args.detections).stem
    table = reports.render_map_table(
        [label], [(r.iou_threshold, [r.map]) for r in result.map_results])
    print(table, end="")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_image_eval(args) -> int:
    manifest = annotations.parse_manifest(_read(args.manifest))
    detection_sets = annotations.parse_detections(_read(args.detections))
    config = EvalConfig(confidence_threshold=args.confidence_threshold)
    try:
        policy = EvalPolicy.parse(args.policy)
    except ValidationError as exc:
        raise _UsageError(str(exc))
    per_class = evaluate_image_level(
        manifest, detection_sets, config, policy, ignore_missing=args.ignore_missing)
    _write(args.out, reports.image_level_summary_csv(per_class, manifest.class_names))
    if args.per_image:
        _write(args.per_image, reports.per_image_csv(per_class, manifest.class_names))
    table = reports.render_confusion_table([
        (manifest.class_names[entry.class_id], entry.counts, entry.metrics)
        for entry in per_class
    ])
    print(table, end="")
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------

def cmd_ledger(args) -> int:
    rows = []
    for path in args.configs:
        config, run = training.parse_training_config(_read(path))
        rows.append(training.derive_ledger_row(config, run))
    _write(args.out, training.ledger_csv(rows))
    print(f"wrote {args.out}: {len(rows)} model(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="proto-eval",
                     description="Dataset bookkeeping and detection metrics "
                                 "for prototype image sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", parents=[], help="convert label files to a canonical manifest")
    p.add_argument("input", help="label file or directory")
    p.add_argument("--format", required=True, choices=["rect-xml", "normalized"])
    p.add_argument("--out", required=True, help="output manifest path")
    p.add_argument("--source", default="web",
                   choices=["capture_system", "web", "material_sample"])
    p.add_argument("--class-names", nargs="+", default=None)
    p.add_argument("--image-size", type=_size, default=None, metavar="WxH",
                   help="pixel size of the images behind normalized label files")
    p.add_argument("--partial", action="store_true",
                   help="skip unparseable files instead of failing the run")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("split", help="generate a seeded train/validation/test split")
    p.add_argument("manifest")
    p.add_argument("--ratios", nargs=3, type=float, required=True,
                   metavar=("TRAIN", "VAL", "TEST"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--group-by-capture", action="store_true")
    p.add_argument("--out", required=True, help="output split file (image_id<TAB>split)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("account", help="per-split counts, shares and audits")
    p.add_argument("manifest")
    p.add_argument("split")
    p.add_argument("--out", required=True, help="output accounting CSV")
    p.add_argument("--expected", default=None,
                   help="declared counts CSV to audit against (exit 2 on mismatch)")
    p.set_defaults(func=cmd_account)

    p = sub.add_parser("evaluate", help="AP/mAP at the configured IoU thresholds")
    p.add_argument("manifest")
    p.add_argument("detections")
    p.add_argument("--out", required=True, help="output report CSV")
    p.add_argument("--pr-curves", default=None, help="optional PR-curve CSV")
    p.add_argument("--iou-thresholds", default="0.5,0.75")
    p.add_argument("--confidence-threshold", type=float, default=0.5)
    p.add_argument("--interpolation", choices=["all", "eleven"], default="all")
    p.add_argument("--ignore-missing", action="store_true",
                   help="drop detections for unknown image ids instead of failing")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("image-eval", help="per-image existence-level confusion metrics")
    p.add_argument("manifest")
    p.add_argument("detections")
    p.add_argument("--out", required=True, help="output summary CSV")
    p.add_argument("--per-image", default=None, help="optional per-image CSV")
    p.add_argument("--policy", default="existence",
                   help="existence or localized:<iou>")
    p.add_argument("--confidence-threshold", type=float, default=0.5)
    p.add_argument("--ignore-missing", action="store_true")
    p.set_defaults(func=cmd_image_eval)

    p = sub.add_parser("ledger", help="step/epoch arithmetic from training configs")
    p.add_argument("configs", nargs="*", metavar="CONFIG")
    p.add_argument("--out", required=True, help="output ledger CSV")
    p.set_defaults(func=cmd_ledger)

    return parser


def _size(text: str) -> tuple[float, float]:
    try:
        w, h = text.lower().split("x")
        return float(w), float(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, OSError) as exc:
        return _fail(str(exc))


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
