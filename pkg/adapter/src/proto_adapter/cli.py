"""Adapter command line: ``adapter run`` and ``adapter validate``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backends import BackendError
from .config import ConfigError, load_config
from .formats import FormatError
from .run import run_inference, validate_output


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapter",
        description="Run a detector over an image directory and emit a "
                    "canonical detections file.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run inference over an image directory")
    p.add_argument("--config", required=True, help="adapter config JSON")
    p.add_argument("--images", required=True, help="image directory")
    p.add_argument("--out", required=True, help="output detections file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="audit a detections file against a manifest")
    p.add_argument("--detections", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def cmd_run(args) -> int:
    config = load_config(args.config)
    report = run_inference(config, args.images, args.out)
    print(f"wrote {report.out_path}: {report.image_count} images, "
          f"{report.detection_count} detections")
    if report.skipped:
        print(f"skipped {len(report.skipped)} undecodable file(s), "
              f"see {report.out_path}.skipped.txt", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    findings = validate_output(
        Path(args.detections).read_text(encoding="utf-8"),
        Path(args.manifest).read_text(encoding="utf-8"))
    for finding in findings:
        print(f"discrepancy: {finding.image_id}: {finding.message}")
    print(f"{len(findings)} discrepancy(ies)")
    return 2 if findings else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ConfigError, BackendError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
