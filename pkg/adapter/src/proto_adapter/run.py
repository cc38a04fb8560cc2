"""Batch inference over an image directory and output auditing."""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .backends import build_backend
from .config import AdapterConfig
from .formats import detections_document, read_detections_lenient, read_manifest

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class RunReport:
    out_path: str
    image_count: int
    detection_count: int
    skipped: tuple[str, ...]  # undecodable files


def run_inference(config: AdapterConfig, images_dir: str | Path, out_path: str | Path) -> RunReport:
    """Run the configured backend over every image in a directory.

    One detections entry per decodable image (the file stem is the image
    id), detections kept only when confidence strictly exceeds the
    threshold. Undecodable files are skipped with a warning and listed
    in a ``<out>.skipped.txt`` sidecar. The output file appears
    atomically.
    """
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise FileNotFoundError(f"image directory not found: {images_dir}")
    backend = build_backend(config)
    threshold = config.threshold

    per_image = []
    skipped = []
    detection_count = 0
    files = sorted(p for p in images_dir.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())
    for path in files:
        try:
            with Image.open(path) as image:
                image.load()
                raw = backend.detect(path.stem, image)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping undecodable image %s: %s", path.name, exc)
            skipped.append(path.name)
            continue
        kept = [det for det in raw if det.confidence > threshold]
        detection_count += len(kept)
        per_image.append((path.stem, kept))

    out_path = Path(out_path)
    document = detections_document(per_image)
    fd, tmp_name = tempfile.mkstemp(dir=out_path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(document)
        os.replace(tmp_name, out_path)
    except BaseException:
        os.unlink(tmp_name)
        raise
    if skipped:
        sidecar = out_path.with_name(out_path.name + ".skipped.txt")
        sidecar.write_text("".join(f"{name}\n" for name in skipped), encoding="utf-8")
    return RunReport(
        out_path=str(out_path),
        image_count=len(per_image),
        detection_count=detection_count,
        skipped=tuple(skipped),
    )


@dataclass(frozen=True)
class Discrepancy:
    image_id: str
    message: str


def validate_output(detections_text: str, manifest_text: str) -> list[Discrepancy]:
    """Audit a detections file against its manifest.

    Reports unknown image ids, confidences outside [0, 1], reversed
    boxes, and boxes exceeding the capture frame where the manifest
    records one. Findings are returned as data, never raised.
    """
    manifest = read_manifest(manifest_text)
    findings = []
    for entry in read_detections_lenient(detections_text):
        image_id = entry["image_id"]
        known = manifest.images.get(image_id)
        if known is None:
            findings.append(Discrepancy(image_id, f"unknown image id {image_id!r}"))
            continue
        for i, det in enumerate(entry["detections"]):
            conf = det["confidence"]
            if not (0.0 <= conf <= 1.0):
                findings.append(Discrepancy(
                    image_id, f"detection {i}: confidence {conf} outside [0, 1]"))
            x0, y0, x1, y1 = det["box"]
            if x0 > x1 or y0 > y1:
                findings.append(Discrepancy(
                    image_id, f"detection {i}: reversed box ({x0}, {y0}, {x1}, {y1})"))
            elif known.frame is not None:
                width, height = known.frame
                if x0 < 0 or y0 < 0 or x1 > width or y1 > height:
                    findings.append(Discrepancy(
                        image_id,
                        f"detection {i}: box ({x0}, {y0}, {x1}, {y1}) exceeds "
                        f"the {width}x{height} frame"))
    return findings
