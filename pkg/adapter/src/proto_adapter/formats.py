"""Reading and writing the toolkit's wire formats.

The adapter talks to the evaluation toolkit only through its documented
file formats: it reads canonical manifests and writes canonical
detections (JSON, fixed key order, numbers with at most 6 fractional
digits and trailing zeros trimmed, 2-space indent, trailing newline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable


class FormatError(Exception):
    """A wire-format document could not be read."""


def canonical_number(value: float | int) -> str:
    if isinstance(value, int):
        return str(value)
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


@dataclass(frozen=True)
class RawDetection:
    class_id: int
    box: tuple[float, float, float, float]  # pixel corners x0, y0, x1, y1
    confidence: float


@dataclass(frozen=True)
class ManifestImage:
    image_id: str
    class_ids: tuple[int, ...]                              # ground-truth classes
    boxes: tuple[tuple[float, float, float, float], ...]    # ground-truth boxes
    frame: tuple[int, int] | None                           # capture width/height


@dataclass(frozen=True)
class ManifestView:
    """The slice of a manifest the adapter needs."""

    class_names: tuple[str, ...]
    images: dict[str, ManifestImage]


def read_manifest(text: str) -> ManifestView:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest: {exc}") from exc
    if not isinstance(data, dict) or "images" not in data or "class_names" not in data:
        raise FormatError("manifest: expected class_names and images")
    images: dict[str, ManifestImage] = {}
    for entry in data["images"]:
        boxes = []
        class_ids = []
        for obj in entry.get("objects", ()):
            box = obj["box"]
            boxes.append((float(box["x_min"]), float(box["y_min"]),
                          float(box["x_max"]), float(box["y_max"])))
            class_ids.append(int(obj["class_id"]))
        frame = None
        capture = entry.get("capture")
        if capture is not None:
            frame = (int(capture["image_width"]), int(capture["image_height"]))
        image_id = str(entry["image_id"])
        images[image_id] = ManifestImage(
            image_id=image_id, class_ids=tuple(class_ids),
            boxes=tuple(boxes), frame=frame)
    return ManifestView(class_names=tuple(data["class_names"]), images=images)


def _emit(value: Any, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return canonical_number(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = [f"{inner}{json.dumps(k)}: {_emit(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(value, list):
        if not value:
            return "[]"
        parts = [f"{inner}{_emit(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def detections_document(per_image: Iterable[tuple[str, list[RawDetection]]]) -> str:
    """Canonical detections text for (image_id, detections) pairs."""
    tree = [
        {
            "image_id": image_id,
            "detections": [
                {
                    "class_id": det.class_id,
                    "box": {
                        "x_min": float(det.box[0]),
                        "y_min": float(det.box[1]),
                        "x_max": float(det.box[2]),
                        "y_max": float(det.box[3]),
                    },
                    "confidence": float(det.confidence),
                }
                for det in detections
            ],
        }
        for image_id, detections in per_image
    ]
    return _emit(tree, 0) + "\n"


def read_detections_lenient(text: str) -> list[dict[str, Any]]:
    """Parse a detections document without range validation, for auditing.

    Returns [{image_id, detections: [{class_id, box: (x0,y0,x1,y1),
    confidence}]}]; structural problems raise FormatError, value
    problems are left for the validator to report as discrepancies.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"detections: {exc}") from exc
    if not isinstance(data, list):
        raise FormatError("detections: expected a top-level array")
    out = []
    for entry in data:
        if not isinstance(entry, dict) or "image_id" not in entry:
            raise FormatError("detections: entry without image_id")
        detections = []
        for det in entry.get("detections", ()):
            box = det.get("box", {})
            detections.append({
                "class_id": det.get("class_id"),
                "box": (float(box.get("x_min", 0)), float(box.get("y_min", 0)),
                        float(box.get("x_max", 0)), float(box.get("y_max", 0))),
                "confidence": float(det.get("confidence", 0)),
            })
        out.append({"image_id": str(entry["image_id"]), "detections": detections})
    return out
