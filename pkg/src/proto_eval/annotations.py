"""Parsers and serializers for every annotation and detection format.

Three formats are supported:

* rectangle-label XML: one document per image, objects as corner
  rectangles with class names (the interchange format of common
  labelling tools);
* normalized label lines: ``class cx cy w h`` per line, all four
  geometry fields normalized to [0, 1];
* the canonical JSON manifest and detections documents, which are the
  only formats the rest of the toolkit reads.

Canonical JSON is deterministic: fixed key order, arrays in input
order, numbers with at most 6 fractional digits and trailing zeros
trimmed, 2-space indentation, trailing newline. Parsing a canonical
document and serializing it again is byte-identical.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from typing import Any, Iterable, Sequence

from .errors import ParseError, ValidationError
from .formatting import canonical_number
from .types import (
    BoundingBox,
    CaptureMetadata,
    DatasetManifest,
    Detection,
    DetectionSet,
    ImageRecord,
    LabeledObject,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# canonical JSON emitting / structural access
# ---------------------------------------------------------------------------

def _emit(value: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return canonical_number(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = [f'{inner}{json.dumps(k, ensure_ascii=False)}: {_emit(v, indent + 1)}' for k, v in value.items()]
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(value, list):
        if not value:
            return "[]"
        parts = [f"{inner}{_emit(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _emit_document(tree: Any) -> str:
    return _emit(tree, 0) + "\n"


def _load_json(text: str, what: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _as_dict(value: Any, path: str, allowed: Sequence[str], required: Sequence[str]) -> dict:
    if not isinstance(value, dict):
        raise ParseError(f"{path}: expected an object, got {type(value).__name__}")
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ParseError(f"{path}: unknown keys {unknown}")
    missing = [key for key in required if key not in value]
    if missing:
        raise ParseError(f"{path}: missing keys {missing}")
    return value


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ParseError(f"{path}: expected an array, got {type(value).__name__}")
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"{path}: expected a string, got {type(value).__name__}")
    return value


def _as_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ParseError(f"{path}: expected a boolean, got {type(value).__name__}")
    return value


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}: expected a number, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# canonical manifest
# ---------------------------------------------------------------------------

_BOX_KEYS = ("x_min", "y_min", "x_max", "y_max")
_CAPTURE_KEYS = ("capture_id", "view_index", "captured_at", "location", "author",
                 "image_width", "image_height")
_IMAGE_KEYS = ("image_id", "source", "capture", "objects", "is_negative")


def _box_tree(box: BoundingBox) -> dict:
    return {key: float(getattr(box, key)) for key in _BOX_KEYS}


def _parse_box(value: Any, path: str) -> BoundingBox:
    data = _as_dict(value, path, _BOX_KEYS, _BOX_KEYS)
    return BoundingBox(*(_as_float(data[key], f"{path}.{key}") for key in _BOX_KEYS))


def serialize_manifest(manifest: DatasetManifest) -> str:
    """Render a manifest as canonical JSON text."""
    images = []
    for record in manifest.images:
        tree: dict[str, Any] = {"image_id": record.image_id, "source": record.source}
        if record.capture is not None:
            cap = record.capture
            tree["capture"] = {
                "capture_id": cap.capture_id,
                "view_index": cap.view_index,
                "captured_at": cap.captured_at,
                "location": cap.location,
                "author": cap.author,
                "image_width": cap.image_width,
                "image_height": cap.image_height,
            }
        tree["objects"] = [
            {"class_id": obj.class_id, "box": _box_tree(obj.box)} for obj in record.objects
        ]
        tree["is_negative"] = record.is_negative
        images.append(tree)
    return _emit_document({"class_names": list(manifest.class_names), "images": images})


def parse_manifest(text: str) -> DatasetManifest:
    """Parse canonical manifest JSON; raises ParseError / ValidationError."""
    data = _as_dict(_load_json(text, "manifest"), "manifest",
                    ("class_names", "images"), ("class_names", "images"))
    class_names = tuple(
        _as_str(name, f"class_names[{i}]")
        for i, name in enumerate(_as_list(data["class_names"], "class_names"))
    )
    records = []
    for i, item in enumerate(_as_list(data["images"], "images")):
        path = f"images[{i}]"
        image = _as_dict(item, path, _IMAGE_KEYS,
                         ("image_id", "source", "objects", "is_negative"))
        capture = None
        if "capture" in image:
            cpath = f"{path}.capture"
            cap = _as_dict(image["capture"], cpath, _CAPTURE_KEYS, _CAPTURE_KEYS)
            capture = CaptureMetadata(
                capture_id=_as_str(cap["capture_id"], f"{cpath}.capture_id"),
                view_index=_as_int(cap["view_index"], f"{cpath}.view_index"),
                captured_at=_as_str(cap["captured_at"], f"{cpath}.captured_at"),
                location=_as_str(cap["location"], f"{cpath}.location"),
                author=_as_str(cap["author"], f"{cpath}.author"),
                image_width=_as_int(cap["image_width"], f"{cpath}.image_width"),
                image_height=_as_int(cap["image_height"], f"{cpath}.image_height"),
            )
        objects = []
        for j, entry in enumerate(_as_list(image["objects"], f"{path}.objects")):
            opath = f"{path}.objects[{j}]"
            obj = _as_dict(entry, opath, ("class_id", "box"), ("class_id", "box"))
            objects.append(LabeledObject(
                class_id=_as_int(obj["class_id"], f"{opath}.class_id"),
                box=_parse_box(obj["box"], f"{opath}.box"),
            ))
        records.append(ImageRecord(
            image_id=_as_str(image["image_id"], f"{path}.image_id"),
            source=_as_str(image["source"], f"{path}.source"),
            capture=capture,
            objects=tuple(objects),
            is_negative=_as_bool(image["is_negative"], f"{path}.is_negative"),
        ))
    return DatasetManifest(class_names=class_names, images=tuple(records))


# ---------------------------------------------------------------------------
# canonical detections
# ---------------------------------------------------------------------------

def serialize_detections(detection_sets: Iterable[DetectionSet]) -> str:
    """Render detection sets as canonical JSON text."""
    tree = []
    for ds in detection_sets:
        tree.append({
            "image_id": ds.image_id,
            "detections": [
                {
                    "class_id": det.class_id,
                    "box": _box_tree(det.box),
                    "confidence": float(det.confidence),
                }
                for det in ds.detections
            ],
        })
    return _emit_document(tree)


def parse_detections(text: str) -> tuple[DetectionSet, ...]:
    """Parse canonical detections JSON; one DetectionSet per image."""
    data = _as_list(_load_json(text, "detections"), "detections")
    sets = []
    seen: set[str] = set()
    for i, item in enumerate(data):
        path = f"[{i}]"
        entry = _as_dict(item, path, ("image_id", "detections"), ("image_id", "detections"))
        image_id = _as_str(entry["image_id"], f"{path}.image_id")
        if image_id in seen:
            raise ValidationError(f"duplicate image_id {image_id!r} in detections")
        seen.add(image_id)
        detections = []
        for j, det in enumerate(_as_list(entry["detections"], f"{path}.detections")):
            dpath = f"{path}.detections[{j}]"
            fields = _as_dict(det, dpath, ("class_id", "box", "confidence"),
                              ("class_id", "box", "confidence"))
            detections.append(Detection(
                class_id=_as_int(fields["class_id"], f"{dpath}.class_id"),
                box=_parse_box(fields["box"], f"{dpath}.box"),
                confidence=_as_float(fields["confidence"], f"{dpath}.confidence"),
            ))
        sets.append(DetectionSet(image_id=image_id, detections=tuple(detections)))
    return tuple(sets)


# ---------------------------------------------------------------------------
# rectangle-label XML
# ---------------------------------------------------------------------------

def _xml_text(node: ET.Element | None, field: str) -> str:
    if node is None or node.text is None or not node.text.strip():
        raise ParseError(f"missing <{field}> element")
    return node.text.strip()


def _xml_number(parent: ET.Element, field: str) -> float:
    text = _xml_text(parent.find(field), field)
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"<{field}> is not a number: {text!r}") from exc


def rect_label_class_names(text: str) -> tuple[str, ...]:
    """Class names appearing in a rectangle-label document, in order, deduplicated."""
    root = _parse_xml(text)
    names = []
    for obj in root.iter("object"):
        name = _xml_text(obj.find("name"), "name")
        if name not in names:
            names.append(name)
    return tuple(names)


def _parse_xml(text: str) -> ET.Element:
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise ParseError(f"line {line}, column {column}: malformed XML ({exc.msg})") from exc


def parse_rect_label_xml(
    text: str,
    class_names: Sequence[str],
    image_id: str | None = None,
    source: str = "web",
) -> ImageRecord:
    """Parse one rectangle-label XML document into an ImageRecord.

    ``class_names`` is the manifest class list used to resolve names to
    indices; unknown names raise ValidationError rather than being
    dropped. ``image_id`` defaults to the stem of the document's
    ``<filename>``.
    """
    root = _parse_xml(text)
    size = root.find("size")
    if size is None:
        raise ParseError("missing <size> element")
    width = _xml_number(size, "width")
    height = _xml_number(size, "height")
    if width <= 0 or height <= 0:
        raise ValidationError(f"image size must be positive, got {width}x{height}")

    if image_id is None:
        filename = root.find("filename")
        if filename is None or not (filename.text or "").strip():
            raise ParseError("no image_id given and no <filename> element present")
        stem = filename.text.strip()
        image_id = stem.rsplit(".", 1)[0] if "." in stem else stem

    index = {name: i for i, name in enumerate(class_names)}
    objects = []
    unknown = []
    for obj in root.iter("object"):
        name = _xml_text(obj.find("name"), "name")
        if name not in index:
            if name not in unknown:
                unknown.append(name)
            continue
        bndbox = obj.find("bndbox")
        if bndbox is None:
            raise ParseError(f"object {name!r}: missing <bndbox> element")
        box = BoundingBox(
            x_min=_xml_number(bndbox, "xmin"),
            y_min=_xml_number(bndbox, "ymin"),
            x_max=_xml_number(bndbox, "xmax"),
            y_max=_xml_number(bndbox, "ymax"),
        )
        objects.append(LabeledObject(class_id=index[name], box=box))
    if unknown:
        raise ValidationError(f"unknown class names: {unknown} (known: {list(class_names)})")
    return ImageRecord(
        image_id=image_id,
        source=source,
        capture=None,
        objects=tuple(objects),
        is_negative=not objects,
    )


# ---------------------------------------------------------------------------
# normalized label lines
# ---------------------------------------------------------------------------

def parse_normalized_labels(
    text: str,
    image_width: float,
    image_height: float,
    class_names: Sequence[str],
) -> tuple[LabeledObject, ...]:
    """Parse ``class cx cy w h`` lines (all geometry normalized to [0, 1]).

    Centers and sizes are converted to pixel corner coordinates; corners
    that overshoot the image (common with hand-labelled data) are
    clamped to [0, W] x [0, H] with a warning.
    """
    if image_width <= 0 or image_height <= 0:
        raise ValidationError(f"image size must be positive, got {image_width}x{image_height}")
    objects = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            class_id = int(parts[0])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: class index is not an integer: {parts[0]!r}") from exc
        if not (0 <= class_id < len(class_names)):
            raise ValidationError(
                f"line {lineno}: class index {class_id} out of range for "
                f"{len(class_names)} classes"
            )
        try:
            cx, cy, w, h = (float(part) for part in parts[1:])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric field: {exc}") from exc
        for name, value in (("cx", cx), ("cy", cy), ("w", w), ("h", h)):
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"line {lineno}: {name}={value} outside [0, 1]")
        x_min = (cx - w / 2) * image_width
        y_min = (cy - h / 2) * image_height
        x_max = (cx + w / 2) * image_width
        y_max = (cy + h / 2) * image_height
        clamped = (
            max(0.0, min(x_min, image_width)),
            max(0.0, min(y_min, image_height)),
            max(0.0, min(x_max, image_width)),
            max(0.0, min(y_max, image_height)),
        )
        if clamped != (x_min, y_min, x_max, y_max):
            logger.warning(
                "line %d: box (%g, %g, %g, %g) overshoots the %gx%g frame, clamped",
                lineno, x_min, y_min, x_max, y_max, image_width, image_height,
            )
        try:
            objects.append(LabeledObject(class_id=class_id, box=BoundingBox(*clamped)))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
    return tuple(objects)


def format_normalized_labels(
    objects: Iterable[LabeledObject],
    image_width: float,
    image_height: float,
) -> str:
    """Inverse of parse_normalized_labels, at full float precision."""
    lines = []
    for obj in objects:
        box = obj.box
        cx = (box.x_min + box.x_max) / (2 * image_width)
        cy = (box.y_min + box.y_max) / (2 * image_height)
        w = (box.x_max - box.x_min) / image_width
        h = (box.y_max - box.y_min) / image_height
        lines.append(f"{obj.class_id} {cx!r} {cy!r} {w!r} {h!r}")
    return "".join(line + "\n" for line in lines)
