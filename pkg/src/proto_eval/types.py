"""Core domain types for annotations, detections and dataset manifests.

All types are immutable value objects validated at construction time, so
anything downstream (matching, accounting, reporting) can assume its inputs
are well formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

from .errors import ValidationError

IMAGE_SOURCES = ("capture_system", "web", "material_sample")

# The multi-view rig photographs each prototype from seven fixed angles.
VIEW_INDEX_MIN = 1
VIEW_INDEX_MAX = 7


def _check_rfc3339(text: str) -> None:
    # Python 3.10's fromisoformat does not accept a trailing 'Z'.
    candidate = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        datetime.fromisoformat(candidate)
    except ValueError as exc:
        raise ValidationError(f"captured_at is not an RFC-3339 timestamp: {text!r}") from exc


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates, origin top-left.

    Coordinates are continuous; a zero-area box (x_min == x_max or
    y_min == y_max) is a legal value but is rejected wherever a box is
    used as ground truth.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"box {name} must be a number, got {value!r}")
            value = float(value)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"box {name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValidationError(
                f"box corners are reversed: ({self.x_min}, {self.y_min})"
                f"-({self.x_max}, {self.y_max})"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class LabeledObject:
    """A ground-truth object: class index plus its bounding box."""

    class_id: int
    box: BoundingBox

    def __post_init__(self) -> None:
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool) or self.class_id < 0:
            raise ValidationError(f"class_id must be a non-negative integer, got {self.class_id!r}")
        if self.box.area <= 0:
            raise ValidationError(f"ground-truth box must have positive area: {self.box.as_tuple()}")


@dataclass(frozen=True)
class Detection:
    """A detector output: class index, box and a confidence in [0, 1]."""

    class_id: int
    box: BoundingBox
    confidence: float

    def __post_init__(self) -> None:
        if not isinstance(self.class_id, int) or isinstance(self.class_id, bool) or self.class_id < 0:
            raise ValidationError(f"class_id must be a non-negative integer, got {self.class_id!r}")
        conf = self.confidence
        if isinstance(conf, bool) or not isinstance(conf, (int, float)):
            raise ValidationError(f"confidence must be a number, got {conf!r}")
        conf = float(conf)
        if not (0.0 <= conf <= 1.0):
            raise ValidationError(f"confidence must be in [0, 1], got {conf}")
        object.__setattr__(self, "confidence", conf)


@dataclass(frozen=True)
class CaptureMetadata:
    """Provenance of one frame from the multi-view capture rig."""

    capture_id: str
    view_index: int
    captured_at: str  # RFC-3339 text, kept verbatim
    location: str
    author: str
    image_width: int
    image_height: int

    def __post_init__(self) -> None:
        if not (VIEW_INDEX_MIN <= self.view_index <= VIEW_INDEX_MAX):
            raise ValidationError(
                f"view_index must be in [{VIEW_INDEX_MIN}, {VIEW_INDEX_MAX}], got {self.view_index}"
            )
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValidationError(
                f"image dimensions must be positive, got {self.image_width}x{self.image_height}"
            )
        _check_rfc3339(self.captured_at)


@dataclass(frozen=True)
class ImageRecord:
    """One image: identity, provenance, ground-truth objects, polarity.

    ``is_negative`` is redundant with ``objects`` being empty and the two
    must always agree; the flag is kept explicit so serialized manifests
    state the polarity of each image outright.
    """

    image_id: str
    source: str
    capture: CaptureMetadata | None
    objects: tuple[LabeledObject, ...]
    is_negative: bool

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")
        if self.source not in IMAGE_SOURCES:
            raise ValidationError(
                f"source must be one of {IMAGE_SOURCES}, got {self.source!r}"
            )
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.is_negative != (len(self.objects) == 0):
            raise ValidationError(
                f"image {self.image_id!r}: is_negative={self.is_negative} but it has "
                f"{len(self.objects)} objects"
            )


@dataclass(frozen=True)
class DatasetManifest:
    """An ordered class list plus the image records that reference it."""

    class_names: tuple[str, ...]
    images: tuple[ImageRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "images", tuple(self.images))
        if len(set(self.class_names)) != len(self.class_names):
            raise ValidationError("class_names must be unique")
        if any(not name for name in self.class_names):
            raise ValidationError("class_names must be non-empty strings")
        has_objects = any(record.objects for record in self.images)
        if has_objects and not self.class_names:
            raise ValidationError("class_names must be non-empty when any image has objects")
        seen: set[str] = set()
        for record in self.images:
            if record.image_id in seen:
                raise ValidationError(f"duplicate image_id {record.image_id!r}")
            seen.add(record.image_id)
            for obj in record.objects:
                if obj.class_id >= len(self.class_names):
                    raise ValidationError(
                        f"image {record.image_id!r}: class_id {obj.class_id} out of range "
                        f"for {len(self.class_names)} classes"
                    )

    def image_by_id(self) -> dict[str, ImageRecord]:
        return {record.image_id: record for record in self.images}


@dataclass(frozen=True)
class DetectionSet:
    """All detector outputs for one image."""

    image_id: str
    detections: tuple[Detection, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")
        object.__setattr__(self, "detections", tuple(self.detections))
