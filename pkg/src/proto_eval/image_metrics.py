"""Per-image existence-level evaluation.

Each image is classified as a whole: did the class exist in it, and did
the detector fire? The object count and box sizes are deliberately
ignored; this answers "was the material/component present" rather than
"was it localized". A detection fires when its confidence is strictly
greater than the configured threshold. Under the ``localized`` policy a
firing detection must additionally overlap some ground-truth object of
the class at the given minimum IoU; images without any ground truth
have nothing to overlap, so there any confident detection still counts
as a false alarm under either policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .detection_metrics import EvalConfig, iou, resolve_detections
from .errors import ValidationError
from .types import DatasetManifest, DetectionSet, ImageRecord

OUTCOMES = ("true_positive", "false_positive", "true_negative", "false_negative")


@dataclass(frozen=True)
class EvalPolicy:
    """How a detection counts as a hit: mere existence, or localized."""

    kind: str
    min_iou: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("existence", "localized"):
            raise ValidationError(f"policy must be 'existence' or 'localized', got {self.kind!r}")
        if self.kind == "localized":
            if self.min_iou is None or not (0.0 < self.min_iou <= 1.0):
                raise ValidationError(f"localized policy needs min_iou in (0, 1], got {self.min_iou}")
        elif self.min_iou is not None:
            raise ValidationError("existence policy takes no min_iou")

    @classmethod
    def existence(cls) -> "EvalPolicy":
        return cls(kind="existence")

    @classmethod
    def localized(cls, min_iou: float) -> "EvalPolicy":
        return cls(kind="localized", min_iou=min_iou)

    @classmethod
    def parse(cls, text: str) -> "EvalPolicy":
        """Parse 'existence' or 'localized:<iou>' (the CLI flag syntax)."""
        if text == "existence":
            return cls.existence()
        if text.startswith("localized:"):
            try:
                return cls.localized(float(text.split(":", 1)[1]))
            except ValueError as exc:
                raise ValidationError(f"bad policy spec {text!r}") from exc
        raise ValidationError(f"bad policy spec {text!r} (use existence or localized:<iou>)")


@dataclass(frozen=True)
class ImageOutcome:
    image_id: str
    class_id: int
    outcome: str

    def __post_init__(self) -> None:
        if self.outcome not in OUTCOMES:
            raise ValidationError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ImageLevelMetrics:
    """Precision/recall/accuracy; a field is None when its denominator is 0."""

    precision: float | None
    recall: float | None
    accuracy: float | None


def classify_image(
    record: ImageRecord,
    detections: DetectionSet,
    config: EvalConfig,
    policy: EvalPolicy,
    class_id: int = 0,
) -> ImageOutcome:
    """Existence-level outcome of one image for one class."""
    if record.image_id != detections.image_id:
        raise ValidationError(
            f"detections are for image {detections.image_id!r}, record is {record.image_id!r}"
        )
    gt_boxes = [obj.box for obj in record.objects if obj.class_id == class_id]
    has_class = bool(gt_boxes)
    fired = False
    for det in detections.detections:
        if det.class_id != class_id or det.confidence <= config.confidence_threshold:
            continue
        if policy.kind == "localized" and has_class:
            if not any(iou(det.box, gt) >= policy.min_iou for gt in gt_boxes):
                continue
        fired = True
        break
    if fired:
        outcome = "true_positive" if has_class else "false_positive"
    else:
        outcome = "false_negative" if has_class else "true_negative"
    return ImageOutcome(image_id=record.image_id, class_id=class_id, outcome=outcome)


def aggregate(outcomes: Iterable[ImageOutcome]) -> ConfusionCounts:
    """Tally outcomes; each (image, class) pair may appear only once."""
    counts = dict.fromkeys(OUTCOMES, 0)
    seen: set[tuple[str, int]] = set()
    for outcome in outcomes:
        key = (outcome.image_id, outcome.class_id)
        if key in seen:
            raise ValidationError(f"duplicate outcome for image {outcome.image_id!r}")
        seen.add(key)
        counts[outcome.outcome] += 1
    return ConfusionCounts(
        tp=counts["true_positive"],
        fp=counts["false_positive"],
        tn=counts["true_negative"],
        fn=counts["false_negative"],
    )


def metrics(counts: ConfusionCounts) -> ImageLevelMetrics:
    """Precision, recall and accuracy from the confusion counts."""
    def ratio(num: int, denom: int) -> float | None:
        return num / denom if denom else None

    return ImageLevelMetrics(
        precision=ratio(counts.tp, counts.tp + counts.fp),
        recall=ratio(counts.tp, counts.tp + counts.fn),
        accuracy=ratio(counts.tp + counts.tn, counts.total),
    )


@dataclass(frozen=True)
class ImageDetailRow:
    """One per-image report line for one class."""

    image_id: str
    class_id: int
    outcome: str
    best_confidence: float | None  # highest confidence among this class's detections
    best_iou: float | None         # highest IoU between any detection and any ground truth


@dataclass(frozen=True)
class ClassImageEval:
    class_id: int
    rows: tuple[ImageDetailRow, ...]
    counts: ConfusionCounts
    metrics: ImageLevelMetrics


def evaluate_image_level(
    manifest: DatasetManifest,
    detection_sets: Iterable[DetectionSet],
    config: EvalConfig,
    policy: EvalPolicy,
    ignore_missing: bool = False,
) -> tuple[ClassImageEval, ...]:
    """Existence-level evaluation of a whole manifest, one binary pass per class."""
    by_image = resolve_detections(manifest, detection_sets, ignore_missing)
    results = []
    for class_id in range(len(manifest.class_names)):
        rows = []
        outcomes = []
        for record in manifest.images:
            ds = by_image.get(record.image_id, DetectionSet(record.image_id))
            outcome = classify_image(record, ds, config, policy, class_id)
            outcomes.append(outcome)
            class_dets = [d for d in ds.detections if d.class_id == class_id]
            gt_boxes = [obj.box for obj in record.objects if obj.class_id == class_id]
            best_conf = max((d.confidence for d in class_dets), default=None)
            ious = [iou(d.box, gt) for d in class_dets for gt in gt_boxes]
            rows.append(ImageDetailRow(
                image_id=record.image_id,
                class_id=class_id,
                outcome=outcome.outcome,
                best_confidence=best_conf,
                best_iou=max(ious, default=None),
            ))
        counts = aggregate(outcomes)
        results.append(ClassImageEval(
            class_id=class_id,
            rows=tuple(rows),
            counts=counts,
            metrics=metrics(counts),
        ))
    return tuple(results)
