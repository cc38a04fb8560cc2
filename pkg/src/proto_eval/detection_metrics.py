"""Geometric IoU, greedy matching and interpolated average precision.

Matching protocol
-----------------
Detections are matched per image and per class. Within an image they
are visited in descending confidence, ties broken by input position;
each detection is matched to the not-yet-matched same-class ground
truth with the highest IoU at or above the threshold (IoU ties broken
by ground-truth input position). Every further detection of an already
matched object becomes a false positive, so a detector that fires
several times on one object is penalized for the duplicates.

Curves pool the per-image flags in a canonical global order,
(-confidence, image_id, input position), which makes every pooled
result independent of the order images or detection files arrive in
and of any evaluation parallelism.

AP is the area under the interpolated precision envelope (the maximum
precision at any recall at or beyond each point), either integrated
over all recall increments or sampled at the eleven recalls i/10.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .types import BoundingBox, DatasetManifest, Detection, DetectionSet, LabeledObject

INTERPOLATIONS = ("all_point", "eleven_point")

THREADS_ENV_VAR = "PROTO_EVAL_THREADS"


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation knobs: IoU thresholds, confidence cut, AP interpolation.

    The confidence threshold applies to per-image existence checks only
    (strictly greater than); AP sweeps all detections regardless.
    """

    iou_thresholds: tuple[float, ...] = (0.5, 0.75)
    confidence_threshold: float = 0.5
    interpolation: str = "all_point"

    def __post_init__(self) -> None:
        thresholds = tuple(sorted(set(float(t) for t in self.iou_thresholds)))
        if not thresholds:
            raise ValidationError("at least one IoU threshold is required")
        for t in thresholds:
            if not (0.0 < t <= 1.0):
                raise ValidationError(f"IoU thresholds must be in (0, 1], got {t}")
        object.__setattr__(self, "iou_thresholds", thresholds)
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ValidationError(
                f"confidence_threshold must be in [0, 1], got {self.confidence_threshold}"
            )
        if self.interpolation not in INTERPOLATIONS:
            raise ValidationError(
                f"interpolation must be one of {INTERPOLATIONS}, got {self.interpolation!r}"
            )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the union is empty."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = iw * ih if (iw > 0 and ih > 0) else 0.0
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class DetectionMatch:
    """One visited detection: flag plus the ground truth it consumed."""

    detection_index: int           # position in the image's detection list
    confidence: float
    is_true_positive: bool
    matched_gt_index: int | None   # position in the image's object list


@dataclass(frozen=True)
class MatchResult:
    """Greedy matching outcome for one image and one class."""

    matches: tuple[DetectionMatch, ...]  # in visiting order
    gt_count: int
    unmatched_gt_count: int

    @property
    def true_positive_count(self) -> int:
        return sum(1 for m in self.matches if m.is_true_positive)


def match_detections(
    ground_truths: Sequence[LabeledObject],
    detections: Sequence[Detection],
    iou_threshold: float,
    class_id: int,
) -> MatchResult:
    """Match one image's detections of ``class_id`` against its ground truths."""
    gt_items = [(i, obj.box) for i, obj in enumerate(ground_truths) if obj.class_id == class_id]
    det_items = [(j, det) for j, det in enumerate(detections) if det.class_id == class_id]
    det_items.sort(key=lambda item: (-item[1].confidence, item[0]))

    taken: set[int] = set()
    matches = []
    for j, det in det_items:
        best_index = None
        best_iou = -1.0
        for i, gt_box in gt_items:
            if i in taken:
                continue
            value = iou(det.box, gt_box)
            if value >= iou_threshold and value > best_iou:
                best_index = i
                best_iou = value
        if best_index is not None:
            taken.add(best_index)
        matches.append(DetectionMatch(
            detection_index=j,
            confidence=det.confidence,
            is_true_positive=best_index is not None,
            matched_gt_index=best_index,
        ))
    return MatchResult(
        matches=tuple(matches),
        gt_count=len(gt_items),
        unmatched_gt_count=len(gt_items) - len(taken),
    )


@dataclass(frozen=True)
class PrecisionRecallCurve:
    """Prefix precision/recall along the pooled confidence sweep."""

    confidences: tuple[float, ...]
    recalls: tuple[float, ...]
    precisions: tuple[float, ...]
    total_gt: int


def precision_recall_curve(
    matches: Iterable[tuple[str, MatchResult]],
    total_gt: int,
) -> PrecisionRecallCurve:
    """Pool per-image match results into one curve.

    When ``total_gt`` is zero the curve is empty (recall has no
    denominator and AP is undefined downstream).
    """
    if total_gt < 0:
        raise ValidationError("total_gt must be non-negative")
    if total_gt == 0:
        return PrecisionRecallCurve((), (), (), 0)
    pooled = [
        (-m.confidence, image_id, m.detection_index, m.is_true_positive)
        for image_id, result in matches
        for m in result.matches
    ]
    pooled.sort()
    if not pooled:
        return PrecisionRecallCurve((), (), (), total_gt)
    flags = np.array([item[3] for item in pooled], dtype=np.int64)
    tp = np.cumsum(flags)
    ranks = np.arange(1, len(pooled) + 1, dtype=np.int64)
    return PrecisionRecallCurve(
        confidences=tuple(-item[0] for item in pooled),
        recalls=tuple((tp / total_gt).tolist()),
        precisions=tuple((tp / ranks).tolist()),
        total_gt=total_gt,
    )


def precision_envelope(curve: PrecisionRecallCurve) -> np.ndarray:
    """Monotone non-increasing envelope: max precision at recall >= each point."""
    precisions = np.asarray(curve.precisions, dtype=np.float64)
    if precisions.size == 0:
        return precisions
    return np.maximum.accumulate(precisions[::-1])[::-1]


def average_precision(curve: PrecisionRecallCurve, interpolation: str = "all_point") -> float:
    """Interpolated AP for one class at one IoU threshold."""
    if interpolation not in INTERPOLATIONS:
        raise ValidationError(f"interpolation must be one of {INTERPOLATIONS}")
    if curve.total_gt == 0:
        raise UndefinedMetricError("AP is undefined without ground-truth instances")
    recalls = np.asarray(curve.recalls, dtype=np.float64)
    if recalls.size == 0:
        return 0.0
    envelope = precision_envelope(curve)
    if interpolation == "eleven_point":
        grid = [i / 10 for i in range(11)]
        samples = []
        for r in grid:
            reachable = envelope[recalls >= r]
            samples.append(float(reachable[0]) if reachable.size else 0.0)
        return float(sum(samples) / 11)
    previous = np.concatenate(([0.0], recalls[:-1]))
    return float(np.sum((recalls - previous) * envelope))


@dataclass(frozen=True)
class ApResult:
    """Per-class AP at one IoU threshold, with the match tallies behind it."""

    class_id: int
    iou_threshold: float
    ap: float
    n_gt: int
    n_det: int
    n_tp: int
    n_fp: int


@dataclass(frozen=True)
class MapResult:
    """Mean AP over the classes that have ground truth, at one threshold."""

    iou_threshold: float
    map: float
    per_class: tuple[ApResult, ...]


@dataclass(frozen=True)
class EvaluationResult:
    """Everything one evaluation run produced, keyed for reporting."""

    map_results: tuple[MapResult, ...]
    curves: Mapping[tuple[int, float], PrecisionRecallCurve] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "curves", dict(self.curves))


def resolve_detections(
    manifest: DatasetManifest,
    detection_sets: Iterable[DetectionSet],
    ignore_missing: bool = False,
) -> dict[str, DetectionSet]:
    """Index detection sets by image id against a manifest.

    Unknown ids raise (or are dropped with ``ignore_missing``); manifest
    images without a detection set evaluate as having no detections.
    """
    by_image: dict[str, DetectionSet] = {}
    known = {record.image_id for record in manifest.images}
    missing = []
    for ds in detection_sets:
        if ds.image_id in by_image:
            raise ValidationError(f"duplicate detections for image {ds.image_id!r}")
        if ds.image_id not in known:
            missing.append(ds.image_id)
            continue
        for det in ds.detections:
            if det.class_id >= len(manifest.class_names):
                raise ValidationError(
                    f"image {ds.image_id!r}: detection class_id {det.class_id} out of "
                    f"range for {len(manifest.class_names)} classes"
                )
        by_image[ds.image_id] = ds
    if missing and not ignore_missing:
        raise ValidationError(f"detections reference unknown image ids: {sorted(missing)}")
    return by_image


def _thread_count(max_threads: int | None) -> int:
    if max_threads is not None:
        return max(1, max_threads)
    env = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def evaluate_detections(
    manifest: DatasetManifest,
    detection_sets: Iterable[DetectionSet],
    config: EvalConfig,
    ignore_missing: bool = False,
    max_threads: int | None = None,
) -> EvaluationResult:
    """Full evaluation: per-class AP and mAP at every configured threshold.

    Per-image matching may run on several threads (``max_threads``, or
    the PROTO_EVAL_THREADS environment variable); results are pooled in
    the canonical order so the output is identical for any schedule.
    mAP averages only over classes with at least one ground-truth
    instance. Negative images contribute only false positives.
    """
    by_image = resolve_detections(manifest, detection_sets, ignore_missing)
    n_classes = len(manifest.class_names)
    gt_totals = [0] * n_classes
    for record in manifest.images:
        for obj in record.objects:
            gt_totals[obj.class_id] += 1
    det_totals = [0] * n_classes
    for ds in by_image.values():
        for det in ds.detections:
            det_totals[det.class_id] += 1
    eligible = [c for c in range(n_classes) if gt_totals[c] > 0]
    if not eligible:
        raise UndefinedMetricError("mAP is undefined: no class has ground-truth instances")

    tasks = [
        (record.image_id, record.objects,
         by_image.get(record.image_id, DetectionSet(record.image_id)).detections)
        for record in manifest.images
    ]

    def match_one(task):
        image_id, objects, detections = task
        return image_id, {
            (c, t): match_detections(objects, detections, t, c)
            for c in eligible
            for t in config.iou_thresholds
        }

    threads = _thread_count(max_threads)
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            matched = list(pool.map(match_one, tasks))
    else:
        matched = [match_one(task) for task in tasks]
    matched.sort(key=lambda item: item[0])

    map_results = []
    curves: dict[tuple[int, float], PrecisionRecallCurve] = {}
    for threshold in config.iou_thresholds:
        per_class = []
        for c in eligible:
            pairs = [(image_id, results[(c, threshold)]) for image_id, results in matched]
            curve = precision_recall_curve(pairs, gt_totals[c])
            curves[(c, threshold)] = curve
            n_tp = sum(result.true_positive_count for _, result in pairs)
            n_det = det_totals[c]
            per_class.append(ApResult(
                class_id=c,
                iou_threshold=threshold,
                ap=average_precision(curve, config.interpolation),
                n_gt=gt_totals[c],
                n_det=n_det,
                n_tp=n_tp,
                n_fp=n_det - n_tp,
            ))
        map_results.append(MapResult(
            iou_threshold=threshold,
            map=sum(r.ap for r in per_class) / len(per_class),
            per_class=tuple(per_class),
        ))
    return EvaluationResult(map_results=tuple(map_results), curves=curves)


def mean_average_precision(
    manifest: DatasetManifest,
    detection_sets: Iterable[DetectionSet],
    config: EvalConfig,
) -> tuple[MapResult, ...]:
    """mAP per configured IoU threshold (see evaluate_detections)."""
    return evaluate_detections(manifest, detection_sets, config).map_results
