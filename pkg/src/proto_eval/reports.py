"""Report writers: machine-readable CSV and the human table layouts.

Both carry the same numbers at the same rendered precision (mAP and
image-level metrics at 3 decimals), so diffs against published tables
are purely textual.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping, Sequence

from .detection_metrics import MapResult, PrecisionRecallCurve
from .formatting import canonical_number, metric
from .image_metrics import ClassImageEval, ConfusionCounts, ImageLevelMetrics


def evaluation_report_csv(map_results: Iterable[MapResult], class_names: Sequence[str]) -> str:
    """Per-class AP rows plus one mAP summary row per IoU threshold."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["class", "iou_threshold", "ap", "n_gt", "n_det", "n_tp", "n_fp"])
    for result in map_results:
        for ap in result.per_class:
            writer.writerow([
                class_names[ap.class_id],
                canonical_number(ap.iou_threshold),
                metric(ap.ap),
                ap.n_gt, ap.n_det, ap.n_tp, ap.n_fp,
            ])
        writer.writerow([
            "mAP",
            canonical_number(result.iou_threshold),
            metric(result.map),
            sum(a.n_gt for a in result.per_class),
            sum(a.n_det for a in result.per_class),
            sum(a.n_tp for a in result.per_class),
            sum(a.n_fp for a in result.per_class),
        ])
    return out.getvalue()


def pr_curve_csv(
    curves: Mapping[tuple[int, float], PrecisionRecallCurve],
    class_names: Sequence[str],
) -> str:
    """All PR curve points, one row per pooled detection."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["class", "iou_threshold", "confidence", "recall", "precision"])
    for (class_id, threshold), curve in sorted(curves.items()):
        for conf, rec, prec in zip(curve.confidences, curve.recalls, curve.precisions):
            writer.writerow([
                class_names[class_id],
                canonical_number(threshold),
                repr(conf), repr(rec), repr(prec),
            ])
    return out.getvalue()


def render_map_table(column_labels: Sequence[str], rows: Sequence[tuple[float, Sequence[float]]]) -> str:
    """mAP summary in the usual two-row layout: one line per IoU threshold,
    one column per dataset/model, values at 3 decimals."""
    header = ["Dataset"] + list(column_labels)
    body = []
    for threshold, values in rows:
        if len(values) != len(column_labels):
            raise ValueError("one value per column required")
        body.append([f"mAP @ {canonical_number(threshold)} IoU"] + [metric(v) for v in values])
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines = []
    for line in [header] + body:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    return "\n".join(lines) + "\n"


def image_level_summary_csv(
    per_class: Iterable[ClassImageEval],
    class_names: Sequence[str],
) -> str:
    """Confusion counts and metrics per class, 3-decimal rendering."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["class", "tp", "fp", "tn", "fn", "precision", "recall", "accuracy"])
    for entry in per_class:
        writer.writerow(
            [class_names[entry.class_id]]
            + list(confusion_row(entry.counts, entry.metrics))
        )
    return out.getvalue()


def confusion_row(counts: ConfusionCounts, values: ImageLevelMetrics) -> tuple[str, ...]:
    return (
        str(counts.tp), str(counts.fp), str(counts.tn), str(counts.fn),
        metric(values.precision), metric(values.recall), metric(values.accuracy),
    )


def render_confusion_table(rows: Sequence[tuple[str, ConfusionCounts, ImageLevelMetrics]]) -> str:
    """Per-image confusion summary in the published table layout:
    counts then precision/recall/accuracy, one line per model or class."""
    header = ["", "True Positives", "False Positives", "True Negatives",
              "False Negatives", "Precision", "Recall", "Accuracy"]
    body = [[label] + list(confusion_row(counts, values)) for label, counts, values in rows]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines = []
    for line in [header] + body:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    return "\n".join(lines) + "\n"


def per_image_csv(per_class: Iterable[ClassImageEval], class_names: Sequence[str]) -> str:
    """One row per (image, class): outcome, best confidence, best IoU."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["image_id", "class", "outcome", "best_confidence", "best_iou"])
    for entry in per_class:
        for row in entry.rows:
            writer.writerow([
                row.image_id,
                class_names[entry.class_id],
                row.outcome,
                "" if row.best_confidence is None else canonical_number(row.best_confidence),
                "" if row.best_iou is None else canonical_number(row.best_iou),
            ])
    return out.getvalue()
