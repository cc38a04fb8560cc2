#!/usr/bin/env python3
"""Regenerate the committed evaluation fixtures.

The manifest/detections inputs are a small seeded synthetic scene. The
expected report files are computed by the brute-force reference oracle
in tests/reference_oracle.py, NOT by the package, so the CLI tests that
diff against them are an independent end-to-end check.

Usage: python scripts/make_eval_fixtures.py
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import reference_oracle as oracle  # noqa: E402

from proto_eval.annotations import serialize_detections, serialize_manifest  # noqa: E402
from proto_eval.formatting import canonical_number  # noqa: E402
from proto_eval.types import (  # noqa: E402
    BoundingBox, DatasetManifest, Detection, DetectionSet, ImageRecord, LabeledObject,
)

N_CLASSES = 2
CLASS_NAMES = ("wood_sheet", "microcontroller")
CONFIDENCE_THRESHOLD = 0.5
IOU_THRESHOLDS = (0.5, 0.75)

TABLE3_COLUMNS = [
    ("Model A (Validation)", 0.684, 0.416),
    ("Model A (Test)", 0.521, 0.280),
    ("Model B (Validation)", 0.905, 0.704),
    ("Model B (Test)", 0.766, 0.399),
    ("Model C (Validation)", 0.741, 0.435),
    ("Model C (Test)", 0.649, 0.351),
    ("Model D (Validation)", 0.804, 0.603),
    ("Model D (Test)", 0.681, 0.369),
]


def build_scene(seed=20190320, n_images=10):
    """Mix of close hits (jittered ground-truth copies), duplicates and noise."""
    rng = random.Random(seed)

    def box():
        x0, x1 = sorted(rng.sample(range(0, 100, 4), 2))
        y0, y1 = sorted(rng.sample(range(0, 100, 4), 2))
        return (float(x0), float(y0), float(x1), float(y1))

    def jitter(b):
        dx, dy = rng.randint(-2, 2), rng.randint(-2, 2)
        return (max(0.0, b[0] + dx), max(0.0, b[1] + dy), b[2] + dx, b[3] + dy)

    scene = []
    for i in range(n_images):
        gts = [(rng.randrange(N_CLASSES), box()) for _ in range(rng.randint(0, 3))]
        dets = []
        for cls, gt_box in gts:
            if rng.random() < 0.8:
                dets.append((cls, jitter(gt_box), round(rng.uniform(0.4, 1.0), 2)))
            if rng.random() < 0.3:  # duplicate prediction on the same object
                dets.append((cls, jitter(gt_box), round(rng.uniform(0.2, 0.9), 2)))
        for _ in range(rng.randint(0, 2)):
            dets.append((rng.randrange(N_CLASSES), box(), round(rng.random(), 2)))
        rng.shuffle(dets)
        scene.append({"id": f"scene_{i:02d}", "gts": gts, "dets": dets})
    if not any(img["gts"] for img in scene):
        raise RuntimeError("seed produced no ground truth; pick another seed")
    return scene


def scene_inputs(scene):
    records, det_sets = [], []
    for image in scene:
        objects = tuple(LabeledObject(c, BoundingBox(*b)) for c, b in image["gts"])
        records.append(ImageRecord(
            image_id=image["id"], source="web", capture=None,
            objects=objects, is_negative=not objects))
        det_sets.append(DetectionSet(
            image_id=image["id"],
            detections=tuple(Detection(c, BoundingBox(*b), conf)
                             for c, b, conf in image["dets"])))
    return DatasetManifest(CLASS_NAMES, tuple(records)), det_sets


def expected_report_csv(scene):
    lines = ["class,iou_threshold,ap,n_gt,n_det,n_tp,n_fp"]
    for threshold in IOU_THRESHOLDS:
        map_value, per_class = oracle.evaluate(scene, threshold, "all_point", N_CLASSES)
        totals = [0, 0, 0, 0]
        for class_id in sorted(per_class):
            ap, n_gt, n_tp, n_fp = per_class[class_id]
            n_det = sum(1 for img in scene for c, _, _ in img["dets"] if c == class_id)
            lines.append(f"{CLASS_NAMES[class_id]},{canonical_number(threshold)},"
                         f"{ap:.3f},{n_gt},{n_det},{n_tp},{n_fp}")
            for k, v in enumerate((n_gt, n_det, n_tp, n_fp)):
                totals[k] += v
        lines.append(f"mAP,{canonical_number(threshold)},{map_value:.3f},"
                     + ",".join(str(v) for v in totals))
    return "\n".join(lines) + "\n"


def expected_image_summary_csv(scene):
    lines = ["class,tp,fp,tn,fn,precision,recall,accuracy"]
    for class_id in range(N_CLASSES):
        tp = fp = tn = fn = 0
        for image in scene:
            has_class = any(c == class_id for c, _ in image["gts"])
            fired = any(c == class_id and conf > CONFIDENCE_THRESHOLD
                        for c, _, conf in image["dets"])
            if fired and has_class:
                tp += 1
            elif fired:
                fp += 1
            elif has_class:
                fn += 1
            else:
                tn += 1
        precision = f"{tp / (tp + fp):.3f}" if tp + fp else ""
        recall = f"{tp / (tp + fn):.3f}" if tp + fn else ""
        accuracy = f"{(tp + tn) / (tp + fp + tn + fn):.3f}"
        lines.append(f"{CLASS_NAMES[class_id]},{tp},{fp},{tn},{fn},"
                     f"{precision},{recall},{accuracy}")
    return "\n".join(lines) + "\n"


def table3_fixture():
    values_csv = "column,map_at_0.5,map_at_0.75\n" + "".join(
        f"{label},{at_50:.3f},{at_75:.3f}\n" for label, at_50, at_75 in TABLE3_COLUMNS)
    return values_csv


def main():
    eval_dir = ROOT / "fixtures" / "eval_small"
    eval_dir.mkdir(parents=True, exist_ok=True)
    scene = build_scene()
    manifest, det_sets = scene_inputs(scene)
    (eval_dir / "manifest.json").write_text(serialize_manifest(manifest))
    (eval_dir / "detections.json").write_text(serialize_detections(det_sets))
    (eval_dir / "expected_report.csv").write_text(expected_report_csv(scene))
    (eval_dir / "expected_image_summary.csv").write_text(expected_image_summary_csv(scene))

    table_dir = ROOT / "fixtures" / "table3"
    table_dir.mkdir(parents=True, exist_ok=True)
    (table_dir / "map_values.csv").write_text(table3_fixture())

    for path in sorted((ROOT / "fixtures").rglob("*")):
        if path.is_file():
            print(f"wrote {path.relative_to(ROOT)}")


if __name__ == "__main__":
    main()
