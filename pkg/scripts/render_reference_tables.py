#!/usr/bin/env python3
"""Render the reference summary tables from the committed fixtures.

Prints the dataset distribution and positive/negative share tables (from
the declared accounting fixtures), the mAP table (from the recorded
values fixture) and the per-image confusion table (from the recorded
counts), all at their published precisions.

Usage: python scripts/render_reference_tables.py
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

from proto_eval.formatting import percent  # noqa: E402
from proto_eval.image_metrics import ConfusionCounts, metrics  # noqa: E402
from proto_eval.reports import render_confusion_table, render_map_table  # noqa: E402
from proto_eval.splits import (  # noqa: E402
    SPLIT_NAMES, SplitAccounting, SplitCounts, parse_declared_counts,
    validate_accounting,
)

CONFUSION_COUNTS = [
    ("Model A (wood sheets)", ConfusionCounts(72, 4, 168, 3)),
    ("Model B (wood sheets)", ConfusionCounts(90, 8, 141, 8)),
    ("Model C (microcontrollers)", ConfusionCounts(60, 5, 102, 28)),
    ("Model D (microcontrollers)", ConfusionCounts(72, 0, 101, 22)),
]


def accounting_from_declared(path: Path) -> SplitAccounting:
    declared = parse_declared_counts(path.read_text())
    rows = {}
    for split in SPLIT_NAMES:
        cells = declared.counts[split]
        rows[split] = SplitCounts(
            images=cells["images"], objects=cells["objects"],
            positives=cells["positives"], negatives=cells["negatives"])
    return SplitAccounting.from_counts(rows)


def print_distribution(label: str, acc: SplitAccounting) -> None:
    print(f"{label}:")
    header = ["", *[s.capitalize() for s in SPLIT_NAMES]]
    images = ["Total images"] + [
        f"{acc.rows[s].images} ({percent(acc.image_fraction(s), 1)})" for s in SPLIT_NAMES]
    objects = ["Labelled objects"] + [
        f"{acc.rows[s].objects} ({percent(acc.object_fraction(s), 1)})" for s in SPLIT_NAMES]
    positives = ["Positive images"] + [
        f"{acc.rows[s].positives} ({percent(acc.positive_fraction(s), 2)})" for s in SPLIT_NAMES]
    negatives = ["Negative images"] + [
        f"{acc.rows[s].negatives} ({percent(acc.negative_fraction(s), 2)})" for s in SPLIT_NAMES]
    table = [header, images, objects, positives, negatives]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  " + "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    share = acc.totals.positives / acc.totals.images
    print(f"  overall positive share: {percent(share, 1)}")
    print()


def main() -> int:
    for label, name in (("Wood-based sheet materials", "wood_declared.csv"),
                        ("Microcontrollers", "microcontroller_declared.csv")):
        path = FIXTURES / "accounting" / name
        print_distribution(label, accounting_from_declared(path))
        # shares above are recomputed from the split sums; audit them
        # against the declared totals
        audit = validate_accounting(None, parse_declared_counts(path.read_text()))
        for finding in audit:
            print(f"  audit: {finding.message}")
        if audit:
            print()

    rows = list(csv.DictReader(open(FIXTURES / "table3" / "map_values.csv")))
    print("Recorded mAP values:")
    print(render_map_table(
        [r["column"] for r in rows],
        [(0.5, [float(r["map_at_0.5"]) for r in rows]),
         (0.75, [float(r["map_at_0.75"]) for r in rows])]))

    print("Per-image confusion metrics:")
    print(render_confusion_table(
        [(label, c, metrics(c)) for label, c in CONFUSION_COUNTS]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
