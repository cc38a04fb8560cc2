"""Train/validation/test split bookkeeping: generation, accounting, audit.

Accounting mirrors the usual two summary tables for a detection dataset:
per-split image and labelled-object counts with their share of the
dataset total, and per-split positive/negative image counts with their
share of that split. The audit side compares an accounting against
externally declared counts and reports every mismatch as data instead
of failing, including internal inconsistencies of the declared numbers
themselves (split sums that do not reach the declared total).
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import UndefinedMetricError, ValidationError
from .formatting import percent
from .types import DatasetManifest

SPLIT_NAMES = ("training", "validation", "test")

ACCOUNTING_COLUMNS = (
    "split", "images", "pct_images", "objects", "pct_objects",
    "positives", "pct_positives", "negatives", "pct_negatives",
)


@dataclass(frozen=True)
class SplitCounts:
    """Raw counts for one split (or for the whole dataset)."""

    images: int
    objects: int
    positives: int
    negatives: int

    def __post_init__(self) -> None:
        for name in ("images", "objects", "positives", "negatives"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be non-negative")
        if self.positives + self.negatives != self.images:
            raise ValidationError(
                f"positives ({self.positives}) + negatives ({self.negatives}) "
                f"!= images ({self.images})"
            )


@dataclass(frozen=True)
class SplitAssignment:
    """Mapping image_id -> split name, covering a manifest exactly."""

    assignments: Mapping[str, str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", dict(self.assignments))
        for image_id, split in self.assignments.items():
            if split not in SPLIT_NAMES:
                raise ValidationError(f"image {image_id!r}: unknown split {split!r}")

    def split_of(self, image_id: str) -> str:
        return self.assignments[image_id]


@dataclass(frozen=True)
class SplitAccounting:
    """Counts per split plus totals. Percentages are computed on demand
    at full precision; display precision is a rendering concern."""

    rows: Mapping[str, SplitCounts]
    totals: SplitCounts

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", dict(self.rows))

    @classmethod
    def from_counts(cls, rows: Mapping[str, SplitCounts]) -> "SplitAccounting":
        totals = SplitCounts(
            images=sum(c.images for c in rows.values()),
            objects=sum(c.objects for c in rows.values()),
            positives=sum(c.positives for c in rows.values()),
            negatives=sum(c.negatives for c in rows.values()),
        )
        return cls(rows=rows, totals=totals)

    def image_fraction(self, split: str) -> float | None:
        return self.rows[split].images / self.totals.images if self.totals.images else None

    def object_fraction(self, split: str) -> float | None:
        return self.rows[split].objects / self.totals.objects if self.totals.objects else None

    def positive_fraction(self, split: str) -> float | None:
        counts = self.rows[split]
        return counts.positives / counts.images if counts.images else None

    def negative_fraction(self, split: str) -> float | None:
        counts = self.rows[split]
        return counts.negatives / counts.images if counts.images else None


def compute_accounting(manifest: DatasetManifest, split: SplitAssignment) -> SplitAccounting:
    """Count images/objects/positives/negatives per split by enumeration.

    The split must cover exactly the manifest's image ids.
    """
    by_id = manifest.image_by_id()
    unknown = sorted(set(split.assignments) - set(by_id))
    if unknown:
        raise ValidationError(f"split references unknown image ids: {unknown[:5]}")
    missing = sorted(set(by_id) - set(split.assignments))
    if missing:
        raise ValidationError(f"images missing from split: {missing[:5]}")

    tallies = {name: [0, 0, 0, 0] for name in SPLIT_NAMES}  # images, objects, pos, neg
    for record in manifest.images:
        tally = tallies[split.split_of(record.image_id)]
        tally[0] += 1
        tally[1] += len(record.objects)
        if record.objects:
            tally[2] += 1
        else:
            tally[3] += 1
    rows = {
        name: SplitCounts(images=t[0], objects=t[1], positives=t[2], negatives=t[3])
        for name, t in tallies.items()
    }
    return SplitAccounting.from_counts(rows)


def positive_fraction(manifest: DatasetManifest) -> float:
    """Share of images containing at least one object."""
    if not manifest.images:
        raise UndefinedMetricError("positive fraction is undefined for an empty manifest")
    positives = sum(1 for record in manifest.images if record.objects)
    return positives / len(manifest.images)


# ---------------------------------------------------------------------------
# split generation
# ---------------------------------------------------------------------------

def allocate_sizes(n: int, ratios: Sequence[float]) -> tuple[int, ...]:
    """Split n into integer sizes proportional to ratios, largest-remainder
    correction so the sizes sum to n exactly."""
    if any(r < 0 for r in ratios):
        raise ValidationError(f"ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)!r}")
    quotas = [r * n for r in ratios]
    sizes = [math.floor(q) for q in quotas]
    leftover = n - sum(sizes)
    by_remainder = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in by_remainder[:leftover]:
        sizes[i] += 1
    return tuple(sizes)


def generate_split(
    manifest: DatasetManifest,
    ratios: Sequence[float],
    seed: int,
    stratify: bool = False,
    group_by_capture: bool = False,
) -> SplitAssignment:
    """Deterministic seeded split into training/validation/test.

    With ``stratify``, positive and negative images are allocated by the
    ratios independently, keeping each split's positive share close to
    the manifest's. With ``group_by_capture``, all views of one capture
    land in the same split (prevents leakage between splits); sizes then
    track the ratios only as closely as whole groups allow.
    """
    if len(ratios) != len(SPLIT_NAMES):
        raise ValidationError(f"expected {len(SPLIT_NAMES)} ratios, got {len(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)!r}")
    if len(manifest.images) < len(SPLIT_NAMES) and all(r > 0 for r in ratios):
        raise ValidationError(
            f"cannot split {len(manifest.images)} images three ways with non-zero ratios"
        )
    rng = random.Random(seed)
    assignments: dict[str, str] = {}

    if group_by_capture:
        groups: dict[str, list[str]] = {}
        for record in manifest.images:
            key = record.capture.capture_id if record.capture else f"__solo__{record.image_id}"
            groups.setdefault(key, []).append(record.image_id)
        keys = sorted(groups)
        rng.shuffle(keys)
        deficits = list(allocate_sizes(len(manifest.images), ratios))
        for key in keys:
            target = max(range(len(SPLIT_NAMES)), key=lambda i: deficits[i])
            for image_id in groups[key]:
                assignments[image_id] = SPLIT_NAMES[target]
            deficits[target] -= len(groups[key])
        return SplitAssignment(assignments)

    if stratify:
        pools = [
            [r.image_id for r in manifest.images if r.objects],
            [r.image_id for r in manifest.images if not r.objects],
        ]
    else:
        pools = [[r.image_id for r in manifest.images]]
    for pool in pools:
        pool.sort()
        rng.shuffle(pool)
        sizes = allocate_sizes(len(pool), ratios)
        start = 0
        for name, size in zip(SPLIT_NAMES, sizes):
            for image_id in pool[start:start + size]:
                assignments[image_id] = name
            start += size
    return SplitAssignment(assignments)


# ---------------------------------------------------------------------------
# audit against declared counts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    """One mismatch between declared and observed accounting values."""

    location: str      # e.g. "training.images", "declared_sum.images"
    declared: str
    observed: str
    delta: int | None  # declared minus observed where both are counts
    message: str


@dataclass(frozen=True)
class DeclaredCounts:
    """Externally declared accounting values; every field optional.

    ``counts[split][column]`` holds declared integers, ``percents`` the
    declared percentage strings exactly as printed (precision matters:
    observed values are compared after rendering at the same number of
    decimals). ``split`` may also be "total".
    """

    counts: Mapping[str, Mapping[str, int]]
    percents: Mapping[str, Mapping[str, str]]


_COUNT_COLS = ("images", "objects", "positives", "negatives")
_PCT_COLS = ("pct_images", "pct_objects", "pct_positives", "pct_negatives")


def parse_declared_counts(text: str) -> DeclaredCounts:
    """Read declared counts from CSV in the accounting-report schema.

    Blank cells are simply not checked, so a previously emitted
    accounting report is itself a valid declaration.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "split" not in reader.fieldnames:
        raise ValidationError("declared counts CSV needs a 'split' column")
    unknown_cols = sorted(set(reader.fieldnames) - set(ACCOUNTING_COLUMNS))
    if unknown_cols:
        raise ValidationError(f"declared counts CSV has unknown columns: {unknown_cols}")
    counts: dict[str, dict[str, int]] = {}
    percents: dict[str, dict[str, str]] = {}
    for row in reader:
        split = (row.get("split") or "").strip()
        if split not in SPLIT_NAMES + ("total",):
            raise ValidationError(f"unknown split name {split!r} in declared counts")
        for col in _COUNT_COLS:
            cell = (row.get(col) or "").strip()
            if cell:
                try:
                    counts.setdefault(split, {})[col] = int(cell)
                except ValueError as exc:
                    raise ValidationError(f"{split}.{col}: not an integer: {cell!r}") from exc
        for col in _PCT_COLS:
            cell = (row.get(col) or "").strip()
            if cell:
                percents.setdefault(split, {})[col] = cell
    return DeclaredCounts(counts=counts, percents=percents)


def _observed_count(accounting: SplitAccounting, split: str, column: str) -> int:
    counts = accounting.totals if split == "total" else accounting.rows[split]
    return getattr(counts, column)


def _observed_fraction(accounting: SplitAccounting, split: str, column: str) -> float | None:
    if split == "total":
        totals = accounting.totals
        if column in ("pct_images", "pct_objects"):
            return 1.0 if getattr(totals, column.removeprefix("pct_")) else None
        denom = totals.images
        num = totals.positives if column == "pct_positives" else totals.negatives
        return num / denom if denom else None
    lookup = {
        "pct_images": accounting.image_fraction,
        "pct_objects": accounting.object_fraction,
        "pct_positives": accounting.positive_fraction,
        "pct_negatives": accounting.negative_fraction,
    }
    return lookup[column](split)


def validate_accounting(
    observed: SplitAccounting | None,
    declared: DeclaredCounts,
) -> list[Discrepancy]:
    """Compare declared counts/percentages against observed accounting.

    Also checks the declared numbers' internal consistency: for every
    count column declared on all three splits and on the total row, the
    split sum must equal the declared total. Discrepancies are returned
    as data, never raised.
    """
    found: list[Discrepancy] = []

    # Internal consistency of the declaration itself.
    for col in _COUNT_COLS:
        split_values = [declared.counts.get(name, {}).get(col) for name in SPLIT_NAMES]
        total_value = declared.counts.get("total", {}).get(col)
        if total_value is not None and all(v is not None for v in split_values):
            sum_declared = sum(split_values)  # type: ignore[arg-type]
            if sum_declared != total_value:
                found.append(Discrepancy(
                    location=f"declared_sum.{col}",
                    declared=str(total_value),
                    observed=str(sum_declared),
                    delta=sum_declared - total_value,
                    message=(
                        f"declared {col} per split sum to {sum_declared} but the "
                        f"declared total is {total_value} "
                        f"({sum_declared - total_value:+d})"
                    ),
                ))

    if observed is not None:
        for split, cols in declared.counts.items():
            for col, value in cols.items():
                actual = _observed_count(observed, split, col)
                if actual != value:
                    found.append(Discrepancy(
                        location=f"{split}.{col}",
                        declared=str(value),
                        observed=str(actual),
                        delta=value - actual,
                        message=f"{split}.{col}: declared {value}, observed {actual}",
                    ))
        for split, cols in declared.percents.items():
            for col, text in cols.items():
                decimals = len(text.rstrip("%").partition(".")[2])
                fraction = _observed_fraction(observed, split, col)
                rendered = percent(fraction, decimals) if fraction is not None else ""
                if rendered != text:
                    found.append(Discrepancy(
                        location=f"{split}.{col}",
                        declared=text,
                        observed=rendered,
                        delta=None,
                        message=f"{split}.{col}: declared {text}, observed {rendered or 'undefined'}",
                    ))
    return found


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def format_split_file(split: SplitAssignment, order: Iterable[str] | None = None) -> str:
    """Line-oriented split file: ``image_id<TAB>split_name``."""
    ids = list(order) if order is not None else sorted(split.assignments)
    return "".join(f"{image_id}\t{split.assignments[image_id]}\n" for image_id in ids)


def parse_split_file(text: str) -> SplitAssignment:
    assignments: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 'image_id<TAB>split', got {line!r}")
        image_id, name = parts[0].strip(), parts[1].strip()
        if image_id in assignments:
            raise ValidationError(f"line {lineno}: duplicate image_id {image_id!r}")
        assignments[image_id] = name
    return SplitAssignment(assignments)


def accounting_csv(accounting: SplitAccounting) -> str:
    """Accounting report CSV; image/object shares at 1 decimal, positive and
    negative shares at 2 decimals, matching the two summary-table styles."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ACCOUNTING_COLUMNS)

    def fmt(fraction: float | None, decimals: int) -> str:
        return percent(fraction, decimals) if fraction is not None else ""

    for name in SPLIT_NAMES:
        counts = accounting.rows[name]
        writer.writerow([
            name,
            counts.images, fmt(accounting.image_fraction(name), 1),
            counts.objects, fmt(accounting.object_fraction(name), 1),
            counts.positives, fmt(accounting.positive_fraction(name), 2),
            counts.negatives, fmt(accounting.negative_fraction(name), 2),
        ])
    totals = accounting.totals
    writer.writerow([
        "total",
        totals.images, fmt(1.0 if totals.images else None, 1),
        totals.objects, fmt(1.0 if totals.objects else None, 1),
        totals.positives, fmt(totals.positives / totals.images if totals.images else None, 2),
        totals.negatives, fmt(totals.negatives / totals.images if totals.images else None, 2),
    ])
    return out.getvalue()
