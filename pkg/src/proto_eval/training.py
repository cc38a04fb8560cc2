"""Training-run records and step/epoch arithmetic audits.

No training is ever executed here; the module records configurations
and checks that reported step and epoch figures are mutually
consistent. Steps per epoch is ceiling division (a final partial batch
still costs a step), epochs from steps is floor division (a partial
epoch has not happened yet).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable

from .errors import ParseError, ValidationError
from .formatting import canonical_number

_MAX_STEPS = 2**63 - 1


@dataclass(frozen=True)
class TrainingConfig:
    """One model's training setup, as reported."""

    model_label: str
    framework_label: str
    learning_rate: float
    batch_size: int
    n_training_images: int
    resolution_policy: str
    confidence_threshold: float
    subdivisions: int | None = None
    max_steps: int | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.n_training_images < 1:
            raise ValidationError(f"n_training_images must be >= 1, got {self.n_training_images}")
        if self.subdivisions is not None:
            if self.subdivisions < 1 or self.batch_size % self.subdivisions != 0:
                raise ValidationError(
                    f"subdivisions ({self.subdivisions}) must divide batch_size ({self.batch_size})"
                )
        if self.max_steps is not None and self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ValidationError(
                f"confidence_threshold must be in [0, 1], got {self.confidence_threshold}"
            )


@dataclass(frozen=True)
class RunSummary:
    """How far a run got: exactly one of steps or epochs, the other derived."""

    steps_trained: int | None = None
    epochs_trained: int | None = None
    wall_hours: float | None = None
    final_avg_loss: float | None = None

    def __post_init__(self) -> None:
        given = (self.steps_trained is not None) + (self.epochs_trained is not None)
        if given != 1:
            raise ValidationError("exactly one of steps_trained/epochs_trained must be given")
        for name in ("steps_trained", "epochs_trained"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValidationError(f"{name} must be non-negative")


def steps_per_epoch(n_images: int, batch_size: int) -> int:
    """Batches per full pass over the training set (last partial batch counts)."""
    if n_images < 1 or batch_size < 1:
        raise ValidationError(
            f"n_images and batch_size must be >= 1, got {n_images}, {batch_size}"
        )
    return math.ceil(n_images / batch_size)


def epochs_from_steps(steps: int, per_epoch: int) -> int:
    """Completed full passes after the given number of steps."""
    if per_epoch < 1:
        raise ValidationError(f"steps per epoch must be >= 1, got {per_epoch}")
    if steps < 0:
        raise ValidationError(f"steps must be non-negative, got {steps}")
    return steps // per_epoch


def steps_from_epochs(epochs: int, per_epoch: int) -> int:
    """Steps needed for the given number of full passes."""
    if per_epoch < 1:
        raise ValidationError(f"steps per epoch must be >= 1, got {per_epoch}")
    if epochs < 0:
        raise ValidationError(f"epochs must be non-negative, got {epochs}")
    result = epochs * per_epoch
    if result > _MAX_STEPS:
        raise ValidationError(f"step count {result} exceeds the 64-bit step counter")
    return result


@dataclass(frozen=True)
class LedgerRow:
    model: str
    steps: int | None
    epochs: int | None
    steps_per_epoch: int
    wall_hours: float | None
    final_avg_loss: float | None


def derive_ledger_row(config: TrainingConfig, run: RunSummary | None) -> LedgerRow:
    """Fill in whichever of steps/epochs the run summary left implicit."""
    per_epoch = steps_per_epoch(config.n_training_images, config.batch_size)
    steps = epochs = wall = loss = None
    if run is not None:
        wall = run.wall_hours
        loss = run.final_avg_loss
        if run.steps_trained is not None:
            steps = run.steps_trained
            epochs = epochs_from_steps(steps, per_epoch)
        else:
            epochs = run.epochs_trained
            steps = steps_from_epochs(epochs, per_epoch)
    return LedgerRow(
        model=config.model_label,
        steps=steps,
        epochs=epochs,
        steps_per_epoch=per_epoch,
        wall_hours=wall,
        final_avg_loss=loss,
    )


# ---------------------------------------------------------------------------
# config documents and the ledger report
# ---------------------------------------------------------------------------

_CONFIG_KEYS = (
    "model_label", "framework_label", "learning_rate", "batch_size",
    "subdivisions", "max_steps", "resolution_policy", "confidence_threshold",
    "n_training_images", "run",
)
_RUN_KEYS = ("steps_trained", "epochs_trained", "wall_hours", "final_avg_loss")


def parse_training_config(text: str) -> tuple[TrainingConfig, RunSummary | None]:
    """Parse one canonical training-config document (one model per file)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"training config: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError("training config must be a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_KEYS))
    if unknown:
        raise ParseError(f"training config: unknown keys {unknown}")

    def need(key: str) -> Any:
        if key not in data:
            raise ParseError(f"training config: missing key {key!r}")
        return data[key]

    config = TrainingConfig(
        model_label=str(need("model_label")),
        framework_label=str(need("framework_label")),
        learning_rate=float(need("learning_rate")),
        batch_size=int(need("batch_size")),
        subdivisions=None if data.get("subdivisions") is None else int(data["subdivisions"]),
        max_steps=None if data.get("max_steps") is None else int(data["max_steps"]),
        resolution_policy=str(need("resolution_policy")),
        confidence_threshold=float(need("confidence_threshold")),
        n_training_images=int(need("n_training_images")),
    )
    run = None
    if data.get("run") is not None:
        raw = data["run"]
        if not isinstance(raw, dict) or set(raw) - set(_RUN_KEYS):
            raise ParseError(f"training config: bad run section {raw!r}")
        run = RunSummary(
            steps_trained=None if raw.get("steps_trained") is None else int(raw["steps_trained"]),
            epochs_trained=None if raw.get("epochs_trained") is None else int(raw["epochs_trained"]),
            wall_hours=None if raw.get("wall_hours") is None else float(raw["wall_hours"]),
            final_avg_loss=None if raw.get("final_avg_loss") is None else float(raw["final_avg_loss"]),
        )
    return config, run


def serialize_training_config(config: TrainingConfig, run: RunSummary | None = None) -> str:
    """Canonical training-config document (stable key order)."""
    doc: dict[str, Any] = {
        "model_label": config.model_label,
        "framework_label": config.framework_label,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "subdivisions": config.subdivisions,
        "max_steps": config.max_steps,
        "resolution_policy": config.resolution_policy,
        "confidence_threshold": config.confidence_threshold,
        "n_training_images": config.n_training_images,
    }
    if run is not None:
        doc["run"] = {k: getattr(run, k) for k in _RUN_KEYS if getattr(run, k) is not None}
    return json.dumps(doc, indent=2) + "\n"


def ledger_csv(rows: Iterable[LedgerRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", "steps", "epochs", "steps_per_epoch", "wall_hours", "final_avg_loss"])
    for row in rows:
        writer.writerow([
            row.model,
            "" if row.steps is None else row.steps,
            "" if row.epochs is None else row.epochs,
            row.steps_per_epoch,
            "" if row.wall_hours is None else canonical_number(float(row.wall_hours)),
            "" if row.final_avg_loss is None else canonical_number(float(row.final_avg_loss)),
        ])
    return out.getvalue()
