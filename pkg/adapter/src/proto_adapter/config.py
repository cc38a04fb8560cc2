"""Adapter configuration: backend choice, model artifact, class mapping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

BACKENDS = ("stub", "region_proposal", "single_shot")

# A kept detection needs confidence strictly greater than the threshold.
# The single-shot family ships with a lower default that is commonly
# raised; a config may override any of these.
FAMILY_DEFAULT_THRESHOLDS = {
    "stub": 0.5,
    "region_proposal": 0.5,
    "single_shot": 0.25,
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class AdapterConfig:
    backend: str
    model_path: str
    class_map: dict[str, int] = field(default_factory=dict)  # backend name -> manifest class id
    backend_classes: tuple[str, ...] = ()   # backend label index -> name (torch backends)
    confidence_threshold: float | None = None  # None: family default
    input_size: int = 416                   # single-shot network resolution
    stub_confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.confidence_threshold is not None and not (0.0 <= self.confidence_threshold <= 1.0):
            raise ConfigError(f"confidence_threshold must be in [0, 1], got {self.confidence_threshold}")
        if not (0.0 <= self.stub_confidence <= 1.0):
            raise ConfigError(f"stub_confidence must be in [0, 1], got {self.stub_confidence}")
        if self.input_size < 1:
            raise ConfigError(f"input_size must be positive, got {self.input_size}")
        for name, class_id in self.class_map.items():
            if not isinstance(class_id, int) or class_id < 0:
                raise ConfigError(f"class_map[{name!r}] must be a non-negative integer")

    @property
    def threshold(self) -> float:
        if self.confidence_threshold is not None:
            return self.confidence_threshold
        return FAMILY_DEFAULT_THRESHOLDS[self.backend]


def load_config(path: str | Path) -> AdapterConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    known = {"backend", "model_path", "class_map", "backend_classes",
             "confidence_threshold", "input_size", "stub_confidence"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    for key in ("backend", "model_path"):
        if key not in data:
            raise ConfigError(f"{path}: missing key {key!r}")
    return AdapterConfig(
        backend=str(data["backend"]),
        model_path=str(data["model_path"]),
        class_map={str(k): v for k, v in data.get("class_map", {}).items()},
        backend_classes=tuple(data.get("backend_classes", ())),
        confidence_threshold=data.get("confidence_threshold"),
        input_size=int(data.get("input_size", 416)),
        stub_confidence=float(data.get("stub_confidence", 1.0)),
    )
