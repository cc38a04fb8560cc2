"""Detector backends.

Three families:

* ``stub``: echoes the ground truth of a canonical manifest at a fixed
  confidence. Deterministic, needs no model weights; lets the whole
  pipeline (and the evaluation toolkit downstream) be exercised
  end-to-end.
* ``region_proposal``: a TorchScript module following the common
  two-stage detector convention, image in, ``{"boxes", "scores",
  "labels"}`` out with boxes already in pixel corners.
* ``single_shot``: a TorchScript module following the grid-detector
  convention, square input, rows of ``[cx, cy, w, h, confidence,
  label]`` normalized to [0, 1]. The adapter owns the conversion back
  to pixel corners in the original frame, so the toolkit only ever
  sees one geometry convention.

Backends return raw detections; confidence filtering happens in the
runner, strictly (confidence must exceed the threshold, equality is
excluded).
"""

from __future__ import annotations

from pathlib import Path

from PIL import Image

from .config import AdapterConfig, ConfigError
from .formats import FormatError, RawDetection, read_manifest


class BackendError(Exception):
    """The backend artifact could not be loaded or produced bad output."""


class StubBackend:
    """Echo the manifest's ground truth. The model artifact is the manifest."""

    def __init__(self, config: AdapterConfig):
        try:
            view = read_manifest(Path(config.model_path).read_text(encoding="utf-8"))
        except (OSError, FormatError) as exc:
            raise BackendError(f"stub artifact unusable: {exc}") from exc
        self._images = view.images
        self._confidence = config.stub_confidence

    def detect(self, image_id: str, image: Image.Image) -> list[RawDetection]:
        entry = self._images.get(image_id)
        if entry is None:
            return []
        return [RawDetection(class_id=c, box=b, confidence=self._confidence)
                for c, b in zip(entry.class_ids, entry.boxes)]


def _load_torchscript(path: str):
    try:
        import torch
    except ImportError as exc:
        raise BackendError("torch is required for this backend "
                           "(install the adapter's 'torch' extra)") from exc
    try:
        module = torch.jit.load(path, map_location="cpu")
    except Exception as exc:
        raise BackendError(f"cannot load model artifact {path!r}: {exc}") from exc
    module.eval()
    return torch, module


def _map_label(label: int, config: AdapterConfig) -> int | None:
    """Backend label index -> manifest class id; unmapped names are dropped."""
    if not (0 <= label < len(config.backend_classes)):
        raise BackendError(
            f"backend label {label} outside the declared backend_classes "
            f"({len(config.backend_classes)} entries)")
    return config.class_map.get(config.backend_classes[label])


class RegionProposalBackend:
    """Two-stage detector: pixel-space boxes straight from the module."""

    def __init__(self, config: AdapterConfig):
        self._torch, self._module = _load_torchscript(config.model_path)
        self._config = config

    def detect(self, image_id: str, image: Image.Image) -> list[RawDetection]:
        torch = self._torch
        tensor = torch.frombuffer(
            bytearray(image.convert("RGB").tobytes()), dtype=torch.uint8)
        tensor = tensor.reshape(image.height, image.width, 3)
        tensor = tensor.permute(2, 0, 1).to(torch.float32) / 255.0
        with torch.no_grad():
            output = self._module(tensor)
        if not isinstance(output, dict) or not {"boxes", "scores", "labels"} <= set(output):
            raise BackendError("region-proposal module must return boxes/scores/labels")
        detections = []
        for box, score, label in zip(output["boxes"].tolist(),
                                     output["scores"].tolist(),
                                     output["labels"].tolist()):
            class_id = _map_label(int(label), self._config)
            if class_id is None:
                continue
            x0, y0, x1, y1 = box
            detections.append(RawDetection(
                class_id=class_id,
                box=_clamp_box(x0, y0, x1, y1, image.width, image.height),
                confidence=float(score),
            ))
        return detections


class SingleShotBackend:
    """Grid detector: normalized center/size rows, converted here."""

    def __init__(self, config: AdapterConfig):
        self._torch, self._module = _load_torchscript(config.model_path)
        self._config = config

    def detect(self, image_id: str, image: Image.Image) -> list[RawDetection]:
        torch = self._torch
        size = self._config.input_size
        resized = image.convert("RGB").resize((size, size))
        tensor = torch.frombuffer(bytearray(resized.tobytes()), dtype=torch.uint8)
        tensor = tensor.reshape(size, size, 3).permute(2, 0, 1).to(torch.float32) / 255.0
        with torch.no_grad():
            output = self._module(tensor)
        if not self._torch.is_tensor(output) or output.dim() != 2 or output.shape[-1] != 6:
            raise BackendError("single-shot module must return an (n, 6) tensor")
        detections = []
        for cx, cy, w, h, conf, label in output.tolist():
            class_id = _map_label(int(label), self._config)
            if class_id is None:
                continue
            x0 = (cx - w / 2) * image.width
            y0 = (cy - h / 2) * image.height
            x1 = (cx + w / 2) * image.width
            y1 = (cy + h / 2) * image.height
            detections.append(RawDetection(
                class_id=class_id,
                box=_clamp_box(x0, y0, x1, y1, image.width, image.height),
                confidence=float(conf),
            ))
        return detections


def _clamp_box(x0, y0, x1, y1, width, height):
    return (
        min(max(x0, 0.0), float(width)),
        min(max(y0, 0.0), float(height)),
        min(max(x1, 0.0), float(width)),
        min(max(y1, 0.0), float(height)),
    )


def build_backend(config: AdapterConfig):
    if config.backend == "stub":
        return StubBackend(config)
    if config.backend == "region_proposal":
        return RegionProposalBackend(config)
    if config.backend == "single_shot":
        return SingleShotBackend(config)
    raise ConfigError(f"unknown backend {config.backend!r}")
