"""Builders for adapter tests: a small dataset on disk (manifest + PNGs)."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

# (image_id, [(class_id, (x0, y0, x1, y1)), ...]); ids 0..1 -> wood/micro
DATASET = [
    ("frame_00", [(0, (10, 10, 60, 50))]),
    ("frame_01", [(1, (20, 20, 44, 44))]),
    ("frame_02", [(0, (5, 5, 95, 95)), (1, (30, 40, 50, 60))]),
    ("frame_03", [(0, (12, 8, 40, 30))]),
    ("frame_04", [(1, (60, 60, 90, 90))]),
    ("frame_05", [(0, (25, 25, 75, 40))]),
    ("frame_06", []),
    ("frame_07", []),
    ("frame_08", []),
    ("frame_09", []),
]


def manifest_document(dataset=DATASET, with_capture=False) -> str:
    images = []
    for i, (image_id, objects) in enumerate(dataset):
        entry = {
            "image_id": image_id,
            "source": "capture_system" if with_capture else "web",
            "objects": [
                {"class_id": class_id,
                 "box": {"x_min": b[0], "y_min": b[1], "x_max": b[2], "y_max": b[3]}}
                for class_id, b in objects
            ],
            "is_negative": not objects,
        }
        if with_capture:
            entry["capture"] = {
                "capture_id": f"cap{i // 7}",
                "view_index": i % 7 + 1,
                "captured_at": "2019-03-20T10:00:00Z",
                "location": "lab",
                "author": "rig",
                "image_width": 1920,
                "image_height": 1080,
            }
        images.append(entry)
    return json.dumps({"class_names": ["wood_sheet", "microcontroller"],
                       "images": images}, indent=2) + "\n"


@pytest.fixture
def dataset_dir(tmp_path) -> Path:
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(manifest_document())
    images_dir = tmp_path / "images"
    images_dir.mkdir()
    for i, (image_id, _) in enumerate(DATASET):
        Image.new("RGB", (100, 100), (10 * i, 80, 120)).save(images_dir / f"{image_id}.png")
    return tmp_path


def write_config(tmp_path, **overrides) -> Path:
    config = {"backend": "stub", "model_path": str(tmp_path / "manifest.json")}
    config.update(overrides)
    path = tmp_path / "adapter_config.json"
    path.write_text(json.dumps(config, indent=2))
    return path
