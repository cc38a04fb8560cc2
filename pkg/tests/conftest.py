"""Shared builders, hypothesis strategies and the randomized scene generator."""

from __future__ import annotations

import random
import string

import hypothesis.strategies as st

from proto_eval.types import (
    BoundingBox,
    CaptureMetadata,
    DatasetManifest,
    Detection,
    DetectionSet,
    ImageRecord,
    LabeledObject,
)

# ---------------------------------------------------------------------------
# plain builders
# ---------------------------------------------------------------------------

def record(image_id, objects=(), source="web", capture=None):
    return ImageRecord(
        image_id=image_id, source=source, capture=capture,
        objects=tuple(objects), is_negative=not objects,
    )


def manifest(images, class_names=("mdf",)):
    return DatasetManifest(class_names=tuple(class_names), images=tuple(images))


def obj(class_id, x0, y0, x1, y1):
    return LabeledObject(class_id=class_id, box=BoundingBox(x0, y0, x1, y1))


def det(class_id, x0, y0, x1, y1, conf):
    return Detection(class_id=class_id, box=BoundingBox(x0, y0, x1, y1), confidence=conf)


# ---------------------------------------------------------------------------
# hypothesis strategies (canonical-grid numbers so round-trips are exact)
# ---------------------------------------------------------------------------

GRID = 10**6  # multiples of 1e-6 render exactly in the canonical number format


def grid_coord(max_value=4000):
    return st.integers(0, max_value * GRID).map(lambda n: n / GRID)


def _interval(draw, strategy, upper, positive):
    lo, hi = sorted((draw(strategy), draw(strategy)))
    if positive and lo == hi:
        if hi < upper:
            hi += 1
        else:
            lo -= 1
    return lo, hi


@st.composite
def boxes(draw, max_x=4000, max_y=None, positive_area=True):
    max_y = max_x if max_y is None else max_y
    x0, x1 = _interval(draw, st.integers(0, max_x * GRID), max_x * GRID, positive_area)
    y0, y1 = _interval(draw, st.integers(0, max_y * GRID), max_y * GRID, positive_area)
    return BoundingBox(x0 / GRID, y0 / GRID, x1 / GRID, y1 / GRID)


_ids = st.text(alphabet=string.ascii_lowercase + string.digits + "_-", min_size=1, max_size=12)


@st.composite
def captures(draw):
    return CaptureMetadata(
        capture_id=draw(_ids),
        view_index=draw(st.integers(1, 7)),
        captured_at="2019-03-20T10:00:00+00:00",
        location=draw(st.text(max_size=10)),
        author=draw(st.text(max_size=10)),
        image_width=draw(st.integers(1, 4000)),
        image_height=draw(st.integers(1, 4000)),
    )


@st.composite
def manifests(draw, max_images=6, max_classes=3, max_objects=3):
    n_classes = draw(st.integers(1, max_classes))
    class_names = [f"class_{i}" for i in range(n_classes)]
    image_strategy = st.tuples(
        st.lists(st.tuples(st.integers(0, n_classes - 1), boxes(max_x=100)),
                 max_size=max_objects),
        st.sampled_from(("capture_system", "web", "material_sample")),
        st.none() | captures(),
    )
    drawn = draw(st.lists(image_strategy, max_size=max_images))
    images = []
    for i, (objects, source, capture) in enumerate(drawn):
        images.append(ImageRecord(
            image_id=f"img_{i:03d}",
            source=source,
            capture=capture,
            objects=tuple(LabeledObject(c, b) for c, b in objects),
            is_negative=not objects,
        ))
    return DatasetManifest(class_names=tuple(class_names), images=tuple(images))


# ---------------------------------------------------------------------------
# randomized scenes shared by the oracle-equivalence suites
# ---------------------------------------------------------------------------

def random_box(rng, grid=20):
    """Boxes on a small integer grid so overlaps happen often."""
    x0, x1 = sorted(rng.sample(range(grid + 1), 2))
    y0, y1 = sorted(rng.sample(range(grid + 1), 2))
    return (float(x0), float(y0), float(x1), float(y1))


def random_scene(rng: random.Random, n_classes=3, max_images=10, max_gts=5, max_dets=8):
    """Plain-data scene: the oracle consumes it directly, tests convert it."""
    images = []
    for i in range(rng.randint(1, max_images)):
        gts = [(rng.randrange(n_classes), random_box(rng))
               for _ in range(rng.randint(0, max_gts))]
        dets = [(rng.randrange(n_classes), random_box(rng),
                 round(rng.random(), rng.choice((1, 2, 6))))
                for _ in range(rng.randint(0, max_dets))]
        images.append({"id": f"img{i:03d}", "gts": gts, "dets": dets})
    if not any(image["gts"] for image in images):
        images[0]["gts"].append((0, random_box(rng)))
    return images


def scene_to_package(scene, n_classes=3):
    """Convert a plain scene into a manifest plus detection sets."""
    records = []
    det_sets = []
    for image in scene:
        objects = tuple(LabeledObject(c, BoundingBox(*b)) for c, b in image["gts"])
        records.append(ImageRecord(
            image_id=image["id"], source="web", capture=None,
            objects=objects, is_negative=not objects,
        ))
        det_sets.append(DetectionSet(
            image_id=image["id"],
            detections=tuple(Detection(c, BoundingBox(*b), conf)
                             for c, b, conf in image["dets"]),
        ))
    names = tuple(f"class_{i}" for i in range(n_classes))
    return DatasetManifest(class_names=names, images=tuple(records)), det_sets
