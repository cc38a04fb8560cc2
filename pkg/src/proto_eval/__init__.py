"""Dataset bookkeeping and detection-quality metrics for multi-view
prototype image sets: annotation parsing, split accounting, IoU/AP/mAP,
per-image confusion metrics and training-run arithmetic audits."""

from .errors import ParseError, ProtoEvalError, UndefinedMetricError, ValidationError
from .types import (
    BoundingBox,
    CaptureMetadata,
    DatasetManifest,
    Detection,
    DetectionSet,
    ImageRecord,
    LabeledObject,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CaptureMetadata",
    "DatasetManifest",
    "Detection",
    "DetectionSet",
    "ImageRecord",
    "LabeledObject",
    "ParseError",
    "ProtoEvalError",
    "UndefinedMetricError",
    "ValidationError",
    "__version__",
]
