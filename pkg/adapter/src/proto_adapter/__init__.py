"""Batch inference adapter: runs a detector backend over an image
directory and emits canonical detection files for the evaluation
toolkit, which is consumed purely through its documented file formats
and command line."""

from .config import AdapterConfig, ConfigError, load_config
from .run import Discrepancy, RunReport, run_inference, validate_output

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "ConfigError",
    "Discrepancy",
    "RunReport",
    "load_config",
    "run_inference",
    "validate_output",
    "__version__",
]
