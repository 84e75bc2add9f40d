"""Outage management toolkit: signal perception, evolving operational
memory, next-best-action recommendation, and replay-based evaluation."""

from .config import PipelineConfig, load_config
from .errors import OutageKitError
from .orchestrator import Orchestrator

__version__ = "0.1.0"

__all__ = ["PipelineConfig", "load_config", "OutageKitError", "Orchestrator",
           "__version__"]
