"""Timed Up and Go analysis from 3D body-landmark trajectories."""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config  # noqa: E402
from .pipeline import TrialResult, analyze_file, analyze_recording  # noqa: E402

__all__ = ["PipelineConfig", "TrialResult", "analyze_file", "analyze_recording",
           "load_config", "__version__"]
