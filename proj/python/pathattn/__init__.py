"""Pathologist attention heatmaps, scanpaths and evaluation metrics."""

from pathattn._core import *  # noqa: F401,F403
from pathattn._core import PathattnError

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
