"""Distributed adaptive fault-tolerant leader-follower consensus."""

from .config import ScenarioConfig, from_dict
from .graph import augmented_laplacians, build_topology, laplacian_check, spectral_check
from .io import load_scenario, summarize, write_trace
from .sim import run

__version__ = "0.1.0"

__all__ = ["ScenarioConfig", "from_dict", "augmented_laplacians", "build_topology", "laplacian_check",
           "spectral_check", "load_scenario", "summarize", "write_trace", "run"]
