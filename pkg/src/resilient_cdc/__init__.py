"""Energy-aware, resilient constraint-driven control of multi-robot teams."""

from .config import ScenarioConfig, parse_config
from .frames import FrameVectorSet, frame_potential, modified_frame_potential
from .qp import QpProblem, QpSettings, QpSolution, solve
from .sim import batch, init_scenario, run, step

__version__ = "0.1.0"

__all__ = [
    "FrameVectorSet",
    "QpProblem",
    "QpSettings",
    "QpSolution",
    "ScenarioConfig",
    "batch",
    "frame_potential",
    "init_scenario",
    "modified_frame_potential",
    "parse_config",
    "run",
    "solve",
    "step",
]
