"""Structured part-graph inference with a cost-aware question-answer learning loop."""

from .nodes import Aog, CategoryNode, PartNode, PoseNode, validate
from .world import World, WorldConfig, generate_world
from .engine import EngineConfig, run_learning_loop
from .oracle import SimulatedOracle

__version__ = "0.1.0"

__all__ = [
    "Aog",
    "CategoryNode",
    "PartNode",
    "PoseNode",
    "validate",
    "World",
    "WorldConfig",
    "generate_world",
    "EngineConfig",
    "run_learning_loop",
    "SimulatedOracle",
    "__version__",
]
