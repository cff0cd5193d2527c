"""Sonar salmon monitoring: simulate, detect, track, count, measure, review."""

from .geometry import DEFAULT_GEOMETRY, CartesianRaster, SonarGeometry
from .simulator import Direction, FishSpec, GroundTruth, NoiseParams, ScenarioConfig, simulate

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GEOMETRY",
    "CartesianRaster",
    "SonarGeometry",
    "Direction",
    "FishSpec",
    "GroundTruth",
    "NoiseParams",
    "ScenarioConfig",
    "simulate",
    "__version__",
]
