"""
Services package
Solvers, checks and experiments on radial measures and profiles
"""

from pmcm.services.approximation import GammaExperimentConfig
from pmcm.services.minimizer import PrimalDualMinimizer
from pmcm.services.scenario_runner import ScenarioRunner

__all__ = [
    "GammaExperimentConfig",
    "PrimalDualMinimizer",
    "ScenarioRunner",
]
