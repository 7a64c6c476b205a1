# Radial domain types

from pmcm.models.measure import Atom, HahnSplit, KernelPiece, PolynomialPiece, RadialDensity, RadialInterval, RadialMeasure, RadialSet
from pmcm.models.problem import PlanarCarrier, PlanarProblem, RadialCarrier, RadialProblem, SaddleState
from pmcm.models.profile import GridFunction2D, JumpRecord, RadialDomain, RadialField, RadialProfile
from pmcm.models.solution import JumpKind, RadialSolution, SolutionFamily

__all__ = [
    "Atom",
    "GridFunction2D",
    "HahnSplit",
    "JumpKind",
    "JumpRecord",
    "KernelPiece",
    "PlanarCarrier",
    "PlanarProblem",
    "PolynomialPiece",
    "RadialCarrier",
    "RadialDensity",
    "RadialDomain",
    "RadialField",
    "RadialInterval",
    "RadialMeasure",
    "RadialProblem",
    "RadialProfile",
    "RadialSet",
    "RadialSolution",
    "SaddleState",
    "SolutionFamily",
]
