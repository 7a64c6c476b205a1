"""
Report schemas emitted by the checks, solvers and certificates
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class NonextremalityReport(BaseModel):
    """Best ratio |mu(E^1)| / Per(E) found over radial test sets"""
    value: float = Field(..., ge=0.0, description="L_hat, a certified lower bound of the non-extremality constant")
    inner_radius: float = Field(..., description="Inner radius of the optimizing annulus")
    inner_side: int = Field(..., description="-1, 0 or +1: the cut sits at r^-, r or r^+")
    outer_radius: float = Field(..., description="Outer radius of the optimizing annulus")
    outer_side: int = Field(..., description="-1, 0 or +1: the cut sits at r^-, r or r^+")
    cells: int = Field(..., description="Dyadic cells of the cut grid")
    analytic_single_atom: Optional[float] = Field(None, description="Closed form for single-atom measures")
    non_extremal: bool = Field(..., description="True when value < 1")
    certified_lower_bound: bool = Field(True, description="The radial family only bounds the true constant from below")


class BallConditionReport(BaseModel):
    """Worst sampled ball for the necessary condition |mu(B_r(x))| <= n omega_n r^(n-1)"""
    worst_ratio: float = Field(..., ge=0.0)
    center_radius: float = Field(..., description="|x| of the worst ball center")
    ball_radius: float = Field(..., description="Radius of the worst ball")
    violated: bool = Field(..., description="A ratio above 1 certifies a violation")


class DensityBoundReport(BaseModel):
    """Upper density constants of the singular set"""
    Lambda: float = Field(..., ge=0.0)
    rho_bar: float = Field(..., gt=0.0)
    spheres_within_reach: int = Field(..., ge=0)
    vacuous: bool = Field(..., description="No singular part: the bound holds trivially")


class ConvergenceReport(BaseModel):
    """Outcome of a primal-dual minimization"""
    energy: float = Field(..., description="Discrete functional at the returned iterate")
    dual_objective: float = Field(..., description="Dual value at the returned dual iterate")
    gap: float = Field(..., description="energy - dual_objective")
    iters: int = Field(..., ge=0)
    L_hat: float = Field(..., ge=0.0)
    converged: bool
    box_active: bool = Field(False, description="The primal box constraint touched the iterate")
    max_dual_norm: float = Field(..., description="max over cells of |(w0, w)|")
    coercivity_floor: Optional[float] = Field(None, description="Coercivity lower bound at the returned iterate (radial)")
    grid: Dict[str, Any] = Field(default_factory=dict, description="Carrier description")

    class Config:
        json_schema_extra = {
            "example": {
                "energy": 53.41,
                "dual_objective": 53.40999,
                "gap": 1e-5,
                "iters": 12000,
                "L_hat": 0.5333,
                "converged": True,
                "box_active": False,
                "max_dual_norm": 1.0,
                "grid": {"carrier": "radial", "cells": 100, "step": 0.02},
            }
        }


class CertificateReport(BaseModel):
    """Residuals of the weak-solution conditions"""
    sup_norm_T: float = Field(..., ge=0.0)
    div_residual: float = Field(..., ge=0.0, description="Test-function residual of div T = mu")
    pairing_residual: float = Field(..., ge=0.0, description="Total-variation distance of the two sides of the pairing identity")
    pairing_excess: float = Field(0.0, ge=0.0, description="Mass by which |(T, Du)_lambda| exceeds the area-minus-conjugate bound")
    t_formula_residual: float = Field(..., ge=0.0, description="L1 distance of T and u'/sqrt(1+u'^2)")
    jump_trace_defect: float = Field(0.0, ge=0.0, description="max |selected one-sided trace - 1| at jumps")
    tolerance: float = Field(..., gt=0.0)
    conditions: Dict[str, bool] = Field(default_factory=dict, description="Verdict per named condition")
    passed: bool

    def failed_conditions(self) -> List[str]:
        return [name for name, ok in self.conditions.items() if not ok]


class TFormulaReport(BaseModel):
    residual: float = Field(..., ge=0.0)
    jump_trace_defect: float = Field(..., ge=0.0)
    passed: bool


class UniquenessVerdict(BaseModel):
    """Concavity witness comparing two fields certified for the same profile"""
    consistent: bool = Field(..., description="False when the midpoint slack exceeds the residual budget")
    slack: float
    budget: float


class MaxPrincipleVerdict(BaseModel):
    holds: bool
    worst_radius: float
    worst_gap: float = Field(..., description="min over the common grid of u1 - u2")
    tolerance: float


class GammaRow(BaseModel):
    delta: float
    energy: float
    energy_gap: float = Field(..., description="|min J_delta - min J|")
    l1_distance: float
    L_hat: float
    solver_gap: float


class GammaTable(BaseModel):
    limit_energy: float
    rows: List[GammaRow] = Field(default_factory=list)
    monotone: bool = Field(..., description="Gaps decrease up to twice the solver tolerance")
    final_gap: float


class ValidationReport(BaseModel):
    """Outcome of schema and semantic checks on a scenario file"""
    path: str
    valid: bool = Field(..., description="False when the file does not parse or violates the schema")
    errors: List[str] = Field(default_factory=list, description="Field diagnostics, 'location: message'")
    warnings: List[str] = Field(default_factory=list, description="Semantic findings that do not block a run")

    @property
    def clean(self) -> bool:
        return self.valid and not self.errors and not self.warnings


class ScenarioReport(BaseModel):
    """JSON report written by every scenario run"""
    schema_version: str
    name: str
    task: str
    version: str = Field(..., description="Library version that produced the report")
    config: Dict[str, Any] = Field(default_factory=dict, description="Resolved scenario and settings")
    results: Dict[str, Any] = Field(default_factory=dict)
    assertions: Dict[str, bool] = Field(default_factory=dict, description="Verdict per embedded expectation")
    certificate: Optional[Dict[str, Any]] = None
    error: Optional[Dict[str, Any]] = None
    artifacts: List[str] = Field(default_factory=list)
    passed: bool
    exit_code: int = Field(..., ge=0, le=2)
