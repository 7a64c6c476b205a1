"""
Scenario file schema
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

SCENARIO_SCHEMA_VERSION = "1.0"

Task = Literal["radial", "minimize", "verify", "gamma", "family", "maxprinciple", "checks"]


class DomainSpec(BaseModel):
    """Annulus r_a < |x| < r_b inside the ball of radius R_B in R^n"""
    n: int = Field(..., ge=2, description="Space dimension")
    r_a: float = Field(..., gt=0.0)
    r_b: float = Field(..., gt=0.0)
    R_B: float = Field(..., gt=0.0, description="Radius of the container ball B")

    @model_validator(mode="after")
    def check_order(self) -> "DomainSpec":
        if not self.r_a < self.r_b:
            raise ValueError(f"r_a must be smaller than r_b, got r_a={self.r_a}, r_b={self.r_b}")
        if not self.r_b < self.R_B:
            raise ValueError(f"R_B must exceed r_b, got r_b={self.r_b}, R_B={self.R_B}")
        return self


class DensityPieceSpec(BaseModel):
    r_lo: float
    r_hi: float
    coefficients: List[float] = Field(..., min_length=1, description="h(r) = sum_k c_k r^k on [r_lo, r_hi]")


class MeasureSpec(BaseModel):
    atoms: List[Tuple[float, float]] = Field(default_factory=list, description="(radius, weight) pairs, increasing radii")
    density: List[DensityPieceSpec] = Field(default_factory=list)


class BoundarySpec(BaseModel):
    phi_a: float = Field(0.0, description="Datum on |x| = r_a")
    phi_b: float = Field(0.0, description="Datum on |x| = r_b")


class ParameterSpec(BaseModel):
    """Task parameters; unset values fall back to the settings"""
    grid_step: Optional[float] = Field(None, gt=0.0)
    tol_gap: Optional[float] = Field(None, gt=0.0)
    max_iter: Optional[int] = Field(None, ge=1)
    tolerance: Optional[float] = Field(None, gt=0.0, description="Certificate tolerance")
    cells: int = Field(400, ge=2, description="Sampling cells for closed-form solutions")
    deltas: List[float] = Field(default_factory=list, description="Mollification widths, strictly decreasing")
    family_samples: int = Field(5, ge=2)
    source: Literal["closed_form", "minimizer"] = Field("closed_form", description="Where verify/maxprinciple take solutions from")
    second_boundary: Optional[BoundarySpec] = Field(None, description="Data of the second problem in maxprinciple")
    second_measure: Optional[MeasureSpec] = Field(None, description="Measure of the second problem; defaults to the first")


class Expectations(BaseModel):
    """Assertions embedded in the scenario; unset ones are skipped"""
    gammas: Optional[List[float]] = None
    gamma_atol: float = 1e-12
    jump_kinds: Optional[List[str]] = None
    energy: Optional[float] = None
    energy_rtol: float = 1e-8
    family_energy_rtol: float = 1e-8
    min_family_members: Optional[int] = None
    comparison_refused: Optional[str] = Field(None, description="Hypothesis the comparison principle must refuse")
    max_l1_relative: Optional[float] = None
    max_energy_relative: Optional[float] = None
    certificate_passed: Optional[bool] = None
    max_principle_holds: Optional[bool] = None
    final_gap: Optional[float] = None
    monotone: Optional[bool] = None
    l_hat: Optional[float] = None
    l_hat_atol: float = 1e-9
    l_hat_below: Optional[float] = None


class Scenario(BaseModel):
    schema_version: str = SCENARIO_SCHEMA_VERSION
    name: str = Field(..., min_length=1)
    description: str = ""
    task: Task
    domain: DomainSpec
    measure: MeasureSpec = Field(default_factory=MeasureSpec)
    boundary: BoundarySpec = Field(default_factory=BoundarySpec)
    parameters: ParameterSpec = Field(default_factory=ParameterSpec)
    expect: Expectations = Field(default_factory=Expectations)

    @model_validator(mode="after")
    def check_consistency(self) -> "Scenario":
        if self.schema_version != SCENARIO_SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}, expected {SCENARIO_SCHEMA_VERSION}")
        radii = [r for r, _ in self.measure.atoms]
        for r in radii:
            if not self.domain.r_a < r < self.domain.r_b:
                raise ValueError(f"atom radius {r} outside ({self.domain.r_a}, {self.domain.r_b})")
        if any(b <= a for a, b in zip(radii[:-1], radii[1:])):
            raise ValueError("atom radii must be strictly increasing")
        for piece in self.measure.density:
            if not self.domain.r_a <= piece.r_lo < piece.r_hi <= self.domain.r_b:
                raise ValueError(f"density piece [{piece.r_lo}, {piece.r_hi}] leaves the annulus")
        if self.task == "gamma":
            deltas = self.parameters.deltas
            if not deltas:
                raise ValueError("task 'gamma' needs parameters.deltas")
            if any(b >= a for a, b in zip(deltas[:-1], deltas[1:])):
                raise ValueError("parameters.deltas must be strictly decreasing")
        if self.task == "maxprinciple" and self.parameters.second_boundary is None and self.parameters.second_measure is None:
            raise ValueError("task 'maxprinciple' needs parameters.second_boundary or parameters.second_measure")
        if self.task in ("radial", "family") and self.measure.density:
            raise ValueError(f"task '{self.task}' needs an atoms-only measure")
        return self

    class Config:
        json_schema_extra = {
            "example": {
                "schema_version": "1.0",
                "name": "nine_one_sphere",
                "description": "One sphere in the jump window",
                "task": "radial",
                "domain": {"n": 2, "r_a": 1.0, "r_b": 3.0, "R_B": 4.0},
                "measure": {"atoms": [[2.0, 0.8]]},
                "boundary": {"phi_a": 0.0, "phi_b": 3.0},
                "expect": {"gammas": [0.4, 2.0], "jump_kinds": ["jump_up"]},
            }
        }
