"""
Discrete problems and saddle-point state for the primal-dual minimizer
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from pmcm.core.errors import ConfigurationError, InvalidInputError
from pmcm.models.measure import RadialMeasure
from pmcm.models.profile import RadialDomain

PlanarFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class RadialCarrier:
    """Radial grid whose nodes include every atom radius; each atom node owns a jump slot"""
    domain: RadialDomain
    grid: np.ndarray

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0.0):
            raise ConfigurationError("carrier grid must be strictly increasing with at least two nodes")
        scale = self.domain.r_b
        if abs(grid[0] - self.domain.r_a) > 1e-12 * scale or abs(grid[-1] - self.domain.r_b) > 1e-12 * scale:
            raise ConfigurationError(f"carrier grid must cover [{self.domain.r_a}, {self.domain.r_b}]")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def uniform(cls, domain: RadialDomain, step: float, measure: Optional[RadialMeasure] = None) -> "RadialCarrier":
        """
        Roughly uniform grid of the given step between consecutive breakpoints

        Breakpoints are r_a, the atom radii of the measure and r_b, so every
        atom lands exactly on a node.
        """
        if not step > 0.0:
            raise InvalidInputError(f"grid step must be positive, got {step}")
        breaks = [domain.r_a] + ([a.radius for a in measure.atoms] if measure is not None else []) + [domain.r_b]
        pieces = []
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            cells = max(1, math.ceil((hi - lo) / step - 1e-9))
            pieces.append(np.linspace(lo, hi, cells + 1)[:-1])
        return cls(domain, np.concatenate(pieces + [np.array([domain.r_b])]))

    @property
    def cell_count(self) -> int:
        return self.grid.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.grid)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.grid[:-1] + self.grid[1:])

    def node_of(self, radius: float) -> Optional[int]:
        j = int(np.argmin(np.abs(self.grid - radius)))
        if abs(self.grid[j] - radius) <= 1e-12 * self.domain.r_b:
            return j
        return None

    def describe(self) -> Dict[str, float]:
        return {
            "carrier": "radial",
            "cells": self.cell_count,
            "step": float(np.max(self.widths)),
            "min_step": float(np.min(self.widths)),
        }


@dataclass(frozen=True, eq=False)
class RadialProblem:
    """Minimize the capillary functional over profiles on the carrier, weak datum (phi_a, phi_b)"""
    carrier: RadialCarrier
    measure: RadialMeasure
    phi_a: float
    phi_b: float

    def __post_init__(self):
        if self.measure.domain != self.carrier.domain:
            raise ConfigurationError("measure and carrier live on different domains")
        if not (np.isfinite(self.phi_a) and np.isfinite(self.phi_b)):
            raise InvalidInputError("boundary data must be finite")

    @property
    def domain(self) -> RadialDomain:
        return self.carrier.domain

    def atom_nodes(self) -> Tuple[int, ...]:
        """Carrier node of every atom; unresolved atoms are a configuration error"""
        nodes = []
        for atom in self.measure.atoms:
            j = self.carrier.node_of(atom.radius)
            if j is None:
                raise ConfigurationError(
                    f"atom at r={atom.radius} is not resolved by the carrier",
                    {"radius": atom.radius},
                )
            nodes.append(j)
        return tuple(nodes)


@dataclass(frozen=True, eq=False)
class PlanarCarrier:
    """Cartesian node grid on [x0, x1] x [y0, y1] with spacing h; the rectangle plays the role of B"""
    x0: float
    x1: float
    y0: float
    y1: float
    h: float

    def __post_init__(self):
        if not self.h > 0.0:
            raise ConfigurationError(f"mesh spacing must be positive, got {self.h}")
        for extent, name in ((self.x1 - self.x0, "x"), (self.y1 - self.y0, "y")):
            cells = round(extent / self.h)
            if cells < 1 or abs(cells * self.h - extent) > 1e-9 * max(extent, 1.0):
                raise ConfigurationError(f"{name}-extent {extent} is not a positive multiple of h={self.h}")

    @property
    def nx(self) -> int:
        return int(round((self.x1 - self.x0) / self.h))

    @property
    def ny(self) -> int:
        return int(round((self.y1 - self.y0) / self.h))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.ny + 1, self.nx + 1

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.x0 + self.h * np.arange(self.nx + 1)
        y = self.y0 + self.h * np.arange(self.ny + 1)
        return np.meshgrid(x, y)

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def circumradius(self) -> float:
        return 0.5 * math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def describe(self) -> Dict[str, float]:
        return {"carrier": "planar", "nx": self.nx, "ny": self.ny, "step": self.h}


@dataclass(frozen=True, eq=False)
class PlanarProblem:
    """
    Cartesian analogue with an absolutely continuous measure f dx

    Nodes outside omega are held at the datum; the functional is the graph
    area over the whole rectangle plus int_omega f u.
    """
    carrier: PlanarCarrier
    omega: PlanarFunction
    density: PlanarFunction
    datum: PlanarFunction

    @classmethod
    def from_radial(
        cls,
        measure: RadialMeasure,
        h: float,
        phi_a: float,
        phi_b: float,
    ) -> "PlanarProblem":
        """Annulus problem on the square [-R_B, R_B]^2; only density measures are accepted"""
        domain = measure.domain
        if domain.n != 2:
            raise ConfigurationError(f"planar carrier needs n = 2, got n = {domain.n}")
        if measure.atoms:
            raise ConfigurationError("planar carrier accepts absolutely continuous measures only; use the radial carrier for atoms")
        half = h * math.ceil(domain.R_B / h)
        carrier = PlanarCarrier(-half, half, -half, half, h)

        def omega(x, y):
            r = np.hypot(x, y)
            return (r > domain.r_a) & (r < domain.r_b)

        def density(x, y):
            return measure.density(np.hypot(x, y))

        def datum(x, y):
            return np.where(np.hypot(x, y) <= domain.r_a, phi_a, phi_b)

        return cls(carrier, omega, density, datum)

    def free_mask(self) -> np.ndarray:
        X, Y = self.carrier.coordinates()
        mask = np.asarray(self.omega(X, Y), dtype=bool)
        # the outer frame is always held at the datum
        mask[0, :] = mask[-1, :] = False
        mask[:, 0] = mask[:, -1] = False
        return mask


@dataclass
class SaddleState:
    """
    Primal-dual iterate

    x stacks the radial node values and the jump slots (or the planar node
    values); w0 and w are the cell duals with w0^2 + |w|^2 <= 1; xi holds
    the slot and boundary duals in [-1, 1].
    """
    x: np.ndarray
    x_bar: np.ndarray
    w0: np.ndarray
    w: np.ndarray
    xi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tau: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sigma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iteration: int = 0
    gap: float = float("inf")
    energy: float = float("inf")
    dual_objective: float = -float("inf")

    def max_dual_norm(self) -> float:
        if self.w.ndim == 1:
            return float(np.max(np.hypot(self.w0, self.w), initial=0.0))
        return float(np.max(np.sqrt(self.w0 ** 2 + np.sum(self.w ** 2, axis=0)), initial=0.0))
