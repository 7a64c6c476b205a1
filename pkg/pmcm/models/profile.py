"""
Radial BV profiles, radial fields and Cartesian grid functions
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from pmcm.core.errors import InvalidInputError
from pmcm.core.geometry import unit_ball_volume, unit_sphere_area


def _frozen(values, name: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim == 0:
        raise InvalidInputError(f"{name} must be an array")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RadialDomain:
    """Annulus r_a < |x| < r_b inside the ball B = B_{R_B}, in R^n"""
    n: int
    r_a: float
    r_b: float
    R_B: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInputError(f"dimension n must be an integer >= 2, got {self.n}", {"field": "n"})
        if not 0.0 < self.r_a < self.r_b < self.R_B:
            raise InvalidInputError(
                f"radii must satisfy 0 < r_a < r_b < R_B, got ({self.r_a}, {self.r_b}, {self.R_B})",
                {"field": "r_a" if self.r_a >= self.r_b else "R_B"},
            )

    @property
    def sphere_coefficient(self) -> float:
        """n*omega_n"""
        return unit_sphere_area(self.n)

    def sphere_area(self, r):
        return self.sphere_coefficient * np.asarray(r, dtype=float) ** (self.n - 1)

    @property
    def annulus_volume(self) -> float:
        return unit_ball_volume(self.n) * (self.r_b ** self.n - self.r_a ** self.n)

    @property
    def exterior_volume(self) -> float:
        """|B minus Omega|, the part of B where the datum is extended as a constant"""
        return unit_ball_volume(self.n) * (self.R_B ** self.n - self.r_b ** self.n + self.r_a ** self.n)

    @property
    def container_volume(self) -> float:
        return unit_ball_volume(self.n) * self.R_B ** self.n

    @property
    def width(self) -> float:
        return self.r_b - self.r_a

    def to_dict(self) -> Dict[str, float]:
        return {"n": self.n, "r_a": self.r_a, "r_b": self.r_b, "R_B": self.R_B}


@dataclass(frozen=True)
class JumpRecord:
    """
    Jump of a radial profile on the sphere |x| = radius

    u_plus > u_minus always; orientation +1 means the upper trace u_plus is
    found on the outer side (the profile jumps up with increasing r),
    -1 means it jumps down.
    """
    radius: float
    u_minus: float
    u_plus: float
    orientation: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.u_minus) and np.isfinite(self.u_plus)):
            raise InvalidInputError(f"jump traces at r={self.radius} must be finite")
        if not self.u_plus > self.u_minus:
            raise InvalidInputError(
                f"degenerate or misordered jump at r={self.radius}: u+={self.u_plus}, u-={self.u_minus}"
            )
        if self.orientation not in (-1, 1):
            raise InvalidInputError(f"orientation must be +1 or -1, got {self.orientation}")

    @property
    def height(self) -> float:
        return self.u_plus - self.u_minus

    @property
    def inner(self) -> float:
        """Trace from the side r < radius"""
        return self.u_minus if self.orientation > 0 else self.u_plus

    @property
    def outer(self) -> float:
        return self.u_plus if self.orientation > 0 else self.u_minus

    @property
    def precise(self) -> float:
        return 0.5 * (self.u_plus + self.u_minus)

    @classmethod
    def from_sides(cls, radius: float, inner: float, outer: float) -> "JumpRecord":
        if outer > inner:
            return cls(radius, inner, outer, 1)
        return cls(radius, outer, inner, -1)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """
    Piecewise-linear radial BV function with an explicit jump set

    values[j] is the trace from the inside (r -> grid[j]^-) at interior
    nodes, u(r_a^+) at the first node and u(r_b^-) at the last one. The
    outer trace at a jump node comes from its JumpRecord.
    """
    domain: RadialDomain
    grid: np.ndarray
    values: np.ndarray
    jumps: Tuple[JumpRecord, ...] = ()
    snap_distances: Tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        grid = _frozen(self.grid, "grid")
        values = _frozen(self.values, "values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "jumps", tuple(sorted(self.jumps, key=lambda j: j.radius)))
        if grid.ndim != 1 or grid.size < 2:
            raise InvalidInputError("grid needs at least two nodes")
        if np.any(np.diff(grid) <= 0.0):
            raise InvalidInputError("grid must be strictly increasing")
        scale = self.domain.r_b
        if abs(grid[0] - self.domain.r_a) > 1e-12 * scale or abs(grid[-1] - self.domain.r_b) > 1e-12 * scale:
            raise InvalidInputError(f"grid must cover [r_a, r_b] = [{self.domain.r_a}, {self.domain.r_b}]")
        if values.shape != grid.shape:
            raise InvalidInputError(f"values shape {values.shape} does not match grid shape {grid.shape}")
        nodes = []
        for jump in self.jumps:
            j = int(np.argmin(np.abs(grid - jump.radius)))
            if abs(grid[j] - jump.radius) > 1e-12 * scale:
                raise InvalidInputError(f"jump radius {jump.radius} is not a grid point")
            if j == 0 or j == grid.size - 1:
                raise InvalidInputError(f"jump radius {jump.radius} must lie strictly inside (r_a, r_b)")
            if abs(values[j] - jump.inner) > 1e-9 * (1.0 + abs(jump.inner)):
                raise InvalidInputError(f"node value at r={jump.radius} differs from the jump's inner trace")
            nodes.append(j)
        if len(set(nodes)) != len(nodes):
            raise InvalidInputError("two jump records share a grid node")
        object.__setattr__(self, "_jump_nodes", tuple(nodes))

    @property
    def jump_nodes(self) -> Tuple[int, ...]:
        return self._jump_nodes  # type: ignore[attr-defined]

    @property
    def cell_count(self) -> int:
        return self.grid.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.grid)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.grid[:-1] + self.grid[1:])

    @property
    def right_values(self) -> np.ndarray:
        """Trace from the outside (r -> grid[j]^+) at every node"""
        right = self.values.copy()
        for j, jump in zip(self.jump_nodes, self.jumps):
            right[j] = jump.outer
        return right

    @property
    def increments(self) -> np.ndarray:
        """Absolutely continuous increment over each cell"""
        return self.values[1:] - self.right_values[:-1]

    @property
    def slopes(self) -> np.ndarray:
        return self.increments / self.widths

    @property
    def inner_trace(self) -> float:
        return float(self.values[0])

    @property
    def outer_trace(self) -> float:
        return float(self.values[-1])

    def jump_at(self, radius: float, atol: float = 1e-12) -> Optional[JumpRecord]:
        for jump in self.jumps:
            if abs(jump.radius - radius) <= atol * self.domain.r_b:
                return jump
        return None

    def sides_at(self, radius: float) -> Tuple[float, float]:
        """(inner, outer) traces at radius; equal where the profile is continuous"""
        jump = self.jump_at(radius)
        if jump is not None:
            return jump.inner, jump.outer
        value = float(self.evaluate(radius))
        return value, value

    def evaluate(self, r):
        """Piecewise-linear evaluation; the precise representative u* at jump radii"""
        r = np.asarray(r, dtype=float)
        right = self.right_values
        cell = np.clip(np.searchsorted(self.grid, r, side="right") - 1, 0, self.cell_count - 1)
        t = (r - self.grid[cell]) / self.widths[cell]
        value = right[cell] * (1.0 - t) + self.values[cell + 1] * t
        for jump in self.jumps:
            value = np.where(np.abs(r - jump.radius) <= 1e-12 * self.domain.r_b, jump.precise, value)
        return value

    @classmethod
    def from_traces(
        cls,
        domain: RadialDomain,
        grid,
        left,
        right,
        atol: float = 0.0,
    ) -> "RadialProfile":
        """
        Build a profile from per-node one-sided traces

        Args:
            domain: Annulus
            grid: Node radii covering [r_a, r_b]
            left: Traces from the inside; left[0] is ignored
            right: Traces from the outside; right[-1] is ignored
            atol: Differences |right - left| up to atol are read as continuity

        Returns:
            Profile with a jump record wherever the traces differ
        """
        grid = np.asarray(grid, dtype=float)
        left = np.array(left, dtype=float)
        right = np.asarray(right, dtype=float)
        values = left.copy()
        values[0] = right[0]
        jumps = []
        for j in range(1, grid.size - 1):
            if abs(right[j] - left[j]) > atol:
                jumps.append(JumpRecord.from_sides(float(grid[j]), float(left[j]), float(right[j])))
        return cls(domain, grid, values, tuple(jumps))

    @classmethod
    def from_function(
        cls,
        domain: RadialDomain,
        grid,
        func: Callable[[np.ndarray], np.ndarray],
        jumps: Optional[Mapping[float, float]] = None,
    ) -> "RadialProfile":
        """
        Sample a continuous function and superpose signed jumps

        Requested jump radii are snapped to the nearest interior grid node;
        the snap distances are kept on the profile.

        Args:
            domain: Annulus
            grid: Node radii
            func: Continuous part, vectorized
            jumps: Map radius -> signed height (outer minus inner trace)
        """
        grid = np.asarray(grid, dtype=float)
        base = np.asarray(func(grid), dtype=float) * np.ones_like(grid)
        shift = np.zeros_like(grid)
        at_node = np.zeros_like(grid)
        snaps = []
        for radius, height in sorted((jumps or {}).items()):
            j = int(np.argmin(np.abs(grid[1:-1] - radius))) + 1
            snaps.append(float(abs(grid[j] - radius)))
            at_node[j] += height
            shift[j + 1:] += height
        left = base + shift
        profile = cls.from_traces(domain, grid, left, left + at_node)
        object.__setattr__(profile, "snap_distances", tuple(snaps))
        return profile

    @classmethod
    def constant(cls, domain: RadialDomain, value: float, cells: int = 16) -> "RadialProfile":
        grid = np.linspace(domain.r_a, domain.r_b, cells + 1)
        return cls(domain, grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True, eq=False)
class RadialField:
    """Radial component T_r of a radially symmetric field, sampled at cell midpoints"""
    domain: RadialDomain
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _frozen(self.grid, "grid")
        values = _frozen(self.values, "values")
        if values.shape != (grid.size - 1,):
            raise InvalidInputError(f"field needs one value per cell, got {values.shape} for {grid.size - 1} cells")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.grid[:-1] + self.grid[1:])

    @property
    def fluxes(self) -> np.ndarray:
        """T_r * r^(n-1) per cell; constant on cells where div T = 0"""
        return self.values * self.midpoints ** (self.domain.n - 1)

    def scaled(self, factor: float) -> "RadialField":
        return RadialField(self.domain, self.grid, factor * self.values)

    @classmethod
    def zeros_like(cls, profile: RadialProfile) -> "RadialField":
        return cls(profile.domain, profile.grid, np.zeros(profile.cell_count))


@dataclass(frozen=True, eq=False)
class GridFunction2D:
    """Node values on the rectangle [x0, x1] x [y0, y1] with mesh spacing h; values[i, j] sits at (x0 + j h, y0 + i h)"""
    x0: float
    x1: float
    y0: float
    y1: float
    h: float
    values: np.ndarray

    def __post_init__(self):
        if not self.h > 0.0:
            raise InvalidInputError(f"mesh spacing must be positive, got {self.h}")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise InvalidInputError("rectangle extents must be increasing")
        for extent, name in ((self.x1 - self.x0, "x"), (self.y1 - self.y0, "y")):
            cells = round(extent / self.h)
            if cells < 1 or abs(cells * self.h - extent) > 1e-9 * max(extent, 1.0):
                raise InvalidInputError(f"{name}-extent {extent} is not a multiple of h={self.h}")
        values = _frozen(self.values, "values")
        if values.shape != (self.ny + 1, self.nx + 1):
            raise InvalidInputError(f"values shape {values.shape} does not match nodes {(self.ny + 1, self.nx + 1)}")
        object.__setattr__(self, "values", values)

    @property
    def nx(self) -> int:
        return int(round((self.x1 - self.x0) / self.h))

    @property
    def ny(self) -> int:
        return int(round((self.y1 - self.y0) / self.h))

    @property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        x = self.x0 + self.h * np.arange(self.nx + 1)
        y = self.y0 + self.h * np.arange(self.ny + 1)
        return np.meshgrid(x, y)

    def forward_gradient(self) -> Tuple[np.ndarray, np.ndarray]:
        """Forward differences on the nx-by-ny cells, one per lower-left node"""
        u = self.values
        gx = (u[:-1, 1:] - u[:-1, :-1]) / self.h
        gy = (u[1:, :-1] - u[:-1, :-1]) / self.h
        return gx, gy
