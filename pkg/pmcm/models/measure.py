"""
Radial measures on annuli: spherical atoms plus a piecewise radial density
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from pmcm.core.config import settings
from pmcm.core.errors import InvalidInputError
from pmcm.core.geometry import gauss_legendre
from pmcm.core.kernels import mollifier
from pmcm.models.profile import RadialDomain


@dataclass(frozen=True)
class Atom:
    """Uniform mass weight per unit area on the sphere |x| = radius"""
    radius: float
    weight: float


@dataclass(frozen=True)
class PolynomialPiece:
    """h(r) = sum_k coefficients[k] r^k on [r_lo, r_hi]"""
    r_lo: float
    r_hi: float
    coefficients: Tuple[float, ...]

    kind = "polynomial"

    def __call__(self, r) -> np.ndarray:
        return Polynomial(self.coefficients)(np.asarray(r, dtype=float))

    def sign_intervals(self) -> List[Tuple[float, float, int]]:
        """Split [r_lo, r_hi] at real roots; each part carries the sign of h there"""
        roots = []
        if any(c != 0.0 for c in self.coefficients[1:]):
            for root in Polynomial(self.coefficients).roots():
                if abs(root.imag) < 1e-12 and self.r_lo < root.real < self.r_hi:
                    roots.append(float(root.real))
        edges = [self.r_lo] + sorted(roots) + [self.r_hi]
        parts = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                parts.append((lo, hi, int(np.sign(self(0.5 * (lo + hi))))))
        return parts

    def scaled(self, factor: float) -> "PolynomialPiece":
        return PolynomialPiece(self.r_lo, self.r_hi, tuple(factor * c for c in self.coefficients))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "r_lo": self.r_lo, "r_hi": self.r_hi, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class KernelPiece:
    """
    One panel of a mollified sphere:
    h(r) = flux_mass * rho_width(r - center) / r^(n-1) on [r_lo, r_hi]
    """
    r_lo: float
    r_hi: float
    center: float
    width: float
    flux_mass: float
    n: int

    kind = "kernel"

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.flux_mass * mollifier((r - self.center) / self.width) / (self.width * r ** (self.n - 1))

    def sign_intervals(self) -> List[Tuple[float, float, int]]:
        return [(self.r_lo, self.r_hi, int(np.sign(self.flux_mass)))]

    def scaled(self, factor: float) -> "KernelPiece":
        return KernelPiece(self.r_lo, self.r_hi, self.center, self.width, factor * self.flux_mass, self.n)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "r_lo": self.r_lo, "r_hi": self.r_hi, "center": self.center,
            "width": self.width, "flux_mass": self.flux_mass, "n": self.n,
        }


DensityPiece = Union[PolynomialPiece, KernelPiece]


@dataclass(frozen=True)
class RadialDensity:
    """Non-overlapping pieces sorted by r_lo; h = 0 off the pieces"""
    pieces: Tuple[DensityPiece, ...] = ()

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.r_lo))
        for piece in pieces:
            if not piece.r_hi > piece.r_lo:
                raise InvalidInputError(f"density piece [{piece.r_lo}, {piece.r_hi}] is empty")
        for left, right in zip(pieces[:-1], pieces[1:]):
            if right.r_lo < left.r_hi - 1e-14 * abs(left.r_hi):
                raise InvalidInputError(f"density pieces overlap near r={right.r_lo}")
        object.__setattr__(self, "pieces", pieces)

    @property
    def is_zero(self) -> bool:
        return len(self.pieces) == 0

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        value = np.zeros_like(r)
        for piece in self.pieces:
            inside = (r >= piece.r_lo) & (r < piece.r_hi)
            if piece is self.pieces[-1]:
                inside |= r == piece.r_hi
            value = value + np.where(inside, piece(np.where(inside, r, piece.r_lo)), 0.0)
        return value

    def integrate(
        self,
        lo: float,
        hi: float,
        n: int,
        weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        absolute: bool = False,
    ) -> float:
        """
        int_lo^hi h(r) w(r) r^(n-1) dr, Gauss-Legendre per piece intersection

        Args:
            lo: Lower limit
            hi: Upper limit
            n: Dimension for the volume weight
            weight: Optional extra factor w(r)
            absolute: Integrate |h| instead of h
        """
        nodes, weights = gauss_legendre(settings.GAUSS_LEGENDRE_DEGREE)
        total = 0.0
        for piece in self.pieces:
            parts = piece.sign_intervals() if absolute else [(piece.r_lo, piece.r_hi, 1)]
            for p_lo, p_hi, sign in parts:
                a, b = max(lo, p_lo), min(hi, p_hi)
                if b <= a:
                    continue
                half, mid = 0.5 * (b - a), 0.5 * (a + b)
                x = mid + half * nodes
                values = piece(x) * x ** (n - 1)
                if weight is not None:
                    values = values * weight(x)
                total += (sign if absolute else 1) * half * float(np.dot(weights, values))
        return total

    def scaled(self, factor: float) -> "RadialDensity":
        return RadialDensity(tuple(piece.scaled(factor) for piece in self.pieces))

    @property
    def breakpoints(self) -> List[float]:
        points = set()
        for piece in self.pieces:
            points.update((piece.r_lo, piece.r_hi))
        return sorted(points)


@dataclass(frozen=True)
class RadialMeasure:
    """mu = sum_i weight_i H^(n-1) on |x| = r_i  +  h(|x|) dx"""
    domain: RadialDomain
    atoms: Tuple[Atom, ...] = ()
    density: RadialDensity = RadialDensity()

    def __post_init__(self):
        atoms = tuple(Atom(float(a.radius), float(a.weight)) if isinstance(a, Atom) else Atom(*map(float, a))
                      for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        radii = [a.radius for a in atoms]
        for atom in atoms:
            if not self.domain.r_a < atom.radius < self.domain.r_b:
                raise InvalidInputError(
                    f"atom radius {atom.radius} outside ({self.domain.r_a}, {self.domain.r_b})", {"field": "atoms"}
                )
            if not np.isfinite(atom.weight):
                raise InvalidInputError(f"atom weight at r={atom.radius} is not finite", {"field": "atoms"})
        if any(b <= a for a, b in zip(radii[:-1], radii[1:])):
            raise InvalidInputError("atom radii must be pairwise distinct and sorted increasing", {"field": "atoms"})
        for piece in self.density.pieces:
            if piece.r_lo < self.domain.r_a or piece.r_hi > self.domain.r_b:
                raise InvalidInputError(f"density piece [{piece.r_lo}, {piece.r_hi}] leaves the annulus",
                                        {"field": "density"})

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def atoms_only(self) -> bool:
        return self.density.is_zero

    @property
    def is_zero(self) -> bool:
        return self.density.is_zero and all(a.weight == 0.0 for a in self.atoms)

    @property
    def radii(self) -> np.ndarray:
        return np.array([a.radius for a in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=float)

    @property
    def flux_masses(self) -> np.ndarray:
        """weight_i * r_i^(n-1): the jump of r^(n-1) T_r across sphere i"""
        return self.weights * self.radii ** (self.n - 1)

    def total_variation(self) -> float:
        atoms = float(np.sum(np.abs(self.flux_masses)))
        density = self.density.integrate(self.domain.r_a, self.domain.r_b, self.n, absolute=True)
        return self.domain.sphere_coefficient * (atoms + density)

    def scaled(self, factor: float) -> "RadialMeasure":
        atoms = tuple(Atom(a.radius, factor * a.weight) for a in self.atoms)
        return RadialMeasure(self.domain, atoms, self.density.scaled(factor))

    def negated(self) -> "RadialMeasure":
        return self.scaled(-1.0)

    def to_dict(self) -> dict:
        return {
            **self.domain.to_dict(),
            "atoms": [[a.radius, a.weight] for a in self.atoms],
            "density": [piece.to_dict() for piece in self.density.pieces],
        }


@dataclass(frozen=True)
class HahnSplit:
    """lambda_mu: 1 on negative atoms and on intervals where h < 0, else 0"""
    atom_indicators: Tuple[int, ...]
    density_indicators: Tuple[Tuple[float, float, int], ...] = ()

    def __post_init__(self):
        for flag in self.atom_indicators:
            if flag not in (0, 1):
                raise InvalidInputError(f"indicator values must be 0 or 1, got {flag}")
        for _, _, flag in self.density_indicators:
            if flag not in (0, 1):
                raise InvalidInputError(f"indicator values must be 0 or 1, got {flag}")

    def density_indicator_at(self, r: float) -> int:
        for lo, hi, flag in self.density_indicators:
            if lo <= r < hi:
                return flag
        return 0


@dataclass(frozen=True)
class RadialInterval:
    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False

    def __post_init__(self):
        if not self.hi >= self.lo:
            raise InvalidInputError(f"interval ({self.lo}, {self.hi}) is reversed")


@dataclass(frozen=True)
class RadialSet:
    """Finite union of radial intervals (a union of annuli in R^n)"""
    intervals: Tuple[RadialInterval, ...]

    @classmethod
    def of(cls, *bounds: Tuple[float, float]) -> "RadialSet":
        return cls(tuple(RadialInterval(lo, hi) for lo, hi in bounds))

    def merged(self) -> List[Tuple[float, float]]:
        """
        Interiors of the connected components of the closure

        Endpoint flags never matter: mu(E^1) only sees points of density one,
        and touching intervals glue into one annulus.
        """
        spans = sorted((iv.lo, iv.hi) for iv in self.intervals if iv.hi > iv.lo)
        merged: List[List[float]] = []
        for lo, hi in spans:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [(lo, hi) for lo, hi in merged]
