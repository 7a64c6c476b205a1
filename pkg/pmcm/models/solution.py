"""
Closed-form radial solutions and their one-parameter families
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Tuple

from pmcm.models.measure import RadialMeasure
from pmcm.models.profile import RadialDomain


class JumpKind(Enum):
    """Admissible behaviour of a radial solution across one atom sphere"""
    JUMP_UP = "jump_up"
    JUMP_DOWN = "jump_down"
    CONTINUOUS_ONLY = "continuous_only"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class JumpClassification:
    kind: JumpKind
    lower: float  # 1 - (r_inner / r_atom)^(n-1)
    upper: float  # 1 + (r_inner / r_atom)^(n-1)
    at_endpoint: bool = False


@dataclass(frozen=True)
class FluxAnchor:
    """Prescribe gamma on one interval (0 = innermost)"""
    interval: int
    gamma: float


@dataclass(frozen=True)
class JumpAnchor:
    """Jump rule at an atom: gamma just outside equals sign(weight) r^(n-1)"""
    atom: int


class OneSidedLimits(NamedTuple):
    inner: float
    outer: float


@dataclass(frozen=True)
class SolutionPiece:
    """u(r) = base + int_{r_lo}^r gamma / sqrt(s^(2n-2) - gamma^2) ds on [r_lo, r_hi]"""
    r_lo: float
    r_hi: float
    gamma: float
    base: float


@dataclass(frozen=True)
class SolutionJump:
    radius: float
    height: float
    direction: int  # +1: up with increasing r


@dataclass(frozen=True)
class JumpSlot:
    """A place where a family may put vertical mass: the inner boundary (index 0) or atom index - 1"""
    index: int
    radius: float
    direction: int


@dataclass(frozen=True, eq=False)
class RadialSolution:
    domain: RadialDomain
    measure: RadialMeasure
    phi_a: float
    phi_b: float
    pieces: Tuple[SolutionPiece, ...]
    jumps: Tuple[SolutionJump, ...] = ()
    inner_jump: float = 0.0  # u(r_a^+) - phi_a
    inner_attainment: str = "classical"
    outer_attainment: str = "classical"

    @property
    def gammas(self) -> Tuple[float, ...]:
        return tuple(piece.gamma for piece in self.pieces)

    @property
    def base_value(self) -> float:
        return self.pieces[0].base

    def jump_at(self, radius: float):
        for jump in self.jumps:
            if jump.radius == radius:
                return jump
        return None


@dataclass(frozen=True, eq=False)
class SolutionFamily:
    """
    Minimizers differing only by how a fixed vertical excess is shared among jump slots

    member(t) puts height t on the first slot and the rest on the last slot;
    t ranges over translation_interval.
    """
    domain: RadialDomain
    measure: RadialMeasure
    phi_a: float
    phi_b: float
    gammas: Tuple[float, ...]
    slots: Tuple[JumpSlot, ...]
    excess: float
    builder: Callable[[float], RadialSolution]

    @property
    def translation_interval(self) -> Tuple[float, float]:
        return 0.0, self.excess

    def member(self, t: float) -> RadialSolution:
        return self.builder(t)

    def members(self, count: int) -> List[RadialSolution]:
        if count < 2:
            return [self.member(0.5 * self.excess)]
        return [self.member(self.excess * k / (count - 1)) for k in range(count)]
