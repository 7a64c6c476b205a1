"""
Closed-form radial solutions on annuli

On every interval between atom spheres the field is T = gamma x/|x|^n and
the profile solves u' = gamma / sqrt(r^(2n-2) - gamma^2). Fluxes jump by
weight * r^(n-1) across atoms; a solution may jump only where the outside
flux reaches sign(weight) r^(n-1).
"""

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy.optimize import bisect

from pmcm.core.config import settings
from pmcm.core.errors import (
    DomainError,
    InfeasibleError,
    InvalidInputError,
    NonCoerciveError,
    PreconditionError,
)
from pmcm.core.geometry import segment_rule, unit_ball_volume
from pmcm.models.measure import Atom, RadialMeasure
from pmcm.models.profile import RadialDomain, RadialField, RadialProfile
from pmcm.models.solution import (
    FluxAnchor,
    JumpAnchor,
    JumpClassification,
    JumpKind,
    JumpSlot,
    OneSidedLimits,
    RadialSolution,
    SolutionFamily,
    SolutionJump,
    SolutionPiece,
)
from pmcm.services.bv_calculus import area_functional, total_variation
from pmcm.services.measure_service import hahn_lambda, integrate_against, nonextremality_ratio

Anchor = Union[FluxAnchor, JumpAnchor]


def _exact(x: float) -> Fraction:
    # decimal literal of the float, so 0.8 becomes 4/5 rather than its binary neighbour
    return Fraction(repr(float(x)))


def _interval_edges(domain: RadialDomain, m: RadialMeasure) -> List[float]:
    return [domain.r_a] + [a.radius for a in m.atoms] + [domain.r_b]


def _require_atoms_only(m: RadialMeasure) -> None:
    if not m.atoms_only:
        raise PreconditionError("closed-form radial solutions need an atoms-only measure", "atoms_only")


def field_coefficients(m: RadialMeasure, anchor: Anchor) -> Tuple[float, ...]:
    """
    Flux coefficients gamma_0..gamma_k on the k+1 intervals cut by the atoms

    Propagation gamma_{i+1} = gamma_i + weight_i r_i^(n-1) is carried out in
    exact rational arithmetic on the decimal values of the inputs.

    Args:
        m: Atoms-only radial measure
        anchor: FluxAnchor fixing one coefficient, or JumpAnchor applying the jump rule

    Returns:
        Tuple of coefficients, innermost first

    Raises:
        InfeasibleError: |gamma_i| exceeds r_lo^(n-1) on some interval
    """
    _require_atoms_only(m)
    n = m.n
    masses = [_exact(a.weight) * _exact(a.radius) ** (n - 1) for a in m.atoms]
    count = len(m.atoms) + 1
    if isinstance(anchor, JumpAnchor):
        if not 0 <= anchor.atom < len(m.atoms):
            raise InvalidInputError(f"jump anchor atom {anchor.atom} out of range")
        atom = m.atoms[anchor.atom]
        sign = 1 if atom.weight > 0 else -1 if atom.weight < 0 else 0
        start, value = anchor.atom + 1, sign * _exact(atom.radius) ** (n - 1)
    else:
        if not 0 <= anchor.interval < count:
            raise InvalidInputError(f"flux anchor interval {anchor.interval} out of range")
        start, value = anchor.interval, _exact(anchor.gamma)

    gammas: List[Optional[Fraction]] = [None] * count
    gammas[start] = value
    for i in range(start, count - 1):
        gammas[i + 1] = gammas[i] + masses[i]
    for i in range(start - 1, -1, -1):
        gammas[i] = gammas[i + 1] - masses[i]

    edges = _interval_edges(m.domain, m)
    for i, gamma in enumerate(gammas):
        bound = edges[i] ** (n - 1)
        if abs(float(gamma)) > bound * (1.0 + settings.FEASIBILITY_TOLERANCE):
            raise InfeasibleError(
                f"flux {float(gamma):.6g} exceeds r^(n-1) = {bound:.6g} on interval ({edges[i]}, {edges[i + 1]})",
                {"interval": i, "gamma": float(gamma), "bound": bound, "r_lo": edges[i], "r_hi": edges[i + 1]},
            )
    return tuple(float(g) for g in gammas)


def jump_classification(n: int, r_inner: float, r_atom: float, mu_w: float) -> JumpClassification:
    """
    Place an atom weight relative to the window [1 - q, 1 + q], q = (r_inner / r_atom)^(n-1)

    Equality at the lower end stays continuous and equality at the upper end
    stays infeasible; both set at_endpoint.
    """
    if not 0.0 < r_inner < r_atom:
        raise InvalidInputError(f"need 0 < r_inner < r_atom, got ({r_inner}, {r_atom})")
    q = (r_inner / r_atom) ** (n - 1)
    lower, upper = 1.0 - q, 1.0 + q
    size = abs(mu_w)
    tol = settings.WINDOW_TOLERANCE
    if abs(size - upper) <= tol * upper:
        return JumpClassification(JumpKind.INFEASIBLE, lower, upper, at_endpoint=True)
    if size > upper:
        return JumpClassification(JumpKind.INFEASIBLE, lower, upper)
    if abs(size - lower) <= tol * max(upper, 1.0):
        return JumpClassification(JumpKind.CONTINUOUS_ONLY, lower, upper, at_endpoint=True)
    if size < lower:
        return JumpClassification(JumpKind.CONTINUOUS_ONLY, lower, upper)
    return JumpClassification(JumpKind.JUMP_UP if mu_w > 0 else JumpKind.JUMP_DOWN, lower, upper)


def classify_atoms(domain: RadialDomain, m: RadialMeasure) -> List[JumpClassification]:
    """Window of every atom against the previous sphere (or the inner boundary)"""
    edges = _interval_edges(domain, m)
    return [jump_classification(m.n, edges[i], atom.radius, atom.weight) for i, atom in enumerate(m.atoms)]


def _theta(gamma: float, n: int, r) -> np.ndarray:
    ratio = np.asarray(r, dtype=float) ** (n - 1) / abs(gamma)
    return np.arccosh(np.maximum(ratio, 1.0))


def _check_gamma(gamma: float, n: int, r_lo: float) -> None:
    bound = r_lo ** (n - 1)
    if abs(gamma) > bound * (1.0 + settings.FEASIBILITY_TOLERANCE):
        raise DomainError(
            f"|gamma| = {abs(gamma):.6g} exceeds r_lo^(n-1) = {bound:.6g}; the profile integrand is undefined",
            {"gamma": gamma, "r_lo": r_lo, "n": n},
        )


def integrate_profile(gamma: float, n: int, r_lo: float, r_hi: float, base: float, grid) -> np.ndarray:
    """
    Sample u(r) = base + int_{r_lo}^r gamma / sqrt(s^(2n-2) - gamma^2) ds

    The substitution s^(n-1) = |gamma| cosh(theta) turns the integrand into
    gamma / ((n-1) s^(n-2)) d(theta), bounded at the singular endpoint; for
    n = 2 it is constant and the result is gamma * arccosh(r / gamma) up to
    the base shift. Other dimensions use composite Gauss-Legendre in theta
    between consecutive sample radii.

    Args:
        gamma: Flux coefficient, |gamma| <= r_lo^(n-1)
        n: Dimension
        r_lo: Left end, where u = base
        r_hi: Right end
        base: Value at r_lo
        grid: Radii in [r_lo, r_hi]

    Returns:
        u at the grid radii
    """
    if not r_lo < r_hi:
        raise InvalidInputError(f"need r_lo < r_hi, got ({r_lo}, {r_hi})")
    grid = np.asarray(grid, dtype=float)
    slack = 1e-12 * r_hi
    if grid.size and (grid.min() < r_lo - slack or grid.max() > r_hi + slack):
        raise InvalidInputError(f"grid leaves [{r_lo}, {r_hi}]")
    _check_gamma(gamma, n, r_lo)
    if gamma == 0.0:
        return np.full(grid.shape, float(base))
    grid = np.clip(grid, r_lo, r_hi)
    theta_lo = float(_theta(gamma, n, r_lo))
    theta = _theta(gamma, n, grid)
    if n == 2:
        return base + gamma * (theta - theta_lo)
    return base + np.sign(gamma) * _theta_cumulative(gamma, n, theta_lo, theta, settings.PROFILE_PANELS)


def _theta_cumulative(gamma: float, n: int, theta_lo: float, theta, panels: int) -> np.ndarray:
    # int_{theta_lo}^{theta} |gamma| / ((n-1) s^(n-2)) with s = (|gamma| cosh t)^(1/(n-1))
    theta = np.asarray(theta, dtype=float)
    order = np.argsort(theta, kind="stable")
    points = np.concatenate([[theta_lo], theta[order]])
    edges = np.unique(np.concatenate([points, np.linspace(points[0], points[-1], panels + 1)]))
    x, w = segment_rule(edges, settings.GAUSS_LEGENDRE_DEGREE)
    g = abs(gamma)
    s_power = (g * np.cosh(x)) ** ((n - 2) / (n - 1))
    segment = np.sum(w * g / ((n - 1) * s_power), axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(segment)])
    result = np.empty_like(theta)
    result[order] = np.interp(theta[order], edges, cumulative)
    return result


def increment(gamma: float, n: int, r_lo: float, r_hi: float) -> float:
    """u(r_hi) - u(r_lo) on one interval"""
    if gamma == 0.0:
        return 0.0
    _check_gamma(gamma, n, r_lo)
    theta_lo = float(_theta(gamma, n, r_lo))
    theta_hi = float(_theta(gamma, n, r_hi))
    if n == 2:
        return gamma * (theta_hi - theta_lo)
    return float(np.sign(gamma) * _theta_cumulative(gamma, n, theta_lo, np.array([theta_hi]), 16)[0])


def catenoid_profile(gamma: float, r_lo: float, r) -> np.ndarray:
    """Closed form for n = 2: gamma (arccosh(r / gamma) - arccosh(r_lo / gamma))"""
    if gamma == 0.0:
        return np.zeros_like(np.asarray(r, dtype=float))
    g = abs(gamma)
    return np.sign(gamma) * g * (np.arccosh(np.asarray(r, dtype=float) / g) - np.arccosh(r_lo / g))


def piece_area(gamma: float, n: int, r_lo: float, r_hi: float, panels: int = 32) -> float:
    """
    Graph area n omega_n int sqrt(1 + u'^2) r^(n-1) dr of one solution piece

    In theta the integrand becomes r^n / (n-1) with r^(n-1) = |gamma| cosh(theta).
    """
    n_omega = n * unit_ball_volume(n)
    if gamma == 0.0:
        return unit_ball_volume(n) * (r_hi ** n - r_lo ** n)
    theta_lo = float(_theta(gamma, n, r_lo))
    theta_hi = float(_theta(gamma, n, r_hi))
    x, w = segment_rule(np.linspace(theta_lo, theta_hi, panels + 1), settings.GAUSS_LEGENDRE_DEGREE)
    r = (abs(gamma) * np.cosh(x)) ** (1.0 / (n - 1))
    return n_omega * float(np.sum(w * r ** n / (n - 1)))


class _Structure:
    """Prefix masses and interval bounds shared by the shooting routines"""

    def __init__(self, domain: RadialDomain, m: RadialMeasure):
        self.domain = domain
        self.n = m.n
        self.edges = _interval_edges(domain, m)
        prefix = [Fraction(0)]
        for atom in m.atoms:
            prefix.append(prefix[-1] + _exact(atom.weight) * _exact(atom.radius) ** (self.n - 1))
        self.prefix = [float(p) for p in prefix]
        self.bounds = [self.edges[i] ** (self.n - 1) for i in range(len(m.atoms) + 1)]
        self.lo = max(-b - s for b, s in zip(self.bounds, self.prefix))
        self.hi = min(b - s for b, s in zip(self.bounds, self.prefix))

    def gammas(self, gamma0: float) -> List[float]:
        gammas = [gamma0 + s for s in self.prefix]
        # clip rounding overshoot at active constraints
        return [float(np.clip(g, -b, b)) for g, b in zip(gammas, self.bounds)]

    def total(self, gamma0: float) -> float:
        return sum(
            increment(g, self.n, self.edges[i], self.edges[i + 1]) for i, g in enumerate(self.gammas(gamma0))
        )

    def active(self, gamma0: float, sign: int) -> List[int]:
        tol = settings.FEASIBILITY_TOLERANCE * 10.0
        return [
            i for i, (g, b) in enumerate(zip(self.gammas(gamma0), self.bounds))
            if abs(g - sign * b) <= tol * max(b, 1.0)
        ]


def _assemble(
    domain: RadialDomain,
    m: RadialMeasure,
    phi_a: float,
    phi_b: float,
    gammas: Sequence[float],
    heights: Dict[int, float],
) -> RadialSolution:
    """Build pieces from the inner datum, adding signed slot heights (slot 0 = inner boundary)"""
    edges = _interval_edges(domain, m)
    inner_jump = heights.get(0, 0.0)
    value = phi_a + inner_jump
    pieces, jumps = [], []
    for i, gamma in enumerate(gammas):
        if i > 0 and heights.get(i, 0.0) != 0.0:
            height = heights[i]
            jumps.append(SolutionJump(edges[i], abs(height), 1 if height > 0 else -1))
            value += height
        pieces.append(SolutionPiece(edges[i], edges[i + 1], gamma, value))
        value += increment(gamma, m.n, edges[i], edges[i + 1])
    return RadialSolution(
        domain=domain,
        measure=m,
        phi_a=phi_a,
        phi_b=phi_b,
        pieces=tuple(pieces),
        jumps=tuple(jumps),
        inner_jump=inner_jump,
        inner_attainment="jump" if inner_jump != 0.0 else "classical",
        outer_attainment="classical",
    )


def solve_dirichlet_radial(
    domain: RadialDomain,
    m: RadialMeasure,
    phi_a: float,
    phi_b: float,
    check_nonextremality: bool = True,
) -> Union[RadialSolution, SolutionFamily]:
    """
    Radial minimizer of the capillary functional with constant boundary data

    The anchor gamma_0 ranges over the interval where every piece satisfies
    |gamma_i| <= r_lo^(n-1); the total increment is strictly increasing
    there. Data inside the reachable range give a continuous solution by
    bisection. Beyond it the extreme anchor is used and the excess becomes
    vertical mass on the slots whose constraint is active and whose jump
    rule has the right sign: the inner boundary, or an atom of matching sign.
    One slot gives a unique solution, several give a family.

    Args:
        domain: Annulus and container ball
        m: Atoms-only measure
        phi_a: Datum on the inner boundary sphere
        phi_b: Datum on the outer boundary sphere
        check_nonextremality: Refuse measures with L_hat >= 1

    Returns:
        RadialSolution, or SolutionFamily when the jump heights are not unique

    Raises:
        InfeasibleError: A window fails or the data need a jump no slot can carry
        NonCoerciveError: L_hat >= 1
    """
    _require_atoms_only(m)
    for atom, window in zip(m.atoms, classify_atoms(domain, m)):
        if window.kind is JumpKind.INFEASIBLE:
            raise InfeasibleError(
                f"necessary condition violated at r={atom.radius:g}: |weight| {abs(atom.weight):g} "
                f"outside window [{window.lower:.6g}, {window.upper:.6g}]",
                {"radius": atom.radius, "weight": atom.weight, "window": [window.lower, window.upper]},
            )
    if check_nonextremality and m.atoms:
        l_hat = nonextremality_ratio(m)
        if l_hat >= 1.0:
            raise NonCoerciveError(f"measure is not certified non-extremal: L_hat = {l_hat:.6g}", l_hat)

    structure = _Structure(domain, m)
    if structure.lo > structure.hi + settings.FEASIBILITY_TOLERANCE:
        raise InfeasibleError(
            "no flux anchor satisfies every interval bound",
            {"anchor_range": [structure.lo, structure.hi], "prefix_masses": structure.prefix},
        )
    lo, hi = structure.lo, max(structure.hi, structure.lo)
    target = phi_b - phi_a
    f_lo, f_hi = structure.total(lo), structure.total(hi)
    logger.debug(f"anchor range [{lo:.6g}, {hi:.6g}], reachable increments [{f_lo:.6g}, {f_hi:.6g}], target {target:.6g}")

    if f_lo <= target <= f_hi:
        gamma0 = _shoot(structure, target, lo, hi, f_lo, f_hi)
        return _assemble(domain, m, phi_a, phi_b, structure.gammas(gamma0), {})

    direction = 1 if target > f_hi else -1
    gamma0 = hi if direction > 0 else lo
    excess = target - f_hi if direction > 0 else f_lo - target
    slots = []
    for i in structure.active(gamma0, direction):
        if i == 0:
            slots.append(JumpSlot(0, domain.r_a, direction))
        elif np.sign(m.atoms[i - 1].weight) == direction:
            slots.append(JumpSlot(i, m.atoms[i - 1].radius, direction))
    if not slots:
        raise InfeasibleError(
            f"boundary increment {target:.6g} outside the reachable range [{f_lo:.6g}, {f_hi:.6g}]",
            {"reachable": [f_lo, f_hi], "target": target},
            jump_hint="a jump is required but no active interval ends at a sphere whose jump rule matches its sign",
        )
    gammas = structure.gammas(gamma0)
    if len(slots) == 1:
        logger.info(f"unique jump solution: height {excess:.6g} at r={slots[0].radius:g}")
        return _assemble(domain, m, phi_a, phi_b, gammas, {slots[0].index: direction * excess})

    first, last = slots[0], slots[-1]

    def builder(t: float) -> RadialSolution:
        if not -1e-12 * max(excess, 1.0) <= t <= excess * (1.0 + 1e-12):
            raise InvalidInputError(f"translation parameter {t} outside [0, {excess}]")
        t = min(max(t, 0.0), excess)
        return _assemble(domain, m, phi_a, phi_b, gammas, {first.index: direction * t, last.index: direction * (excess - t)})

    logger.info(f"non-unique radial solution: {len(slots)} slots share excess {excess:.6g}")
    return SolutionFamily(domain, m, phi_a, phi_b, tuple(gammas), tuple(slots), excess, builder)


def _shoot(structure: _Structure, target: float, lo: float, hi: float, f_lo: float, f_hi: float) -> float:
    if target == f_hi:
        return hi
    if target == f_lo or hi <= lo:
        return lo
    shrink = settings.BRACKET_SHRINK * (hi - lo)
    a, b = lo + shrink, hi - shrink
    f_a, f_b = structure.total(a), structure.total(b)
    if target < f_a:
        a, b = lo, a
    elif target > f_b:
        a, b = b, hi
    return float(bisect(lambda g: structure.total(g) - target, a, b, xtol=settings.SHOOTING_TOLERANCE, maxiter=400))


def oscillation_bound(domain: RadialDomain, m: RadialMeasure) -> float:
    """Sum over intervals of the largest increment any admissible flux can produce"""
    edges = _interval_edges(domain, m)
    return sum(
        increment(edges[i] ** (m.n - 1), m.n, edges[i], edges[i + 1]) for i in range(len(edges) - 1)
    )


def two_sphere_configuration(
    n: int, r1: float, r2: float, r3: float, r4: float, mu2: float, R_B: Optional[float] = None
) -> Tuple[RadialDomain, RadialMeasure, float]:
    """
    Annulus (r1, r4) with spheres at r2, r3 whose solutions come in a translation family

    mu3 = 1 - (r2 / r3)^(n-1) puts the outer sphere at the lower end of its
    window, so the flux leaving r2 at r2^(n-1) reaches r3^(n-1) exactly.

    Returns:
        (domain, measure, oscillation bound C); data phi_b - phi_a > C force the family
    """
    if not 0.0 < r1 < r2 < r3 < r4:
        raise InvalidInputError(f"radii must increase, got {(r1, r2, r3, r4)}")
    lower = 1.0 - (r1 / r2) ** (n - 1)
    if not lower < mu2 < 1.0:
        raise InvalidInputError(f"mu2 = {mu2} outside ({lower:.6g}, 1)")
    if r4 ** (n - 1) < r1 ** (n - 1) + r3 ** (n - 1):
        raise InvalidInputError(f"outer radius {r4} too small: need r4^(n-1) >= r1^(n-1) + r3^(n-1)")
    mu3 = 1.0 - (r2 / r3) ** (n - 1)
    domain = RadialDomain(n, r1, r4, R_B if R_B is not None else r4 + 1.0)
    measure = RadialMeasure(domain, (Atom(r2, mu2), Atom(r3, mu3)))
    return domain, measure, oscillation_bound(domain, measure)


def _piece_index(sol: RadialSolution, r: np.ndarray) -> np.ndarray:
    inner_edges = np.array([piece.r_lo for piece in sol.pieces[1:]])
    return np.searchsorted(inner_edges, r, side="right")


def solution_values(sol: RadialSolution, r) -> np.ndarray:
    """u at radii; at a jump radius the value from the inside"""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    index = np.searchsorted(np.array([p.r_lo for p in sol.pieces[1:]]), r, side="left")
    values = np.empty_like(r)
    n = sol.domain.n
    for i, piece in enumerate(sol.pieces):
        mask = index == i
        if np.any(mask):
            values[mask] = integrate_profile(piece.gamma, n, piece.r_lo, piece.r_hi, piece.base, r[mask])
    return values


def sample_solution(sol: RadialSolution, cells: int = 200, grid=None) -> RadialProfile:
    """
    Profile on a grid that contains every sphere of the solution

    The node at a sphere carries the inside trace; the outside trace is the
    next piece's base, so jumps are recorded exactly.
    """
    domain = sol.domain
    spheres = [piece.r_lo for piece in sol.pieces[1:]]
    base_grid = np.linspace(domain.r_a, domain.r_b, cells + 1) if grid is None else np.asarray(grid, dtype=float)
    grid = np.unique(np.concatenate([base_grid, spheres]))
    left = solution_values(sol, grid)
    right = left.copy()
    right[0] = sol.pieces[0].base
    for i, piece in enumerate(sol.pieces[1:], start=1):
        j = int(np.searchsorted(grid, piece.r_lo))
        right[j] = piece.base
    return RadialProfile.from_traces(domain, grid, left, right, atol=settings.JUMP_THRESHOLD)


def solution_field(sol: RadialSolution, grid) -> RadialField:
    """T_r = gamma / r^(n-1) at cell midpoints"""
    grid = np.asarray(grid, dtype=float)
    mid = 0.5 * (grid[:-1] + grid[1:])
    gammas = np.array(sol.gammas)[_piece_index(sol, mid)]
    return RadialField(sol.domain, grid, gammas / mid ** (sol.domain.n - 1))


def solution_gradient(sol: RadialSolution, grid) -> np.ndarray:
    """Exact u' at cell midpoints"""
    grid = np.asarray(grid, dtype=float)
    mid = 0.5 * (grid[:-1] + grid[1:])
    gammas = np.array(sol.gammas)[_piece_index(sol, mid)]
    power = mid ** (sol.domain.n - 1)
    return gammas / np.sqrt(power ** 2 - gammas ** 2)


def evaluate_T(sol: RadialSolution, r: float) -> Union[float, OneSidedLimits]:
    """
    Radial component of T at r

    At a sphere between two pieces both one-sided limits are returned.
    """
    domain = sol.domain
    if not domain.r_a <= r <= domain.r_b:
        raise InvalidInputError(f"r = {r} outside [{domain.r_a}, {domain.r_b}]")
    power = r ** (domain.n - 1)
    for inner, outer in zip(sol.pieces[:-1], sol.pieces[1:]):
        if r == outer.r_lo:
            return OneSidedLimits(inner.gamma / power, outer.gamma / power)
    index = int(_piece_index(sol, np.array([r]))[0])
    return sol.pieces[index].gamma / power


def trivial_competitor_energy(domain: RadialDomain, phi_a: float, phi_b: float) -> float:
    """Energy of z_phi: the datum outside Omega and 0 inside, with the trace mismatch paid on both spheres"""
    return (
        domain.container_volume
        + float(domain.sphere_area(domain.r_a)) * abs(phi_a)
        + float(domain.sphere_area(domain.r_b)) * abs(phi_b)
    )


def energy_radial(
    target: Union[RadialSolution, RadialProfile],
    m: RadialMeasure,
    phi_a: Optional[float] = None,
    phi_b: Optional[float] = None,
) -> float:
    """
    Capillary functional over B of a solution or profile extended by the data

    Args:
        target: Closed-form solution (its own data are used) or a profile
        m: Measure on the annulus
        phi_a: Inner datum, required for profiles
        phi_b: Outer datum, required for profiles

    Returns:
        |B minus Omega| + area over Omega + trace mismatches + int u^lambda dmu
    """
    domain = m.domain
    s_a, s_b = float(domain.sphere_area(domain.r_a)), float(domain.sphere_area(domain.r_b))
    split = hahn_lambda(m)
    if isinstance(target, RadialSolution):
        sol = target
        n = domain.n
        area = sum(piece_area(p.gamma, n, p.r_lo, p.r_hi) for p in sol.pieces)
        area += sum(float(domain.sphere_area(j.radius)) * j.height for j in sol.jumps)
        ends = solution_values(sol, np.array([domain.r_b]))
        traces = s_a * abs(sol.base_value - sol.phi_a) + s_b * abs(sol.phi_b - float(ends[0]))
        atoms = 0.0
        for atom, flag, inner, outer in zip(m.atoms, split.atom_indicators, sol.pieces[:-1], sol.pieces[1:]):
            inside = inner.base + increment(inner.gamma, n, inner.r_lo, inner.r_hi)
            lower, upper = min(inside, outer.base), max(inside, outer.base)
            value = upper if flag else lower
            atoms += float(domain.sphere_area(atom.radius)) * atom.weight * value
        return domain.exterior_volume + area + traces + atoms
    if phi_a is None or phi_b is None:
        raise InvalidInputError("profile energies need both boundary data")
    p = target
    traces = s_a * abs(p.inner_trace - phi_a) + s_b * abs(phi_b - p.outer_trace)
    return domain.exterior_volume + area_functional(p) + traces + integrate_against(m, p, split)


def coercivity_lower_bound(p: RadialProfile, l_value: float, phi_a: float, phi_b: float) -> float:
    """(1 - L) |Du_0|(B) - int |Tr phi| with u_0 the zero extension of the profile"""
    domain = p.domain
    s_a, s_b = float(domain.sphere_area(domain.r_a)), float(domain.sphere_area(domain.r_b))
    extended = total_variation(p) + s_a * abs(p.inner_trace) + s_b * abs(p.outer_trace)
    return (1.0 - l_value) * extended - (s_a * abs(phi_a) + s_b * abs(phi_b))
