"""
Certificates for weak solutions: field bound, divergence, pairing identity,
field formula, a concavity witness for uniqueness and a comparison check
"""

from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from pmcm.core.config import settings
from pmcm.core.errors import InvalidInputError, PreconditionError
from pmcm.core.geometry import composite_rule
from pmcm.core.kernels import smooth_step, smooth_step_derivative
from pmcm.models.measure import HahnSplit, RadialMeasure
from pmcm.models.profile import RadialField, RadialProfile
from pmcm.models.solution import RadialSolution
from pmcm.schemas.report_schemas import CertificateReport, MaxPrincipleVerdict, TFormulaReport, UniquenessVerdict
from pmcm.services.measure_service import hahn_lambda
from pmcm.services.radial_solver import sample_solution, solution_field, solution_gradient

CONDITION_NAMES = ("field_bound", "pairing_identity", "divergence", "t_formula")


def _check_sampling(u: RadialProfile, T: RadialField) -> None:
    if u.domain != T.domain:
        raise InvalidInputError("profile and field live on different domains")
    if u.grid.size != T.grid.size or not np.allclose(u.grid, T.grid, rtol=0.0, atol=1e-12 * u.domain.r_b):
        raise InvalidInputError("field is not sampled on the profile grid")


def _cell_volumes(u: RadialProfile) -> np.ndarray:
    return u.domain.sphere_coefficient * u.midpoints ** (u.domain.n - 1) * u.widths


def _slopes(u: RadialProfile, gradient) -> np.ndarray:
    if gradient is None:
        return u.slopes
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != (u.cell_count,):
        raise InvalidInputError(f"gradient needs one value per cell, got shape {gradient.shape}")
    return gradient


def plateau_bumps(r_a: float, r_b: float, count: Optional[int] = None) -> List[Tuple[float, float, float]]:
    """Nested plateau supports (a_k, b_k) with ramp width d; the innermost has no plateau"""
    count = settings.TEST_BUMPS if count is None else count
    d = (r_b - r_a) / (2.0 * (count + 1))
    return [(r_a + k * d, r_b - k * d, d) for k in range(1, count + 1)]


def _bump_values(r, a: float, b: float, d: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return smooth_step((r - a) / d) * smooth_step((b - r) / d)


def _bump_slope(r, a: float, b: float, d: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    up, down = smooth_step((r - a) / d), smooth_step((b - r) / d)
    return (smooth_step_derivative((r - a) / d) * down - up * smooth_step_derivative((b - r) / d)) / d


def divergence_residual(T: RadialField, m: RadialMeasure, count: Optional[int] = None) -> float:
    """
    max over test bumps psi of |int T . grad psi + int psi dmu| / ||psi||_W11

    The flux r^(n-1) T_r is taken constant on each cell, so the first
    integral telescopes to node values of psi and is exact for fluxes that
    are piecewise constant between atom spheres.
    """
    domain = T.domain
    n = domain.n
    coefficient = domain.sphere_coefficient
    fluxes = T.fluxes
    worst = 0.0
    for a, b, d in plateau_bumps(domain.r_a, domain.r_b, count):
        psi = _bump_values(T.grid, a, b, d)
        field_part = coefficient * float(np.dot(fluxes, np.diff(psi)))
        atoms = float(np.dot(m.flux_masses, _bump_values(m.radii, a, b, d))) if m.atoms else 0.0
        density = m.density.integrate(a, b, n, weight=lambda r: _bump_values(r, a, b, d))
        measure_part = coefficient * (atoms + density)
        x, w = composite_rule(a, b, 64, settings.GAUSS_LEGENDRE_DEGREE)
        norm = coefficient * float(np.sum(w * (np.abs(_bump_values(x, a, b, d)) + np.abs(_bump_slope(x, a, b, d)))
                                          * x ** (n - 1)))
        worst = max(worst, abs(field_part + measure_part) / norm)
    return worst


def _jump_lambda(radius: float, m: Optional[RadialMeasure], split: Optional[HahnSplit], flux_jump: float) -> float:
    if m is not None and split is not None:
        for atom, flag in zip(m.atoms, split.atom_indicators):
            if abs(atom.radius - radius) <= 1e-12 * m.domain.r_b:
                return float(flag)
        return 0.5
    if flux_jump > 0.0:
        return 0.0
    if flux_jump < 0.0:
        return 1.0
    return 0.5


def jump_trace_defects(
    u: RadialProfile,
    T: RadialField,
    m: Optional[RadialMeasure] = None,
    split: Optional[HahnSplit] = None,
) -> List[float]:
    """
    |(1 - lambda) t_+ + lambda t_- - 1| at every jump

    t_+ and t_- are the normal traces of T on the u+ and u- sides, the
    normal pointing towards u+, read from the fluxes of the adjacent cells.
    Without a measure, lambda follows the sign of the flux jump.
    """
    fluxes = T.fluxes
    n = u.domain.n
    defects = []
    for j, jump in zip(u.jump_nodes, u.jumps):
        inner, outer = fluxes[j - 1], fluxes[j]
        power = jump.radius ** (n - 1)
        if jump.orientation > 0:
            t_plus, t_minus = outer / power, inner / power
        else:
            t_plus, t_minus = -inner / power, -outer / power
        lam = _jump_lambda(jump.radius, m, split, outer - inner)
        defects.append(abs((1.0 - lam) * t_plus + lam * t_minus - 1.0))
    return defects


def pairing_sides(
    u: RadialProfile,
    T: RadialField,
    m: RadialMeasure,
    split: Optional[HahnSplit] = None,
    gradient=None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    (T, Du)_lambda and sqrt(1 + |Du|^2) - sqrt(1 - |T|^2) dx as masses on the
    carrier cells followed by the jump spheres

    On cells the pairing is T u' times the cell volume; on a jump sphere it
    is div(uT) - u^lambda div T with the traces of the adjacent cell fluxes,
    and the right side is the jump part of |Du|.
    """
    _check_sampling(u, T)
    split = hahn_lambda(m) if split is None else split
    vol = _cell_volumes(u)
    g = _slopes(u, gradient)
    t = T.values
    fluxes = T.fluxes
    n = u.domain.n
    coefficient = u.domain.sphere_coefficient
    pairing = [t * g * vol]
    area = [(np.sqrt(1.0 + g * g) - np.sqrt(np.maximum(1.0 - t * t, 0.0))) * vol]
    for j, jump in zip(u.jump_nodes, u.jumps):
        inner, outer = fluxes[j - 1], fluxes[j]
        lam = _jump_lambda(jump.radius, m, split, outer - inner)
        representative = lam * jump.u_plus + (1.0 - lam) * jump.u_minus
        value = jump.outer * outer - jump.inner * inner - representative * (outer - inner)
        pairing.append(np.array([coefficient * value]))
        area.append(np.array([coefficient * jump.radius ** (n - 1) * jump.height]))
    return np.concatenate(pairing), np.concatenate(area)


def pairing_residual(
    u: RadialProfile,
    T: RadialField,
    m: RadialMeasure,
    split: Optional[HahnSplit] = None,
    gradient=None,
) -> float:
    """Total-variation distance between the two sides of the pairing identity"""
    pairing, area = pairing_sides(u, T, m, split, gradient)
    return float(np.sum(np.abs(pairing - area)))


def pairing_excess(
    u: RadialProfile,
    T: RadialField,
    m: RadialMeasure,
    split: Optional[HahnSplit] = None,
    gradient=None,
) -> float:
    """
    Mass of the positive part of |(T, Du)_lambda| - (sqrt(1 + |Du|^2) - sqrt(1 - |T|^2) dx)

    Zero on cells for every sub-unit field. On jump spheres the traces are
    read from cell-midpoint fluxes, which can exceed the bound by O(h).
    """
    pairing, area = pairing_sides(u, T, m, split, gradient)
    return float(np.sum(np.maximum(np.abs(pairing) - area, 0.0)))


def check_T_formula(
    u: RadialProfile,
    T: RadialField,
    tol: Optional[float] = None,
    m: Optional[RadialMeasure] = None,
    gradient=None,
) -> TFormulaReport:
    """
    L1 distance of T and u' / sqrt(1 + u'^2) over the cells, plus the trace
    identity on jump spheres

    Args:
        u: Profile
        T: Field on the same grid
        tol: Pass threshold for both numbers
        m: Measure whose Hahn split selects lambda at atoms; optional
        gradient: Exact u' at cell midpoints, replacing the cell slopes
    """
    _check_sampling(u, T)
    tol = settings.ANALYTIC_TOLERANCE if tol is None else tol
    g = _slopes(u, gradient)
    residual = float(np.sum(np.abs(T.values - g / np.sqrt(1.0 + g * g)) * _cell_volumes(u)))
    split = hahn_lambda(m) if m is not None else None
    defects = jump_trace_defects(u, T, m, split)
    defect = max(defects, default=0.0)
    return TFormulaReport(residual=residual, jump_trace_defect=defect, passed=residual <= tol and defect <= tol)


def verify_weak_solution(
    u: RadialProfile,
    T: RadialField,
    m: RadialMeasure,
    lam: Optional[HahnSplit] = None,
    tol: Optional[float] = None,
    gradient=None,
) -> CertificateReport:
    """
    Residuals of the weak-solution conditions for a profile and its field

    Args:
        u: Profile
        T: Radial field on the profile grid
        m: Measure
        lam: Hahn split; computed from m when omitted
        tol: Threshold per residual (analytic default)
        gradient: Exact u' at cell midpoints, for closed-form inputs

    Returns:
        CertificateReport with a verdict per named condition

    Raises:
        InvalidInputError: T is not sampled on the profile grid
    """
    _check_sampling(u, T)
    if m.domain != u.domain:
        raise InvalidInputError("measure and profile live on different domains")
    tol = settings.ANALYTIC_TOLERANCE if tol is None else tol
    split = hahn_lambda(m) if lam is None else lam
    sup_norm = float(np.max(np.abs(T.values), initial=0.0))
    div = divergence_residual(T, m)
    pairing = pairing_residual(u, T, m, split, gradient)
    excess = pairing_excess(u, T, m, split, gradient)
    formula = check_T_formula(u, T, tol, m, gradient)
    conditions = {
        "field_bound": sup_norm <= 1.0 + tol,
        "pairing_identity": pairing <= tol,
        "divergence": div <= tol,
        "t_formula": formula.passed,
    }
    report = CertificateReport(
        sup_norm_T=sup_norm,
        div_residual=div,
        pairing_residual=pairing,
        pairing_excess=excess,
        t_formula_residual=formula.residual,
        jump_trace_defect=formula.jump_trace_defect,
        tolerance=tol,
        conditions=conditions,
        passed=all(conditions.values()),
    )
    if not report.passed:
        logger.info(f"certificate failed: {', '.join(report.failed_conditions())}")
    return report


def discrete_tolerance(gap: float) -> float:
    """Default certificate tolerance for minimizer output"""
    return max(settings.DISCRETE_TOLERANCE, 10.0 * gap)


def certify_radial_solution(sol: RadialSolution, cells: int = 400, tol: Optional[float] = None) -> CertificateReport:
    """Sample a closed-form solution and verify it with its exact gradient"""
    u = sample_solution(sol, cells)
    return verify_weak_solution(u, solution_field(sol, u.grid), sol.measure, tol=tol,
                                gradient=solution_gradient(sol, u.grid))


def midpoint_uniqueness_test(
    u: RadialProfile,
    T1: RadialField,
    T2: RadialField,
    m: RadialMeasure,
    lam: Optional[HahnSplit] = None,
    tol: Optional[float] = None,
) -> UniquenessVerdict:
    """
    Concavity witness for two fields attached to the same profile

    The slack int sqrt(1 - |T_mid|^2) - mean of int sqrt(1 - |T_i|^2) is
    non-negative and vanishes only for T1 = T2; a slack beyond the residual
    budget flags the pair as inconsistent.

    Both fields must be admissible (field bound and div T = mu). The pairing
    identity and the field formula are not required of them: a field that
    differs from a solution field by a divergence-free flux always breaks
    those two, and telling such a field apart is what the slack measures.

    Raises:
        PreconditionError: a field violates the field bound or div T = mu
    """
    tol = settings.ANALYTIC_TOLERANCE if tol is None else tol
    divs = []
    for name, T in (("T1", T1), ("T2", T2)):
        _check_sampling(u, T)
        sup_norm = float(np.max(np.abs(T.values), initial=0.0))
        if sup_norm > 1.0 + tol:
            raise PreconditionError(f"{name} violates the field bound: sup |T| = {sup_norm:.6g}", "field_bound")
        div = divergence_residual(T, m)
        if div > tol:
            raise PreconditionError(f"{name} violates div T = mu: residual {div:.3e}", "divergence")
        divs.append(div)
    vol = _cell_volumes(u)

    def conjugate(values: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(1.0 - values * values, 0.0))

    middle = 0.5 * (T1.values + T2.values)
    slack = float(np.sum(vol * (conjugate(middle) - 0.5 * (conjugate(T1.values) + conjugate(T2.values)))))
    budget = tol * float(np.sum(vol)) + sum(divs)
    return UniquenessVerdict(consistent=slack <= budget, slack=slack, budget=budget)


Comparable = Union[RadialProfile, RadialSolution]


def _as_profile(item: Comparable) -> RadialProfile:
    if isinstance(item, RadialSolution):
        if item.jumps or item.inner_jump != 0.0:
            raise PreconditionError("solution has jumps; the comparison principle needs continuous solutions",
                                    "continuity")
        return sample_solution(item)
    return item


def _measures_ordered(m1: RadialMeasure, m2: RadialMeasure, tol: float) -> bool:
    weights = {}
    for atom in m1.atoms:
        weights.setdefault(atom.radius, [0.0, 0.0])[0] = atom.weight
    for atom in m2.atoms:
        weights.setdefault(atom.radius, [0.0, 0.0])[1] = atom.weight
    if any(w1 > w2 + tol for w1, w2 in weights.values()):
        return False
    domain = m1.domain
    points = sorted(set(m1.density.breakpoints + m2.density.breakpoints + [domain.r_a, domain.r_b]))
    samples = np.concatenate([np.linspace(lo, hi, 65)[1:-1] for lo, hi in zip(points[:-1], points[1:])])
    return bool(np.all(m1.density(samples) <= m2.density(samples) + tol))


def compare_max_principle(
    sol1: Comparable,
    sol2: Comparable,
    m1: RadialMeasure,
    m2: RadialMeasure,
    tol: float = 1e-6,
) -> MaxPrincipleVerdict:
    """
    Check u1 >= u2 - tol on the union of both grids

    Hypotheses: both solutions continuous, m1 <= m2, and traces of u1 at
    both boundary spheres at least those of u2.

    Raises:
        PreconditionError: naming "continuity", "measure ordering" or "boundary ordering"
    """
    u1, u2 = _as_profile(sol1), _as_profile(sol2)
    if u1.domain != u2.domain or m1.domain != u1.domain or m2.domain != u1.domain:
        raise InvalidInputError("solutions and measures must share one domain")
    if u1.jumps or u2.jumps:
        raise PreconditionError("a solution has jumps; the comparison principle needs continuous solutions",
                                "continuity")
    if not _measures_ordered(m1, m2, 1e-12):
        raise PreconditionError("measures are not ordered: need m1 <= m2", "measure ordering")
    if u1.inner_trace < u2.inner_trace - tol or u1.outer_trace < u2.outer_trace - tol:
        raise PreconditionError("boundary traces are not ordered: need Tr u1 >= Tr u2", "boundary ordering")
    grid = np.union1d(u1.grid, u2.grid)
    gap = u1.evaluate(grid) - u2.evaluate(grid)
    worst = int(np.argmin(gap))
    verdict = MaxPrincipleVerdict(holds=bool(gap[worst] >= -tol), worst_radius=float(grid[worst]),
                                  worst_gap=float(gap[worst]), tolerance=tol)
    if not verdict.holds:
        logger.warning(f"comparison violated at r={verdict.worst_radius:g}: u1 - u2 = {verdict.worst_gap:.3e}")
    return verdict
