"""
Hahn split, set evaluation and the necessary / non-extremality / admissibility checks for radial measures
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from pmcm.core.config import settings
from pmcm.core.errors import InvalidInputError
from pmcm.core.geometry import cap_area, gauss_legendre
from pmcm.models.measure import Atom, HahnSplit, RadialDensity, RadialMeasure, RadialSet
from pmcm.models.profile import RadialProfile
from pmcm.schemas.report_schemas import BallConditionReport, DensityBoundReport, NonextremalityReport


def hahn_lambda(m: RadialMeasure) -> HahnSplit:
    """lambda_mu = 1 exactly where mu is negative"""
    atom_flags = tuple(1 if a.weight < 0.0 else 0 for a in m.atoms)
    density_flags = []
    for piece in m.density.pieces:
        for lo, hi, sign in piece.sign_intervals():
            density_flags.append((lo, hi, 1 if sign < 0 else 0))
    return HahnSplit(atom_flags, tuple(density_flags))


def restrict(m: RadialMeasure, split: HahnSplit, indicator: int) -> RadialMeasure:
    """mu restricted to {lambda_mu = indicator}; indicator 0 gives mu+, 1 gives -mu-"""
    atoms = tuple(a for a, flag in zip(m.atoms, split.atom_indicators) if flag == indicator)
    pieces = []
    for piece in m.density.pieces:
        for lo, hi, sign in piece.sign_intervals():
            if (1 if sign < 0 else 0) == indicator:
                pieces.append((piece, lo, hi))
    return RadialMeasure(m.domain, atoms, _clip_pieces(pieces))


def _clip_pieces(parts) -> RadialDensity:
    clipped = []
    for piece, lo, hi in parts:
        if hasattr(piece, "coefficients"):
            clipped.append(type(piece)(lo, hi, piece.coefficients))
        else:
            clipped.append(type(piece)(lo, hi, piece.center, piece.width, piece.flux_mass, piece.n))
    return RadialDensity(tuple(clipped))


def _check_set(m: RadialMeasure, radial_set: RadialSet) -> List[Tuple[float, float]]:
    scale = m.domain.r_b
    for interval in radial_set.intervals:
        if interval.lo < m.domain.r_a - 1e-14 * scale or interval.hi > m.domain.r_b + 1e-14 * scale:
            raise InvalidInputError(
                f"set interval ({interval.lo}, {interval.hi}) leaves the annulus ({m.domain.r_a}, {m.domain.r_b})"
            )
    return radial_set.merged()


def measure_of(m: RadialMeasure, radial_set: RadialSet) -> float:
    """
    mu(E^1) for a union of annuli

    Atoms count only when they lie strictly inside a merged component, so an
    atom on an endpoint contributes nothing whatever the closure flags say.
    """
    total = 0.0
    for lo, hi in _check_set(m, radial_set):
        inside = (m.radii > lo) & (m.radii < hi)
        total += float(np.sum(m.flux_masses[inside]))
        total += m.density.integrate(lo, hi, m.n)
    return m.domain.sphere_coefficient * total


def variation_of(m: RadialMeasure, radial_set: RadialSet) -> float:
    """|mu|(E^1) computed directly from |weights| and |h|"""
    total = 0.0
    for lo, hi in _check_set(m, radial_set):
        inside = (m.radii > lo) & (m.radii < hi)
        total += float(np.sum(np.abs(m.flux_masses[inside])))
        total += m.density.integrate(lo, hi, m.n, absolute=True)
    return m.domain.sphere_coefficient * total


def _cut_keys(m: RadialMeasure, cells: int) -> List[Tuple[float, int]]:
    # (radius, side): side -1/+1 stand for the one-sided limits r^-/r^+ at an atom
    domain = m.domain
    keys = {(float(r), 0) for r in np.linspace(domain.r_a, domain.r_b, cells + 1)}
    keys.update((float(r), 0) for r in m.density.breakpoints)
    levels = int(round(math.log2(cells)))
    for radius in m.radii:
        keys.update({(float(radius), -1), (float(radius), 1)})
        for level in range(levels + 1):
            step = domain.width / 2 ** level
            for r in (radius - step, radius + step):
                if domain.r_a < r < domain.r_b:
                    keys.add((float(r), 0))
    atom_set = set(float(r) for r in m.radii)
    return sorted(k for k in keys if not (k[1] == 0 and k[0] in atom_set))


def nonextremality_report(m: RadialMeasure, resolution: Optional[int] = None) -> NonextremalityReport:
    """
    Largest |mu(E^1)| / Per(E) over annuli with endpoints on the cut family

    The cut family is a dyadic grid of at least `resolution` cells plus the
    one-sided limits at every atom and the atoms shifted by every dyadic
    step, so enlarging the resolution can only enlarge the family. Unions of
    annuli with disjoint closures never beat their best component, and
    perimeters are taken in R^n, so boundary spheres of the annulus count.
    """
    resolution = settings.NONEXTREMALITY_RESOLUTION if resolution is None else resolution
    if resolution < len(m.atoms) + 2:
        raise InvalidInputError(f"resolution {resolution} must be at least number of atoms + 2 = {len(m.atoms) + 2}")
    cells = 2 ** max(1, math.ceil(math.log2(resolution)))
    keys = _cut_keys(m, cells)
    radii = np.array([k[0] for k in keys])
    masses = m.flux_masses
    cumulative = np.empty(len(keys))
    for idx, (radius, side) in enumerate(keys):
        below = (m.radii < radius) | ((m.radii == radius) & (side > 0))
        cumulative[idx] = float(np.sum(masses[below]))
    if not m.density.is_zero:
        cumulative += np.array([m.density.integrate(m.domain.r_a, r, m.n) for r in radii])

    weights = radii ** (m.n - 1)
    value, i, j = 0.0, 0, len(keys) - 1
    for row in range(len(keys) - 1):
        ratios = np.abs(cumulative[row + 1:] - cumulative[row]) / (weights[row + 1:] + weights[row])
        best = int(np.argmax(ratios))
        if ratios[best] > value:
            value, i, j = float(ratios[best]), row, row + 1 + best

    analytic = None
    if len(m.atoms) == 1 and m.density.is_zero:
        atom = m.atoms[0]
        analytic = abs(atom.weight) * atom.radius ** (m.n - 1) / (m.domain.r_a ** (m.n - 1) + atom.radius ** (m.n - 1))
    logger.debug(f"L_hat={value:.12g} on cut pair {keys[i]} / {keys[j]} ({cells} cells)")
    return NonextremalityReport(
        value=value,
        inner_radius=keys[i][0],
        inner_side=keys[i][1],
        outer_radius=keys[j][0],
        outer_side=keys[j][1],
        cells=cells,
        analytic_single_atom=analytic,
        non_extremal=value < 1.0,
    )


def nonextremality_ratio(m: RadialMeasure, resolution: Optional[int] = None) -> float:
    """Certified lower bound L_hat for the non-extremality constant of a radial measure"""
    return nonextremality_report(m, resolution).value


def _ball_measure(m: RadialMeasure, d: float, r: float) -> float:
    total = float(np.dot(m.weights, cap_area(m.n, m.radii, d, r))) if m.atoms else 0.0
    if not m.density.is_zero:
        weight = lambda R: cap_area(m.n, R, d, r) / R ** (m.n - 1)  # noqa: E731
        total += m.density.integrate(d - r, d + r, m.n, weight=weight)
    return total


def ball_condition_check(m: RadialMeasure, samples: Optional[int] = None) -> BallConditionReport:
    """
    Sampled check of |mu(B_r(x))| <= n omega_n r^(n-1) for balls inside the annulus

    Centers sit on the mid-sphere, on every atom sphere and on `samples`
    interior spheres; each center gets `samples` radii up to the largest
    admissible one, plus a nearly degenerate ball that tests the small-ball
    limit.
    """
    samples = settings.BALL_SAMPLES if samples is None else samples
    if samples < 1:
        raise InvalidInputError(f"samples must be >= 1, got {samples}")
    domain = m.domain
    centers = set(np.linspace(domain.r_a, domain.r_b, samples + 2)[1:-1].tolist())
    centers.add(0.5 * (domain.r_a + domain.r_b))
    centers.update(m.radii.tolist())
    worst = (0.0, 0.5 * (domain.r_a + domain.r_b), 0.0)
    for d in sorted(centers):
        r_max = min(d - domain.r_a, domain.r_b - d)
        if r_max <= 0.0:
            continue
        for r in [r_max * 1e-6] + [r_max * k / samples for k in range(1, samples + 1)]:
            ratio = abs(_ball_measure(m, d, r)) / float(domain.sphere_area(r))
            if ratio > worst[0]:
                worst = (ratio, d, r)
    return BallConditionReport(
        worst_ratio=worst[0],
        center_radius=worst[1],
        ball_radius=worst[2],
        violated=worst[0] > 1.0,
    )


def density_bound_check(m: RadialMeasure) -> DensityBoundReport:
    """
    Constants (Lambda, rho_bar) with H^(n-1)(Gamma cap B_rho(x)) <= Lambda rho^(n-1) for rho < rho_bar

    Gamma is the union of atom spheres. A sphere meets any ball in a cap
    lying on the boundary of a convex subset of that ball, hence Lambda =
    n*omega_n; below rho_bar a ball reaches at most one sphere.
    """
    domain = m.domain
    radii = m.radii
    if radii.size == 0:
        return DensityBoundReport(Lambda=0.0, rho_bar=0.5 * domain.width, spheres_within_reach=0, vacuous=True)
    gaps = [min(radii[0] - domain.r_a, domain.r_b - radii[-1])]
    if radii.size > 1:
        gaps.append(float(np.min(np.diff(radii))))
    return DensityBoundReport(
        Lambda=domain.sphere_coefficient,
        rho_bar=0.5 * float(min(gaps)),
        spheres_within_reach=1,
        vacuous=False,
    )


def cell_moments(density: RadialDensity, grid: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-cell integrals of h r^(n-1) against the two linear hat weights

    Returns (left, right) with left_c = int h r^(n-1) (1 - t) and right_c =
    int h r^(n-1) t over cell c, t the local coordinate in [0, 1].
    """
    grid = np.asarray(grid, dtype=float)
    left = np.zeros(grid.size - 1)
    right = np.zeros(grid.size - 1)
    nodes, weights = gauss_legendre(settings.GAUSS_LEGENDRE_DEGREE)
    lo_cells, hi_cells = grid[:-1], grid[1:]
    for piece in density.pieces:
        a = np.maximum(lo_cells, piece.r_lo)
        b = np.minimum(hi_cells, piece.r_hi)
        active = b > a
        if not np.any(active):
            continue
        a, b = a[active], b[active]
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        x = mid[:, None] + half[:, None] * nodes[None, :]
        values = piece(x) * x ** (n - 1) * half[:, None] * weights[None, :]
        t = (x - lo_cells[active][:, None]) / (hi_cells[active] - lo_cells[active])[:, None]
        left[active] += np.sum(values * (1.0 - t), axis=1)
        right[active] += np.sum(values * t, axis=1)
    return left, right


def representative_at(p: RadialProfile, radius: float, lam: float) -> float:
    """u^lambda at a radius: the lambda mix of the jump traces, or the plain value"""
    jump = p.jump_at(radius)
    if jump is None:
        return float(p.evaluate(radius))
    return lam * jump.u_plus + (1.0 - lam) * jump.u_minus


def integrate_against(m: RadialMeasure, p: RadialProfile, split: Optional[HahnSplit] = None) -> float:
    """int_Omega u^lambda dmu with lambda_mu selecting u- on mu+ and u+ on mu-"""
    split = split or hahn_lambda(m)
    atoms = sum(
        mass * representative_at(p, atom.radius, flag)
        for atom, mass, flag in zip(m.atoms, m.flux_masses, split.atom_indicators)
    )
    left, right = cell_moments(m.density, p.grid, m.n)
    density = float(np.dot(left, p.right_values[:-1]) + np.dot(right, p.values[1:]))
    return m.domain.sphere_coefficient * (float(atoms) + density)


def single_sphere_measure(domain, radius: float, weight: float) -> RadialMeasure:
    return RadialMeasure(domain, (Atom(radius, weight),))
