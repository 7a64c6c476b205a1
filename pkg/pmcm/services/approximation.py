"""
Smooth approximation: mollified measures, the Gamma-convergence sweep,
nested-cutoff smoothing of radial profiles and one-sided truncation
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from pmcm.core.config import settings
from pmcm.core.errors import InvalidInputError, NonCoerciveError
from pmcm.core.geometry import composite_rule, gauss_legendre
from pmcm.core.kernels import BUMP_PANELS, cumulative_bump, inverse_cumulative_bump, mollifier, smooth_step
from pmcm.models.measure import KernelPiece, RadialDensity, RadialInterval, RadialMeasure
from pmcm.models.problem import RadialCarrier, RadialProblem
from pmcm.models.profile import RadialProfile
from pmcm.models.solution import SolutionFamily
from pmcm.schemas.report_schemas import GammaRow, GammaTable
from pmcm.services.bv_calculus import area_functional, l1_distance, lambda_representative, total_variation
from pmcm.services.measure_service import nonextremality_ratio
from pmcm.services.minimizer import minimize
from pmcm.services.radial_solver import energy_radial, sample_solution, solve_dirichlet_radial


def mollify_measure(m: RadialMeasure, delta: float) -> RadialMeasure:
    """
    Replace every atom by the divergence of its mollified flux step

    The flux r^(n-1) T_r of the atom part jumps by weight_i r_i^(n-1) at
    r_i; mollifying that step with the standard bump of width delta and
    dividing its derivative by r^(n-1) gives the density below. Each
    atom becomes BUMP_PANELS kernel pieces aligned with the panels that
    normalize the bump, so the mass over Omega is preserved to rounding.
    Any density of m is kept.

    Raises:
        InvalidInputError: delta not positive, or too large for the atom gaps
    """
    if not delta > 0.0:
        raise InvalidInputError(f"delta must be positive, got {delta}")
    domain = m.domain
    if m.atoms:
        boundary = min(m.atoms[0].radius - domain.r_a, domain.r_b - m.atoms[-1].radius)
        gaps = np.diff([a.radius for a in m.atoms])
        limit = min([boundary] + [0.5 * g for g in gaps])
        if delta >= limit:
            raise InvalidInputError(
                f"delta {delta} too large: kernel supports must stay apart and inside the annulus (limit {limit:.6g})",
                {"delta": delta, "limit": limit},
            )
    pieces: List = list(m.density.pieces)
    for atom in m.atoms:
        if atom.weight == 0.0:
            continue
        mass = atom.weight * atom.radius ** (m.n - 1)
        edges = atom.radius + delta * np.linspace(-1.0, 1.0, BUMP_PANELS + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces.append(KernelPiece(float(lo), float(hi), atom.radius, delta, mass, m.n))
    logger.debug(f"mollified {len(m.atoms)} atoms with delta={delta}")
    return RadialMeasure(domain, (), RadialDensity(tuple(pieces)))


@dataclass(frozen=True)
class GammaExperimentConfig:
    measure: RadialMeasure
    phi_a: float
    phi_b: float
    grid_step: float = 0.02
    tol_gap: float = 1e-4
    max_iter: int = 200_000
    family_samples: int = 5


def _limit(config: GammaExperimentConfig) -> Tuple[float, List[RadialProfile]]:
    """Minimum of the limit functional and the profiles of its minimizers"""
    m = config.measure
    if m.atoms_only:
        result = solve_dirichlet_radial(m.domain, m, config.phi_a, config.phi_b)
        if isinstance(result, SolutionFamily):
            members = result.members(config.family_samples)
            return energy_radial(members[0], m), [sample_solution(s) for s in members]
        return energy_radial(result, m), [sample_solution(result)]
    problem = RadialProblem(RadialCarrier.uniform(m.domain, config.grid_step, m), m, config.phi_a, config.phi_b)
    u, _, report = minimize(problem, config.tol_gap, config.max_iter)
    return report.energy, [u]


def _gamma_row(config: GammaExperimentConfig, delta: float) -> Dict[str, object]:
    mollified = mollify_measure(config.measure, delta)
    l_hat = nonextremality_ratio(mollified)
    if l_hat >= 1.0:
        raise NonCoerciveError(f"mollified measure at delta={delta} is not certified non-extremal", l_hat, delta)
    step = min(config.grid_step, delta / 4.0)
    problem = RadialProblem(RadialCarrier.uniform(mollified.domain, step, mollified), mollified,
                            config.phi_a, config.phi_b)
    u, _, report = minimize(problem, config.tol_gap, config.max_iter)
    return {"delta": delta, "energy": report.energy, "L_hat": l_hat, "solver_gap": report.gap, "profile": u}


def gamma_experiment(
    config: GammaExperimentConfig,
    deltas: Sequence[float],
    jobs: int = 1,
) -> GammaTable:
    """
    Minimize the functionals of mollified measures along decreasing widths

    Each row reports the discrete minimum, its distance to the limit minimum
    and the L1 distance of the minimizer to the nearest limit minimizer
    (for a family, the nearest sampled member). Gaps must decrease up to
    twice the solver tolerance.

    Args:
        config: Base measure, data and solver settings
        deltas: Strictly decreasing mollification widths
        jobs: Worker processes for the sweep

    Raises:
        NonCoerciveError: the base measure or a mollified one has L_hat >= 1
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(b >= a for a, b in zip(deltas[:-1], deltas[1:])):
        raise InvalidInputError(f"deltas must be a non-empty strictly decreasing list, got {deltas}")
    base_l = nonextremality_ratio(config.measure)
    if base_l >= 1.0:
        raise NonCoerciveError("base measure is not certified non-extremal", base_l)
    limit_energy, limit_profiles = _limit(config)
    logger.info(f"gamma sweep over {len(deltas)} widths, limit energy {limit_energy:.10g}, jobs={jobs}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_gamma_row, [config] * len(deltas), deltas))
    else:
        results = [_gamma_row(config, delta) for delta in deltas]
    rows = []
    for result in results:
        profile = result.pop("profile")
        distance = min(l1_distance(profile, limit) for limit in limit_profiles)
        rows.append(GammaRow(energy_gap=abs(result["energy"] - limit_energy), l1_distance=distance, **result))
    monotone = all(b.energy_gap <= a.energy_gap + 2.0 * config.tol_gap for a, b in zip(rows[:-1], rows[1:]))
    if not monotone:
        logger.warning("energy gaps are not monotone within twice the solver tolerance")
    return GammaTable(limit_energy=limit_energy, rows=rows, monotone=monotone, final_gap=rows[-1].energy_gap)


class _Smoother:
    """
    Nested-cutoff mollification of a radial profile

    Level k covers points at boundary distance between d_{k+1} and
    d_{k-1} with d_k = L/4 * 2^-k; levels below the last are mollified with
    their own width, the last level (the boundary layer) is kept as is.
    """

    def __init__(self, p: RadialProfile, levels: Optional[int], resolution: Optional[int]):
        self.p = p
        domain = p.domain
        self.r_a, self.r_b = domain.r_a, domain.r_b
        width = domain.width
        self.jumps = [(j.radius, j.outer - j.inner) for j in p.jumps]
        reach = min([min(r - self.r_a, self.r_b - r) for r, _ in self.jumps], default=0.5 * width)
        count = settings.SMOOTHING_LEVELS if levels is None else levels
        while count < 60 and width / 4.0 * 2.0 ** -(count - 1) >= reach:
            count += 1
        self.count = count
        self.d = width / 4.0 * 2.0 ** -np.arange(count + 1)
        steps = np.zeros(p.grid.size)
        for radius, height in self.jumps:
            steps += np.where(p.grid > radius, height, 0.0)
        self.continuous = p.values - steps
        self.grid = self._output_grid(settings.SMOOTHING_RESOLUTION if resolution is None else resolution)
        x, w = composite_rule(-1.0, 1.0, 4, 8)
        weights = w * mollifier(x)
        self.t, self.rho_w = x, weights / np.sum(weights)
        self.gl_nodes, self.gl_weights = gauss_legendre(16)

    def _output_grid(self, resolution: int) -> np.ndarray:
        grid = np.union1d(np.linspace(self.r_a, self.r_b, resolution + 1), self.p.grid)
        extra = []
        for radius, _ in self.jumps:
            j = int(np.searchsorted(grid, radius))
            eta = 0.5 * min(grid[j] - grid[j - 1], grid[j + 1] - grid[j])
            extra.extend([radius - eta, radius + eta])
        return np.union1d(grid, extra)

    @property
    def eta(self) -> float:
        if not self.jumps:
            return float("inf")
        return float(min(self.grid[np.searchsorted(self.grid, r) + 1] - r for r, _ in self.jumps))

    def initial_widths(self) -> np.ndarray:
        widths = 0.5 * self.d[1:self.count + 1]
        return np.minimum(widths, 0.5 * self.eta)

    def chi(self, k: int, r: np.ndarray) -> np.ndarray:
        if k < 0:
            return np.zeros_like(r)
        if k >= self.count:
            return np.ones_like(r)
        d = self.d[k + 1]
        return smooth_step((r - self.r_a - d) / d) * smooth_step((self.r_b - r - d) / d)

    def zeta(self, k: int, r: np.ndarray) -> np.ndarray:
        return self.chi(k, r) - self.chi(k - 1, r)

    def _cont(self, r: np.ndarray) -> np.ndarray:
        return np.interp(r, self.p.grid, self.continuous)

    def evaluate(self, widths: np.ndarray, shifts: Optional[np.ndarray] = None) -> np.ndarray:
        r = self.grid
        shifts = np.zeros(len(self.jumps)) if shifts is None else shifts
        value = np.zeros_like(r)
        distance = np.minimum(r - self.r_a, self.r_b - r)
        for k in range(self.count):
            delta = widths[k]
            upper = self.d[k - 1] if k > 0 else np.inf
            mask = (distance > self.d[k + 1] - delta) & (distance < upper + delta)
            if not np.any(mask):
                continue
            rk = r[mask]
            y = rk[:, None] - delta * self.t[None, :]
            value[mask] += np.sum(self.rho_w * self._cont(y) * self.zeta(k, y), axis=1)
            zk = self.zeta(k, rk)
            for (radius, height), tau in zip(self.jumps, shifts):
                x = (rk - radius) / delta + tau
                xc = np.clip(x, -1.0, 1.0)
                half = 0.5 * (xc + 1.0)
                t = -1.0 + half[:, None] * (self.gl_nodes[None, :] + 1.0)
                shifted = self.zeta(k, rk[:, None] + delta * (tau - t))
                correction = half * np.sum(self.gl_weights * mollifier(t) * (shifted - zk[:, None]), axis=1)
                value[mask] += height * (zk * cumulative_bump(x) + correction)
        layer = self.zeta(self.count, r)
        exact = self._cont(r) + sum(np.where(r > radius, height, 0.0) for radius, height in self.jumps)
        return value + layer * exact

    def reference(self) -> RadialProfile:
        """Input profile resampled on the output grid, jumps kept"""
        left = np.asarray(self.p.evaluate(self.grid), dtype=float)
        right = left.copy()
        for jump in self.p.jumps:
            j = int(np.argmin(np.abs(self.grid - jump.radius)))
            left[j], right[j] = jump.inner, jump.outer
        return RadialProfile.from_traces(self.p.domain, self.grid, left, right)


def _sup(p: RadialProfile) -> float:
    return float(max(np.max(np.abs(p.values)), np.max(np.abs(p.right_values))))


def _smooth(p: RadialProfile, eps: float, levels, resolution, lambdas: Optional[Sequence[float]]) -> RadialProfile:
    if not eps > 0.0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    smoother = _Smoother(p, levels, resolution)
    reference = smoother.reference()
    tv, area, sup = total_variation(reference), area_functional(reference), _sup(p)
    shifts = None
    targets: List[Tuple[int, float]] = []
    if lambdas is not None:
        shifts = np.zeros(len(p.jumps))
        for i, (jump, lam) in enumerate(zip(p.jumps, lambdas)):
            side = lam if jump.orientation > 0 else 1.0 - lam
            shifts[i] = inverse_cumulative_bump(side) if side != 0.5 else 0.0
            node = int(np.argmin(np.abs(smoother.grid - jump.radius)))
            targets.append((node, lambda_representative(jump.u_plus, jump.u_minus, lam)))
    widths = smoother.initial_widths()
    candidate = None
    for halving in range(settings.SMOOTHING_HALVINGS + 1):
        values = smoother.evaluate(widths, shifts)
        candidate = RadialProfile(p.domain, smoother.grid, values)
        checks = [
            float(np.max(np.abs(values))) <= (1.0 + eps) * sup,
            l1_distance(candidate, p) <= eps,
        ]
        if lambdas is None:
            checks += [total_variation(candidate) <= tv + 4.0 * eps, area_functional(candidate) <= area + 4.0 * eps]
        else:
            checks += [abs(values[node] - target) <= eps for node, target in targets]
        if all(checks):
            logger.debug(f"smoothing accepted after {halving} halvings ({smoother.count} levels)")
            return candidate
        widths = 0.5 * widths
    logger.warning(f"smoothing did not meet every bound after {settings.SMOOTHING_HALVINGS} halvings")
    return candidate


def smooth_profile(
    p: RadialProfile,
    eps: float,
    levels: Optional[int] = None,
    resolution: Optional[int] = None,
) -> RadialProfile:
    """
    Continuous approximation of a BV profile by nested cutoffs and mollifiers

    u_eps = sum_k rho_{delta_k} * (u zeta_k) over a partition of unity
    refined towards the boundary. Widths start at half the level spacing
    and are halved until, on the output grid, TV and area grow by at most
    4 eps, sup |u_eps| <= (1 + eps) sup |u| and ||u_eps - u||_L1 <= eps.
    At a jump radius the value tends to the midpoint of the traces.

    Args:
        p: Profile
        eps: Accuracy
        levels: Minimum number of mollified levels
        resolution: Uniform cells of the output grid before merging the input nodes

    Returns:
        Profile without jump records on the output grid
    """
    return _smooth(p, eps, levels, resolution, None)


def lambda_smooth_profile(
    p: RadialProfile,
    lam_at_jumps: Union[float, Sequence[float], Mapping[float, float]],
    eps: float,
    levels: Optional[int] = None,
    resolution: Optional[int] = None,
) -> RadialProfile:
    """
    Smoothing whose value at each jump tends to u^lambda instead of u*

    Near a jump the mollified step is read at r + tau delta with
    Phi(tau) = lambda (or 1 - lambda for jumps down), Phi the cumulative
    bump, so the value at the jump radius is u^lambda up to the width.
    lambda = 1/2 gives tau = 0 and reproduces smooth_profile.

    Args:
        p: Profile
        lam_at_jumps: One lambda for all jumps, one per jump, or a map radius -> lambda
        eps: Accuracy for sup, L1 and the jump values
    """
    if isinstance(lam_at_jumps, Mapping):
        lambdas = [float(lam_at_jumps[j.radius]) for j in p.jumps]
    elif np.isscalar(lam_at_jumps):
        lambdas = [float(lam_at_jumps)] * len(p.jumps)
    else:
        lambdas = [float(v) for v in lam_at_jumps]
    if len(lambdas) != len(p.jumps):
        raise InvalidInputError(f"need one lambda per jump ({len(p.jumps)}), got {len(lambdas)}")
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise InvalidInputError(f"lambda must lie in [0, 1], got {lam}")
    if all(lam == 0.5 for lam in lambdas):
        return _smooth(p, eps, levels, resolution, None)
    return _smooth(p, eps, levels, resolution, lambdas)


def one_sided_truncate(
    p: RadialProfile,
    U: Union[RadialInterval, Tuple[float, float]],
    M: float,
) -> RadialProfile:
    """
    Cap the profile at M on the annulus U only

    The ends of U and the radii where a cell crosses M become nodes; where
    the profile exceeds M at an end of U, the cap creates a jump of height
    (v - M)+ there.
    """
    lo, hi = (U.lo, U.hi) if isinstance(U, RadialInterval) else (float(U[0]), float(U[1]))
    domain = p.domain
    if not domain.r_a <= lo < hi <= domain.r_b:
        raise InvalidInputError(f"U = ({lo}, {hi}) must lie in ({domain.r_a}, {domain.r_b})")
    if np.isinf(M) and M > 0:
        return p
    grid = p.grid
    right = p.right_values
    crossings = []
    for c in range(p.cell_count):
        a, b = right[c], p.values[c + 1]
        if (a - M) * (b - M) < 0.0:
            r = grid[c] + (M - a) / (b - a) * (grid[c + 1] - grid[c])
            if lo < r < hi:
                crossings.append(r)
    new_grid = np.union1d(grid, [x for x in (lo, hi) if domain.r_a < x < domain.r_b] + crossings)

    def traces(r: float) -> Tuple[float, float]:
        j = int(np.argmin(np.abs(grid - r)))
        if abs(grid[j] - r) <= 1e-12 * domain.r_b:
            return float(p.values[j]), float(right[j])
        value = float(p.evaluate(r))
        return value, value

    left_values, right_values = [], []
    for r in new_grid:
        inner, outer = traces(r)
        if lo < r < hi:
            inner, outer = min(inner, M), min(outer, M)
        elif r == lo:
            outer = min(outer, M)
        elif r == hi:
            inner = min(inner, M)
        left_values.append(inner)
        right_values.append(outer)
    return RadialProfile.from_traces(domain, new_grid, left_values, right_values)
