"""
First-order primal-dual minimization of the discrete capillary functional

The cell area term is written as sup over |(w0, w)| <= 1 of A (w0 + w u'),
jump slots as sup over |xi| <= 1, and the weak Dirichlet traces the same
way, so every dual prox is a projection. Steps are diagonally
preconditioned; iterates stay in a box whose size follows from the
coercivity bound, which keeps the dual objective finite and the gap a
certificate.
"""

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from pmcm.core.config import settings
from pmcm.core.errors import ConfigurationError, DivergenceError, NonCoerciveError
from pmcm.models.problem import PlanarProblem, RadialProblem, SaddleState
from pmcm.models.profile import GridFunction2D, RadialField, RadialProfile
from pmcm.schemas.report_schemas import ConvergenceReport
from pmcm.services.measure_service import cell_moments, nonextremality_ratio

Problem = Union[RadialProblem, PlanarProblem]


@dataclass(frozen=True, eq=False)
class RadialFunctional:
    """
    Assembled radial functional in the unknowns x = (u_0..u_N, s_1..s_m)

    u_j is the inner trace at node j and s_k the signed jump at the k-th atom
    node, so the cell right of an atom node starts at u_j + s_k.
    """
    problem: RadialProblem
    widths: np.ndarray
    areas: np.ndarray  # n omega_n r_mid^(n-1) dr per cell
    atom_nodes: np.ndarray
    slot_costs: np.ndarray  # sphere area times (1 - |weight| / 2)
    boundary_areas: Tuple[float, float]
    linear: np.ndarray
    constant: float
    bound: float
    l_hat: float

    @property
    def node_count(self) -> int:
        return self.widths.size + 1

    @property
    def size(self) -> int:
        return self.node_count + self.atom_nodes.size

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return x[: self.node_count], x[self.node_count:]

    def cell_gradient(self, x: np.ndarray) -> np.ndarray:
        u, s = self.split(x)
        du = u[1:] - u[:-1]
        du[self.atom_nodes] -= s
        return du / self.widths

    def value(self, x: np.ndarray) -> float:
        u, s = self.split(x)
        g = self.cell_gradient(x)
        phi_a, phi_b = self.problem.phi_a, self.problem.phi_b
        s_a, s_b = self.boundary_areas
        return float(
            self.constant
            + np.sum(self.areas * np.sqrt(1.0 + g * g))
            + np.sum(self.slot_costs * np.abs(s))
            + s_a * abs(u[0] - phi_a)
            + s_b * abs(u[-1] - phi_b)
            + np.dot(self.linear, x)
        )

    def adjoint(self, w: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """K^T applied to unit duals: cells w, then slots, then the two boundary duals"""
        out = np.zeros(self.size)
        flux = self.areas * w / self.widths
        u_part = out[: self.node_count]
        u_part[:-1] -= flux
        u_part[1:] += flux
        slots = out[self.node_count:]
        slots -= flux[self.atom_nodes]
        slots += self.slot_costs * xi[:-2]
        s_a, s_b = self.boundary_areas
        u_part[0] += s_a * xi[-2]
        u_part[-1] += s_b * xi[-1]
        return out

    def dual_value(self, w: np.ndarray, xi: np.ndarray) -> float:
        s_a, s_b = self.boundary_areas
        residual = self.adjoint(w, xi) + self.linear
        return float(
            self.constant
            + np.sum(self.areas * np.sqrt(np.maximum(1.0 - w * w, 0.0)))
            - s_a * xi[-2] * self.problem.phi_a
            - s_b * xi[-1] * self.problem.phi_b
            - self.bound * np.sum(np.abs(residual))
        )

    def steps(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Diagonal preconditioners: tau per unknown, sigma per cell row and per slot/boundary row"""
        coupling = self.areas / self.widths
        row_sum = 2.0 * coupling
        row_sum[self.atom_nodes] += coupling[self.atom_nodes]
        sigma_cells = 1.0 / row_sum
        column = np.zeros(self.size)
        u_col = column[: self.node_count]
        u_col[:-1] += coupling
        u_col[1:] += coupling
        s_a, s_b = self.boundary_areas
        u_col[0] += s_a
        u_col[-1] += s_b
        column[self.node_count:] = coupling[self.atom_nodes] + self.slot_costs
        sigma_rest = 1.0 / np.concatenate([self.slot_costs, [s_a, s_b]])
        return 1.0 / column, sigma_cells, sigma_rest

    def to_vector(self, p: RadialProfile) -> np.ndarray:
        """Unknown vector of a profile living on the carrier grid"""
        carrier = self.problem.carrier
        if p.grid.size != carrier.grid.size or not np.allclose(p.grid, carrier.grid, rtol=0.0, atol=1e-12):
            raise ConfigurationError("profile grid differs from the carrier grid")
        allowed = set(int(j) for j in self.atom_nodes)
        for j, jump in zip(p.jump_nodes, p.jumps):
            if j not in allowed:
                raise ConfigurationError(f"profile jumps at r={jump.radius}, which carries no jump slot")
        right = p.right_values
        slots = right[self.atom_nodes] - p.values[self.atom_nodes]
        return np.concatenate([p.values, slots])

    def to_profile(self, x: np.ndarray) -> RadialProfile:
        u, s = self.split(x)
        right = u.copy()
        right[self.atom_nodes] += np.where(np.abs(s) > settings.JUMP_THRESHOLD, s, 0.0)
        return RadialProfile.from_traces(self.problem.domain, self.problem.carrier.grid, u, right)

    def coercivity_floor(self, x: np.ndarray) -> float:
        """(1 - L_hat) |Du_0|(B) - int |Tr phi| for the iterate"""
        u, s = self.split(x)
        g = self.cell_gradient(x)
        s_a, s_b = self.boundary_areas
        measure = self.problem.measure
        spheres = np.asarray(measure.domain.sphere_area(measure.radii), dtype=float)
        tv = np.sum(self.areas * np.abs(g)) + np.sum(spheres * np.abs(s)) + s_a * abs(u[0]) + s_b * abs(u[-1])
        data = s_a * abs(self.problem.phi_a) + s_b * abs(self.problem.phi_b)
        return float((1.0 - self.l_hat) * tv - data)


@dataclass(frozen=True, eq=False)
class PlanarFunctional:
    """Assembled Cartesian functional; unknowns are the free node values"""
    problem: PlanarProblem
    free: np.ndarray
    fixed_values: np.ndarray
    linear: np.ndarray  # h^2 f at free nodes, zero elsewhere
    bound: float
    l_hat: float

    @property
    def h(self) -> float:
        return self.problem.carrier.h

    def full(self, free_values: np.ndarray) -> np.ndarray:
        values = self.fixed_values.copy()
        values[self.free] = free_values
        return values

    def gradient(self, values: np.ndarray) -> np.ndarray:
        h = self.h
        gx = (values[:-1, 1:] - values[:-1, :-1]) / h
        gy = (values[1:, :-1] - values[:-1, :-1]) / h
        return np.stack([gx, gy])

    def adjoint_full(self, w: np.ndarray) -> np.ndarray:
        """(h^2 grad)^T w on every node"""
        h = self.h
        out = np.zeros(self.fixed_values.shape)
        out[:-1, 1:] += h * w[0]
        out[:-1, :-1] -= h * w[0]
        out[1:, :-1] += h * w[1]
        out[:-1, :-1] -= h * w[1]
        return out

    def value(self, free_values: np.ndarray) -> float:
        values = self.full(free_values)
        g = self.gradient(values)
        area = np.sum(np.sqrt(1.0 + np.sum(g * g, axis=0))) * self.h ** 2
        return float(area + np.sum(self.linear[self.free] * free_values))

    def dual_value(self, w: np.ndarray) -> float:
        adjoint = self.adjoint_full(w)
        conjugate = np.sum(np.sqrt(np.maximum(1.0 - np.sum(w * w, axis=0), 0.0))) * self.h ** 2
        fixed = np.sum(adjoint[~self.free] * self.fixed_values[~self.free])
        residual = adjoint[self.free] + self.linear[self.free]
        return float(conjugate + fixed - self.bound * np.sum(np.abs(residual)))


def _planar_l_hat(problem: PlanarProblem) -> float:
    X, Y = problem.carrier.coordinates()
    inside = np.asarray(problem.omega(X, Y), dtype=bool)
    if not np.any(inside):
        return 0.0
    f = np.asarray(problem.density(X, Y), dtype=float) * np.ones(X.shape)
    return float(np.max(np.abs(f[inside]))) * problem.carrier.circumradius / 2.0


def assemble(problem: Problem) -> Union[RadialFunctional, PlanarFunctional]:
    """
    Build the discrete functional of a problem

    Radial: sum of A_c sqrt(1 + g_c^2) + slot costs + trace penalties with
    the boundary sphere areas + the measure term, plus |B minus Omega|.
    Atom terms pick the lower trace on positive atoms and the upper one on
    negative atoms, written as weight (u_j + s/2) minus |weight| |s| / 2.

    Raises:
        ConfigurationError: an atom is not a carrier node or |weight| >= 2
    """
    if isinstance(problem, PlanarProblem):
        return _assemble_planar(problem)
    domain = problem.domain
    carrier = problem.carrier
    measure = problem.measure
    n = domain.n
    atom_nodes = np.array(problem.atom_nodes(), dtype=int)
    weights = measure.weights
    if np.any(np.abs(weights) >= 2.0):
        raise ConfigurationError("atom weights with |weight| >= 2 make the jump slot cost non-convex",
                                 {"weights": weights.tolist()})
    spheres = np.asarray(domain.sphere_area(measure.radii), dtype=float)
    nodes = carrier.grid.size
    linear = np.zeros(nodes + atom_nodes.size)
    linear[atom_nodes] += spheres * weights
    linear[nodes:] += 0.5 * spheres * weights
    if not measure.density.is_zero:
        left, right = cell_moments(measure.density, carrier.grid, n)
        left, right = domain.sphere_coefficient * left, domain.sphere_coefficient * right
        linear[:nodes - 1] += left
        linear[1:nodes] += right
        linear[nodes:] += left[atom_nodes]
    l_hat = nonextremality_ratio(measure) if not measure.is_zero else 0.0
    s_a, s_b = float(domain.sphere_area(domain.r_a)), float(domain.sphere_area(domain.r_b))
    areas = domain.sphere_coefficient * carrier.midpoints ** (n - 1) * carrier.widths
    functional = RadialFunctional(
        problem=problem,
        widths=carrier.widths,
        areas=areas,
        atom_nodes=atom_nodes,
        slot_costs=spheres * (1.0 - 0.5 * np.abs(weights)),
        boundary_areas=(s_a, s_b),
        linear=linear,
        constant=domain.exterior_volume,
        bound=float("inf"),
        l_hat=l_hat,
    )
    if l_hat < 1.0:
        reference = functional.value(np.zeros(functional.size))
        data = s_a * abs(problem.phi_a) + s_b * abs(problem.phi_b)
        bound = 2.0 * (reference + data) / ((1.0 - l_hat) * s_a) + 1.0
        object.__setattr__(functional, "bound", bound)
    return functional


def _assemble_planar(problem: PlanarProblem) -> PlanarFunctional:
    carrier = problem.carrier
    X, Y = carrier.coordinates()
    free = problem.free_mask()
    datum = np.asarray(problem.datum(X, Y), dtype=float) * np.ones(X.shape)
    fixed = np.where(free, 0.0, datum)
    f = np.asarray(problem.density(X, Y), dtype=float) * np.ones(X.shape)
    linear = np.where(free, f * carrier.h ** 2, 0.0)
    l_hat = _planar_l_hat(problem)
    functional = PlanarFunctional(problem, free, fixed, linear, float("inf"), l_hat)
    if l_hat < 1.0:
        reference = functional.value(np.zeros(int(np.sum(free))))
        bound = float(np.max(np.abs(datum), initial=0.0)) + 2.0 * (abs(reference) + carrier.area) / (
            (1.0 - l_hat) * carrier.h
        )
        object.__setattr__(functional, "bound", bound)
    return functional


def energy(problem: Problem, u) -> float:
    """
    Discrete functional at u

    Args:
        problem: Radial or planar problem
        u: RadialProfile on the carrier grid, GridFunction2D on the planar
           grid, or a raw unknown vector
    """
    functional = assemble(problem)
    if isinstance(functional, RadialFunctional):
        x = functional.to_vector(u) if isinstance(u, RadialProfile) else np.asarray(u, dtype=float)
        return functional.value(x)
    if isinstance(u, GridFunction2D):
        return functional.value(u.values[functional.free])
    return functional.value(np.asarray(u, dtype=float))


def _project_ball(w0: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if w.ndim == w0.ndim:
        norm = np.hypot(w0, w)
    else:
        norm = np.sqrt(w0 * w0 + np.sum(w * w, axis=0))
    scale = np.maximum(norm, 1.0)
    return w0 / scale, w / scale


def _operator_norm(apply, adjoint, size: int, iterations: int, seed: int = 0) -> float:
    """Power iteration for the largest singular value of a preconditioned operator"""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(size)
    v /= np.linalg.norm(v)
    norm = 0.0
    for _ in range(iterations):
        z = adjoint(apply(v))
        norm = float(np.sqrt(np.linalg.norm(z)))
        if norm == 0.0:
            return 0.0
        v = z / np.linalg.norm(z)
    return norm


class PrimalDualMinimizer:
    """Preconditioned primal-dual iteration with over-relaxation on the primal variable"""

    def __init__(
        self,
        tol_gap: Optional[float] = None,
        max_iter: Optional[int] = None,
        check_every: Optional[int] = None,
        seed: Optional[int] = None,
    ):
        self.tol_gap = settings.DEFAULT_GAP_TOLERANCE if tol_gap is None else tol_gap
        self.max_iter = settings.DEFAULT_MAX_ITERATIONS if max_iter is None else max_iter
        self.check_every = settings.GAP_CHECK_EVERY if check_every is None else check_every
        self.seed = settings.DEFAULT_SEED if seed is None else seed

    def minimize(self, problem: Problem):
        """
        Minimize a radial or planar problem

        Returns:
            (u, T, ConvergenceReport); u is a RadialProfile or GridFunction2D,
            T a RadialField or an array of shape (2, ny, nx)

        Raises:
            NonCoerciveError: L_hat >= 1
            DivergenceError: energy exceeded DIVERGENCE_FACTOR times its initial value,
                or a radial iterate fell below the coercivity floor
        """
        functional = assemble(problem)
        if functional.l_hat >= 1.0:
            logger.error(f"refusing non-coercive problem: L_hat = {functional.l_hat:.6g}")
            raise NonCoerciveError(f"measure is not certified non-extremal: L_hat = {functional.l_hat:.6g}",
                                   functional.l_hat)
        if isinstance(functional, RadialFunctional):
            return self._minimize_radial(functional)
        return self._minimize_planar(functional)

    def _initial_state_radial(self, f: RadialFunctional) -> SaddleState:
        problem = f.problem
        grid = problem.carrier.grid
        t = (grid - grid[0]) / (grid[-1] - grid[0])
        u = problem.phi_a + t * (problem.phi_b - problem.phi_a)
        x = np.concatenate([u, np.zeros(f.atom_nodes.size)])
        tau, sigma_cells, sigma_rest = f.steps()
        cells = f.widths.size
        state = SaddleState(
            x=x,
            x_bar=x.copy(),
            w0=np.zeros(cells),
            w=np.zeros(cells),
            xi=np.zeros(f.atom_nodes.size + 2),
            tau=tau,
            sigma=np.concatenate([sigma_cells, sigma_rest]),
        )
        norm = self._radial_norm(f, state)
        if norm > 1.0:
            logger.warning(f"preconditioned operator norm {norm:.6g} > 1, rescaling steps")
            state.tau = state.tau / norm
            state.sigma = state.sigma / norm
        return state

    def _radial_norm(self, f: RadialFunctional, state: SaddleState) -> float:
        cells = f.widths.size
        sqrt_tau = np.sqrt(state.tau)
        sqrt_sigma = np.sqrt(state.sigma)

        def apply(v):
            x = sqrt_tau * v
            u, s = f.split(x)
            rows = np.concatenate([f.areas * f.cell_gradient(x), f.slot_costs * s, [f.boundary_areas[0] * u[0]],
                                   [f.boundary_areas[1] * u[-1]]])
            return sqrt_sigma * rows

        def adjoint(y):
            y = sqrt_sigma * y
            w = y[:cells]
            return sqrt_tau * f.adjoint(w, y[cells:])

        return _operator_norm(apply, adjoint, f.size, settings.POWER_ITERATIONS, self.seed)

    def _minimize_radial(self, f: RadialFunctional):
        problem = f.problem
        state = self._initial_state_radial(f)
        cells = f.widths.size
        sigma_cells = state.sigma[:cells]
        sigma_rest = state.sigma[cells:]
        rest_scale = np.concatenate([f.slot_costs, f.boundary_areas])
        cell_step = sigma_cells * f.areas
        rest_step = sigma_rest * rest_scale
        targets = np.concatenate([np.zeros(f.atom_nodes.size), [problem.phi_a, problem.phi_b]])
        initial = f.value(state.x)
        ceiling = settings.DIVERGENCE_FACTOR * max(abs(initial), 1.0)
        logger.info(f"radial minimization: {cells} cells, {f.atom_nodes.size} slots, L_hat={f.l_hat:.6g}, "
                    f"box={f.bound:.6g}, initial energy {initial:.8g}")
        converged = False
        for it in range(1, self.max_iter + 1):
            x_bar = state.x_bar
            g = f.cell_gradient(x_bar)
            state.w0, state.w = _project_ball(state.w0 + cell_step, state.w + cell_step * g)
            u_bar, s_bar = f.split(x_bar)
            rows = np.concatenate([s_bar, [u_bar[0], u_bar[-1]]])
            state.xi = np.clip(state.xi + rest_step * (rows - targets), -1.0, 1.0)
            grad = f.adjoint(state.w, state.xi) + f.linear
            x_new = np.clip(state.x - state.tau * grad, -f.bound, f.bound)
            state.x_bar = 2.0 * x_new - state.x
            state.x = x_new
            state.iteration = it
            if it % self.check_every == 0 or it == self.max_iter:
                state.energy = f.value(state.x)
                state.dual_objective = f.dual_value(state.w, state.xi)
                state.gap = state.energy - state.dual_objective
                if not np.isfinite(state.energy) or state.energy > ceiling:
                    logger.error(f"divergence at iteration {it}: energy {state.energy:.6g} > {ceiling:.6g}")
                    raise DivergenceError(f"energy {state.energy:.6g} exceeded {ceiling:.6g}",
                                          {"iteration": it, "initial_energy": initial})
                floor = f.coercivity_floor(state.x)
                if state.energy < floor - 1e-9 * max(abs(floor), 1.0):
                    logger.error(f"iterate {it} below the coercivity floor: energy {state.energy:.8g} < {floor:.8g}")
                    raise DivergenceError(f"energy {state.energy:.8g} fell below the coercivity floor {floor:.8g}",
                                          {"iteration": it, "coercivity_floor": floor})
                if it % settings.LOG_EVERY == 0:
                    logger.debug(f"iter {it}: energy={state.energy:.10g} gap={state.gap:.3e}")
                if state.gap <= self.tol_gap:
                    converged = True
                    break
        box_active = bool(np.any(np.abs(state.x) >= f.bound * (1.0 - 1e-12)))
        if box_active:
            logger.warning(f"iterate touches the box |x| <= {f.bound:.6g}")
        norm = np.maximum(np.hypot(state.w0, state.w), settings.DUAL_FLOOR)
        field = RadialField(problem.domain, problem.carrier.grid, state.w / norm)
        report = ConvergenceReport(
            energy=state.energy,
            dual_objective=state.dual_objective,
            gap=state.gap,
            iters=state.iteration,
            L_hat=f.l_hat,
            converged=converged,
            box_active=box_active,
            max_dual_norm=state.max_dual_norm(),
            grid=problem.carrier.describe(),
            coercivity_floor=f.coercivity_floor(state.x),
        )
        logger.info(f"radial minimization {'converged' if converged else 'stopped'} after {state.iteration} "
                    f"iterations: energy {state.energy:.10g}, gap {state.gap:.3e}")
        return f.to_profile(state.x), field, report

    def _minimize_planar(self, f: PlanarFunctional):
        problem = f.problem
        carrier = problem.carrier
        h = carrier.h
        free_count = int(np.sum(f.free))
        x = np.zeros(free_count)
        cells = (carrier.ny, carrier.nx)
        state = SaddleState(x=x, x_bar=x.copy(), w0=np.zeros(cells), w=np.zeros((2,) + cells))

        def apply(v):
            return h * h * f.gradient(_scatter(f.free, v))

        def adjoint(y):
            return f.adjoint_full(y)[f.free]

        norm = _operator_norm(lambda v: apply(v).ravel(), lambda y: adjoint(y.reshape((2,) + cells)),
                              free_count, settings.POWER_ITERATIONS, self.seed) if free_count else 0.0
        # sigma = tau with sigma tau ||h^2 grad||^2 <= 1; the estimate tightens the 8 h^2 worst case
        step = 0.99 / max(norm * 1.01, 1e-300) if norm > 0.0 else 1.0
        initial = f.value(state.x)
        ceiling = settings.DIVERGENCE_FACTOR * max(abs(initial), 1.0)
        logger.info(f"planar minimization: {carrier.nx}x{carrier.ny} cells, {free_count} free nodes, "
                    f"L_hat={f.l_hat:.6g}")
        converged = False
        for it in range(1, self.max_iter + 1):
            g = f.gradient(f.full(state.x_bar))
            state.w0, state.w = _project_ball(state.w0 + step * h * h, state.w + step * h * h * g)
            grad = f.adjoint_full(state.w)[f.free] + f.linear[f.free]
            x_new = np.clip(state.x - step * grad, -f.bound, f.bound)
            state.x_bar = 2.0 * x_new - state.x
            state.x = x_new
            state.iteration = it
            if it % self.check_every == 0 or it == self.max_iter:
                state.energy = f.value(state.x)
                state.dual_objective = f.dual_value(state.w)
                state.gap = state.energy - state.dual_objective
                if not np.isfinite(state.energy) or state.energy > ceiling:
                    logger.error(f"divergence at iteration {it}: energy {state.energy:.6g} > {ceiling:.6g}")
                    raise DivergenceError(f"energy {state.energy:.6g} exceeded {ceiling:.6g}",
                                          {"iteration": it, "initial_energy": initial})
                if state.gap <= self.tol_gap:
                    converged = True
                    break
        norm_w = np.maximum(np.sqrt(state.w0 ** 2 + np.sum(state.w ** 2, axis=0)), settings.DUAL_FLOOR)
        values = f.full(state.x)
        grid_function = GridFunction2D(carrier.x0, carrier.x1, carrier.y0, carrier.y1, h, values)
        box_active = bool(free_count and np.any(np.abs(state.x) >= f.bound * (1.0 - 1e-12)))
        report = ConvergenceReport(
            energy=state.energy,
            dual_objective=state.dual_objective,
            gap=state.gap,
            iters=state.iteration,
            L_hat=f.l_hat,
            converged=converged,
            box_active=box_active,
            max_dual_norm=state.max_dual_norm(),
            grid=carrier.describe(),
        )
        return grid_function, state.w / norm_w, report


def _scatter(mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros(mask.shape)
    out[mask] = values
    return out


def minimize(
    problem: Problem,
    tol_gap: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: Optional[int] = None,
):
    """Run PrimalDualMinimizer with the given stopping rule; see PrimalDualMinimizer.minimize"""
    return PrimalDualMinimizer(tol_gap=tol_gap, max_iter=max_iter, seed=seed).minimize(problem)
