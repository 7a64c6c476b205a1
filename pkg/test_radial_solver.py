#!/usr/bin/env python3
"""Tests for the closed-form radial solver"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from pmcm.core.errors import DomainError, InfeasibleError, InvalidInputError, NonCoerciveError, PreconditionError
from pmcm.models.measure import Atom, PolynomialPiece, RadialDensity, RadialMeasure
from pmcm.models.profile import RadialDomain, RadialProfile
from pmcm.models.solution import FluxAnchor, JumpAnchor, JumpKind, OneSidedLimits, RadialSolution, SolutionFamily
from pmcm.services.radial_solver import (
    catenoid_profile,
    classify_atoms,
    coercivity_lower_bound,
    energy_radial,
    evaluate_T,
    field_coefficients,
    increment,
    integrate_profile,
    jump_classification,
    oscillation_bound,
    piece_area,
    sample_solution,
    solution_field,
    solution_gradient,
    solution_values,
    solve_dirichlet_radial,
    trivial_competitor_energy,
    two_sphere_configuration,
)

REACHABLE_MAX = 0.4 * (math.acosh(5.0) - math.acosh(2.5)) + 2.0 * math.acosh(1.5)


class TestFieldCoefficients:
    def test_jump_rule_anchor(self, one_sphere_measure):
        assert field_coefficients(one_sphere_measure, JumpAnchor(0)) == (0.4, 2.0)

    def test_flux_anchor(self, one_sphere_measure):
        gammas = field_coefficients(one_sphere_measure, FluxAnchor(0, 0.0))
        assert gammas == pytest.approx((0.0, 1.6), abs=1e-15)

    def test_infeasible_flux(self, one_sphere_measure):
        with pytest.raises(InfeasibleError) as exc:
            field_coefficients(one_sphere_measure, FluxAnchor(0, 0.9))
        assert exc.value.diagnostics["interval"] == 1

    def test_anchor_out_of_range(self, one_sphere_measure):
        with pytest.raises(InvalidInputError):
            field_coefficients(one_sphere_measure, JumpAnchor(3))

    def test_density_refused(self, one_sphere_domain):
        m = RadialMeasure(one_sphere_domain, density=RadialDensity((PolynomialPiece(1.0, 3.0, (0.1,)),)))
        with pytest.raises(PreconditionError) as exc:
            field_coefficients(m, FluxAnchor(0, 0.0))
        assert exc.value.hypothesis == "atoms_only"


class TestJumpClassification:
    def test_window(self):
        window = jump_classification(2, 1.0, 2.0, 0.8)
        assert window.kind is JumpKind.JUMP_UP
        assert (window.lower, window.upper) == (0.5, 1.5)

    @pytest.mark.parametrize(
        "weight, kind",
        [(0.3, JumpKind.CONTINUOUS_ONLY), (-0.8, JumpKind.JUMP_DOWN), (1.6, JumpKind.INFEASIBLE)],
    )
    def test_kinds(self, weight, kind):
        assert jump_classification(2, 1.0, 2.0, weight).kind is kind

    def test_window_endpoints(self):
        lower = jump_classification(2, 1.0, 2.0, 0.5)
        upper = jump_classification(2, 1.0, 2.0, 1.5)
        assert lower.kind is JumpKind.CONTINUOUS_ONLY and lower.at_endpoint
        assert upper.kind is JumpKind.INFEASIBLE and upper.at_endpoint

    def test_windows_use_previous_sphere(self, family_measure):
        windows = classify_atoms(family_measure.domain, family_measure)
        assert [w.kind for w in windows] == [JumpKind.JUMP_UP, JumpKind.CONTINUOUS_ONLY]
        assert windows[1].lower == pytest.approx(1.0 / 3.0)
        assert windows[1].at_endpoint

    def test_radii_order(self):
        with pytest.raises(InvalidInputError):
            jump_classification(2, 2.0, 1.0, 0.5)


class TestProfileIntegration:
    def test_catenoid_from_the_neck(self):
        u = integrate_profile(2.0, 2, 2.0, 3.0, 0.0, [3.0])
        assert abs(u[0] - 2.0 * math.acosh(1.5)) <= 1e-10

    def test_inner_piece(self):
        u = integrate_profile(0.4, 2, 1.0, 2.0, 0.0, [2.0])
        assert abs(u[0] - 0.290252) <= 1e-6

    def test_matches_catenoid_formula(self):
        grid = np.linspace(1.0, 2.0, 11)
        assert integrate_profile(-0.7, 2, 1.0, 2.0, 0.0, grid) == pytest.approx(
            catenoid_profile(-0.7, 1.0, grid), abs=1e-13
        )

    def test_three_dimensions_against_quadrature(self):
        expected, _ = quad(lambda s: 0.5 / math.sqrt(s ** 4 - 0.25), 1.0, 2.0, epsabs=1e-13)
        u = integrate_profile(0.5, 3, 1.0, 2.0, 0.0, [2.0])
        assert abs(u[0] - expected) <= 1e-10
        assert increment(0.5, 3, 1.0, 2.0) == pytest.approx(u[0], abs=1e-10)

    def test_singular_endpoint(self):
        # s = 1 + t^2 removes the inverse square root at s = 1
        expected, _ = quad(lambda t: 2.0 * t / math.sqrt((1.0 + t * t) ** 4 - 1.0), 0.0, 1.0, epsabs=1e-13)
        u = integrate_profile(1.0, 3, 1.0, 2.0, 0.0, [2.0])
        assert abs(u[0] - expected) <= 1e-9

    def test_zero_flux_is_constant(self):
        assert integrate_profile(0.0, 3, 1.0, 2.0, 1.5, [1.0, 1.5, 2.0]).tolist() == [1.5, 1.5, 1.5]

    def test_flux_above_bound(self):
        with pytest.raises(DomainError):
            integrate_profile(1.5, 2, 1.0, 2.0, 0.0, [2.0])

    def test_grid_outside_interval(self):
        with pytest.raises(InvalidInputError):
            integrate_profile(0.4, 2, 1.0, 2.0, 0.0, [2.5])

    def test_piece_area_against_quadrature(self):
        expected, _ = quad(lambda r: r * r / math.sqrt(r * r - 0.16), 1.0, 2.0, epsabs=1e-13)
        assert piece_area(0.4, 2, 1.0, 2.0) == pytest.approx(2.0 * math.pi * expected, rel=1e-10)


class TestSolveDirichlet:
    def test_one_sphere_jump(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        assert isinstance(sol, RadialSolution)
        assert sol.gammas == pytest.approx((0.4, 2.0), abs=1e-12)
        assert len(sol.jumps) == 1
        jump = sol.jumps[0]
        assert jump.radius == 2.0 and jump.direction == 1
        assert jump.height == pytest.approx(3.0 - REACHABLE_MAX, abs=1e-9)
        assert solution_values(sol, [3.0])[0] == pytest.approx(3.0, abs=1e-9)

    def test_continuous_data(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 1.0)
        assert sol.jumps == ()
        assert sol.gammas[1] - sol.gammas[0] == pytest.approx(1.6, abs=1e-12)
        assert solution_values(sol, [1.0, 3.0]) == pytest.approx([0.0, 1.0], abs=1e-8)

    def test_reflection(self, one_sphere_domain, one_sphere_measure):
        up = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        down = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure.negated(), 0.0, -3.0)
        assert down.gammas == pytest.approx(tuple(-g for g in up.gammas), abs=1e-12)
        assert down.jumps[0].direction == -1
        assert down.jumps[0].height == pytest.approx(up.jumps[0].height, abs=1e-9)

    def test_window_violation(self, one_sphere_domain):
        m = RadialMeasure(one_sphere_domain, (Atom(2.0, 1.6),))
        with pytest.raises(InfeasibleError, match="necessary condition violated at r=2"):
            solve_dirichlet_radial(one_sphere_domain, m, 0.0, 1.0)

    def test_continuous_only_atom_moves_the_jump_to_the_boundary(self, one_sphere_domain):
        m = RadialMeasure(one_sphere_domain, (Atom(2.0, 0.3),))
        reach = math.acosh(2.0) + 1.6 * (math.acosh(3.0 / 1.6) - math.acosh(2.0 / 1.6))
        sol = solve_dirichlet_radial(one_sphere_domain, m, 0.0, 5.0)
        assert sol.jumps == ()
        assert sol.inner_attainment == "jump"
        assert sol.inner_jump == pytest.approx(5.0 - reach, abs=1e-9)

    def test_flat_energy(self, flat_domain):
        sol = solve_dirichlet_radial(flat_domain, RadialMeasure(flat_domain), 0.0, 0.0)
        assert sol.gammas == pytest.approx((0.0,), abs=1e-11)
        assert energy_radial(sol, sol.measure) == pytest.approx(28.274333882308138, rel=1e-12)

    def test_noncoercive_measure_refused(self, one_sphere_domain):
        # both windows hold, but the annulus (1, 2.2^+) carries flux mass 6.76 against perimeter weight 3.2
        m = RadialMeasure(one_sphere_domain, (Atom(2.0, 1.4), Atom(2.2, 1.8)))
        assert all(w.kind is JumpKind.JUMP_UP for w in classify_atoms(one_sphere_domain, m))
        with pytest.raises(NonCoerciveError) as exc:
            solve_dirichlet_radial(one_sphere_domain, m, 0.0, 0.0)
        assert exc.value.l_hat >= 1.0


class TestFamily:
    def test_two_sphere_configuration(self):
        domain, m, bound = two_sphere_configuration(2, 1.0, 2.0, 3.0, 4.0, 0.8)
        assert m.weights.tolist() == pytest.approx([0.8, 1.0 / 3.0])
        expected = math.acosh(2.0) + 2.0 * math.acosh(1.5) + 3.0 * math.acosh(4.0 / 3.0)
        assert bound == pytest.approx(expected, rel=1e-12)
        assert bound == pytest.approx(5.628, abs=1e-3)
        assert oscillation_bound(domain, m) == bound

    def test_configuration_checks(self):
        with pytest.raises(InvalidInputError):
            two_sphere_configuration(2, 1.0, 2.0, 3.0, 4.0, 0.4)
        with pytest.raises(InvalidInputError):
            two_sphere_configuration(2, 1.0, 2.0, 3.0, 3.5, 0.8)

    def test_family_members_share_energy(self, family_domain, family_measure):
        family = solve_dirichlet_radial(family_domain, family_measure, 0.0, 6.0)
        assert isinstance(family, SolutionFamily)
        assert [slot.radius for slot in family.slots] == [2.0, 3.0]
        assert family.excess == pytest.approx(1.40, abs=0.01)
        members = family.members(5)
        energies = [energy_radial(member, family_measure) for member in members]
        assert max(energies) - min(energies) <= 1e-8 * abs(energies[0])
        for member in members:
            assert member.base_value == 0.0
            assert solution_values(member, [4.0])[0] == pytest.approx(6.0, abs=1e-9)

    def test_member_parameter_range(self, family_domain, family_measure):
        family = solve_dirichlet_radial(family_domain, family_measure, 0.0, 6.0)
        with pytest.raises(InvalidInputError):
            family.member(family.excess + 1.0)
        first = family.member(0.0)
        assert [j.radius for j in first.jumps] == [3.0]


class TestFieldAndEnergy:
    def test_field_at_sphere_has_both_limits(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        limits = evaluate_T(sol, 2.0)
        assert isinstance(limits, OneSidedLimits)
        assert limits.outer == pytest.approx(1.0, abs=1e-12)
        assert limits.inner == pytest.approx(0.2, abs=1e-12)
        assert evaluate_T(sol, 1.5) == pytest.approx(0.4 / 1.5, abs=1e-12)
        with pytest.raises(InvalidInputError):
            evaluate_T(sol, 3.5)

    def test_field_formula(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 1.0)
        grid = np.linspace(1.0, 3.0, 41)
        T = solution_field(sol, grid)
        du = solution_gradient(sol, grid)
        assert np.max(np.abs(T.values)) < 1.0
        assert T.values == pytest.approx(du / np.sqrt(1.0 + du ** 2), abs=1e-12)

    def test_sampled_profile_carries_the_jump(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        profile = sample_solution(sol, cells=100)
        jump = profile.jump_at(2.0)
        assert jump is not None and jump.orientation == 1
        assert jump.height == pytest.approx(sol.jumps[0].height, abs=1e-12)

    def test_profile_energy_matches_closed_form(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        exact = energy_radial(sol, one_sphere_measure)
        sampled = energy_radial(sample_solution(sol, cells=2000), one_sphere_measure, 0.0, 3.0)
        assert sampled == pytest.approx(exact, rel=1e-5)
        assert exact <= trivial_competitor_energy(one_sphere_domain, 0.0, 3.0)

    def test_profile_energy_needs_data(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        with pytest.raises(InvalidInputError):
            energy_radial(sample_solution(sol), one_sphere_measure)

    def test_coercivity_bound(self, one_sphere_domain, one_sphere_measure):
        sol = solve_dirichlet_radial(one_sphere_domain, one_sphere_measure, 0.0, 3.0)
        profile = sample_solution(sol, cells=400)
        floor = coercivity_lower_bound(profile, 8.0 / 15.0, 0.0, 3.0)
        assert floor <= energy_radial(profile, one_sphere_measure, 0.0, 3.0)


class TestCompetitors:
    @pytest.mark.parametrize("weight, phi_b", [(0.8, 3.0), (0.3, 1.0)])
    def test_random_competitors_cost_more(self, one_sphere_domain, weight, phi_b):
        m = RadialMeasure(one_sphere_domain, (Atom(2.0, weight),))
        sol = solve_dirichlet_radial(one_sphere_domain, m, 0.0, phi_b)
        best = energy_radial(sol, m)
        exact = sample_solution(sol, cells=40)
        sphere_node = int(np.argmin(np.abs(exact.grid - 2.0)))
        rng = np.random.default_rng(0)
        for k in range(200):
            scale = (0.01, 0.1, 1.0)[k % 3]
            noise = rng.normal(0.0, scale, exact.grid.size)
            left = exact.values + noise
            right = exact.right_values + noise
            right[sphere_node] += rng.normal(0.0, scale)
            competitor = RadialProfile.from_traces(one_sphere_domain, exact.grid, left, right)
            assert energy_radial(competitor, m, 0.0, phi_b) >= best - 1e-9, k
