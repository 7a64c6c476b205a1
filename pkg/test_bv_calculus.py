#!/usr/bin/env python3
"""Tests for radial BV profiles, representatives and truncation"""

import math

import numpy as np
import pytest

from pmcm.core.errors import InvalidInputError
from pmcm.models.profile import JumpRecord, RadialDomain, RadialProfile
from pmcm.services.bv_calculus import (
    area_functional,
    jump_mass,
    l1_distance,
    lambda_representative,
    m_bound,
    profile_volume,
    total_variation,
    truncate,
    truncated_representative,
)


@pytest.fixture
def step_profile(flat_domain):
    """0 on (1, 1.5), 2 on (1.5, 2): one upward jump at r = 1.5"""
    grid = np.array([1.0, 1.25, 1.5, 1.75, 2.0])
    left = np.array([0.0, 0.0, 0.0, 2.0, 2.0])
    right = np.array([0.0, 0.0, 2.0, 2.0, 2.0])
    return RadialProfile.from_traces(flat_domain, grid, left, right)


class TestJumpRecord:
    def test_orientation_sides(self):
        up = JumpRecord.from_sides(1.5, 0.0, 2.0)
        down = JumpRecord.from_sides(1.5, 2.0, 0.0)
        assert (up.u_minus, up.u_plus, up.orientation) == (0.0, 2.0, 1)
        assert (down.u_minus, down.u_plus, down.orientation) == (0.0, 2.0, -1)
        assert down.inner == 2.0 and down.outer == 0.0
        assert up.precise == 1.0

    def test_degenerate_jump_rejected(self):
        with pytest.raises(InvalidInputError):
            JumpRecord(1.5, 1.0, 1.0)
        with pytest.raises(InvalidInputError):
            JumpRecord(1.5, 2.0, 1.0)

    def test_bad_orientation(self):
        with pytest.raises(InvalidInputError):
            JumpRecord(1.5, 0.0, 1.0, 0)


class TestProfile:
    def test_grid_must_cover_domain(self, flat_domain):
        with pytest.raises(InvalidInputError):
            RadialProfile(flat_domain, np.array([1.0, 1.5]), np.zeros(2))

    def test_jump_must_sit_on_interior_node(self, flat_domain):
        grid = np.array([1.0, 1.5, 2.0])
        with pytest.raises(InvalidInputError):
            RadialProfile(flat_domain, grid, np.zeros(3), (JumpRecord(1.2, 0.0, 1.0),))
        with pytest.raises(InvalidInputError):
            RadialProfile(flat_domain, grid, np.zeros(3), (JumpRecord(2.0, 0.0, 1.0),))

    def test_evaluate_gives_precise_representative(self, step_profile):
        assert step_profile.evaluate(1.5) == pytest.approx(1.0)
        assert step_profile.evaluate(1.25) == pytest.approx(0.0)
        assert step_profile.evaluate(1.8) == pytest.approx(2.0)
        assert step_profile.sides_at(1.5) == (0.0, 2.0)

    def test_from_function_snaps_jumps(self, flat_domain):
        grid = np.linspace(1.0, 2.0, 11)
        p = RadialProfile.from_function(flat_domain, grid, lambda r: r, {1.52: -0.5})
        jump = p.jumps[0]
        assert jump.radius == pytest.approx(1.5)
        assert jump.orientation == -1
        assert jump.height == pytest.approx(0.5)
        assert p.snap_distances[0] == pytest.approx(0.02)
        assert p.outer_trace == pytest.approx(1.5)


class TestVariation:
    def test_constant_profile_has_no_variation(self, flat_domain):
        p = RadialProfile.constant(flat_domain, 3.0)
        assert total_variation(p) == 0.0
        assert area_functional(p) == pytest.approx(profile_volume(p), rel=1e-12)

    def test_step_variation_is_sphere_area_times_height(self, step_profile):
        # |Du|(Omega) = 2 * H^1(circle of radius 1.5) = 2 * 2 pi * 1.5
        assert jump_mass(step_profile) == pytest.approx(3.0)
        assert total_variation(step_profile) == pytest.approx(6.0 * math.pi, rel=1e-12)

    def test_annulus_volume_exact_in_the_plane(self, flat_domain):
        p = RadialProfile.constant(flat_domain, 0.0, cells=7)
        assert profile_volume(p) == pytest.approx(flat_domain.annulus_volume, rel=1e-12)

    def test_linear_profile(self, flat_domain):
        # u = r on (1, 2) in the plane: |Du| = int 2 pi r dr = 3 pi
        grid = np.linspace(1.0, 2.0, 9)
        p = RadialProfile(flat_domain, grid, grid.copy())
        assert total_variation(p) == pytest.approx(3.0 * math.pi, rel=1e-12)
        assert area_functional(p) == pytest.approx(math.sqrt(2.0) * 3.0 * math.pi, rel=1e-12)

    def test_area_sandwich(self, step_profile):
        tv = total_variation(step_profile)
        area = area_functional(step_profile)
        assert tv <= area <= profile_volume(step_profile) + tv + 1e-12


class TestRepresentatives:
    def test_lambda_representative(self):
        assert lambda_representative(3.0, 1.0, 0.5) == 2.0
        assert lambda_representative(3.0, 1.0, 0.0) == 1.0
        assert lambda_representative(3.0, 1.0, 1.0) == 3.0
        assert lambda_representative(3.0, 1.0, 0.25) == pytest.approx(1.5)

    @pytest.mark.parametrize("lam", [-0.1, 1.5])
    def test_lambda_out_of_range(self, lam):
        with pytest.raises(InvalidInputError):
            lambda_representative(3.0, 1.0, lam)

    def test_misordered_traces(self):
        with pytest.raises(InvalidInputError):
            lambda_representative(1.0, 3.0, 0.5)
        with pytest.raises(InvalidInputError):
            m_bound(1.0, 3.0, 0.5)

    def test_m_bound_examples(self):
        assert m_bound(3.0, 1.0, 0.5) == pytest.approx(2.0)
        assert m_bound(1.0, -1.0, 0.5) == pytest.approx(0.0)
        assert m_bound(1.0, -1.0, 1.0) == pytest.approx(1.0)

    def test_m_bound_dominates_truncations(self):
        jump = JumpRecord(1.5, -1.0, 3.0)
        for lam in np.linspace(0.0, 1.0, 11):
            bound = m_bound(jump.u_plus, jump.u_minus, lam)
            for k in (0.25, 0.5, 1.0, 2.0, 3.0, 10.0):
                assert abs(truncated_representative(jump, k, lam)) <= bound + 1e-12


class TestTruncation:
    def test_truncation_clips_traces(self, step_profile):
        t = truncate(step_profile, 1.0)
        assert np.max(t.values) == pytest.approx(1.0)
        jump = t.jump_at(1.5)
        assert (jump.u_minus, jump.u_plus) == (0.0, 1.0)

    def test_jump_below_level_disappears(self, flat_domain):
        grid = np.array([1.0, 1.5, 2.0])
        p = RadialProfile.from_traces(flat_domain, grid, [5.0, 5.0, 6.0], [5.0, 6.0, 6.0])
        t = truncate(p, 2.0)
        assert t.jumps == ()
        assert np.all(t.values == 2.0)

    def test_level_must_be_positive(self, step_profile):
        with pytest.raises(InvalidInputError):
            truncate(step_profile, 0.0)


class TestL1Distance:
    def test_distance_to_itself(self, step_profile):
        assert l1_distance(step_profile, step_profile) == 0.0

    def test_constants(self, flat_domain):
        # int_{1<|x|<2} 1 dx = 3 pi
        p = RadialProfile.constant(flat_domain, 1.0)
        q = RadialProfile.constant(flat_domain, 0.0, cells=5)
        assert l1_distance(p, q) == pytest.approx(3.0 * math.pi, rel=1e-12)

    def test_domains_must_match(self, flat_domain):
        other = RadialDomain(3, 1.0, 2.0, 3.0)
        with pytest.raises(InvalidInputError):
            l1_distance(RadialProfile.constant(flat_domain, 0.0), RadialProfile.constant(other, 0.0))
