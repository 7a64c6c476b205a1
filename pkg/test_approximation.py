#!/usr/bin/env python3
"""Tests for mollified measures, profile smoothing and one-sided truncation"""

import math

import numpy as np
import pytest

from pmcm.core.errors import InvalidInputError
from pmcm.models.measure import RadialInterval, RadialMeasure, RadialSet
from pmcm.models.profile import RadialProfile
from pmcm.services.approximation import (
    GammaExperimentConfig,
    gamma_experiment,
    lambda_smooth_profile,
    mollify_measure,
    one_sided_truncate,
    smooth_profile,
)
from pmcm.services.bv_calculus import l1_distance
from pmcm.services.measure_service import measure_of


@pytest.fixture
def step_profile(one_sphere_domain) -> RadialProfile:
    """0 inside |x| = 2, 1 outside"""
    grid = np.linspace(1.0, 3.0, 41)
    return RadialProfile.from_function(one_sphere_domain, grid, lambda r: np.zeros_like(r), jumps={2.0: 1.0})


def _value_at(p: RadialProfile, radius: float) -> float:
    return float(p.values[int(np.argmin(np.abs(p.grid - radius)))])


class TestMollifyMeasure:
    def test_mass_is_preserved(self, one_sphere_measure):
        mollified = mollify_measure(one_sphere_measure, 0.1)
        assert mollified.atoms == ()
        assert not mollified.atoms_only
        whole = RadialSet.of((1.0, 3.0))
        assert measure_of(mollified, whole) == pytest.approx(3.2 * math.pi, rel=1e-9)

    def test_support_stays_near_the_atom(self, one_sphere_measure):
        mollified = mollify_measure(one_sphere_measure, 0.1)
        assert measure_of(mollified, RadialSet.of((1.0, 1.85))) == pytest.approx(0.0, abs=1e-14)
        assert measure_of(mollified, RadialSet.of((2.15, 3.0))) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("delta", [0.0, -0.1, 1.0, 2.0])
    def test_width_checked(self, one_sphere_measure, delta):
        with pytest.raises(InvalidInputError):
            mollify_measure(one_sphere_measure, delta)

    def test_atom_gap_limits_width(self, family_measure):
        # atoms at 2 and 3 allow at most half their distance
        with pytest.raises(InvalidInputError):
            mollify_measure(family_measure, 0.5)
        assert mollify_measure(family_measure, 0.2).atoms == ()


class TestSmoothing:
    def test_step_is_smoothed(self, step_profile):
        eps = 0.05
        smooth = smooth_profile(step_profile, eps)
        assert smooth.jumps == ()
        assert l1_distance(smooth, step_profile) <= eps
        assert float(np.max(np.abs(smooth.values))) <= 1.0 + eps

    def test_jump_radius_tends_to_midpoint(self, step_profile):
        smooth = smooth_profile(step_profile, 0.05)
        assert _value_at(smooth, 2.0) == pytest.approx(0.5, abs=1e-9)

    def test_lambda_one_third(self, step_profile):
        smooth = lambda_smooth_profile(step_profile, 1.0 / 3.0, 0.05)
        assert _value_at(smooth, 2.0) == pytest.approx(1.0 / 3.0, abs=1e-6)
        assert l1_distance(smooth, step_profile) <= 0.05

    def test_lambda_half_matches_plain_smoothing(self, step_profile):
        plain = smooth_profile(step_profile, 0.05)
        half = lambda_smooth_profile(step_profile, {step_profile.jumps[0].radius: 0.5}, 0.05)
        assert np.array_equal(plain.values, half.values)

    def test_lambda_count_checked(self, step_profile):
        with pytest.raises(InvalidInputError):
            lambda_smooth_profile(step_profile, [0.2, 0.4], 0.05)
        with pytest.raises(InvalidInputError):
            lambda_smooth_profile(step_profile, 1.5, 0.05)

    def test_eps_positive(self, step_profile):
        with pytest.raises(InvalidInputError):
            smooth_profile(step_profile, 0.0)


class TestOneSidedTruncate:
    @pytest.fixture
    def linear(self, one_sphere_domain) -> RadialProfile:
        grid = np.linspace(1.0, 3.0, 5)
        return RadialProfile(one_sphere_domain, grid, grid.copy())

    def test_cap_inside_window(self, linear):
        capped = one_sided_truncate(linear, (1.5, 2.5), 2.25)
        assert 2.25 in capped.grid
        assert float(capped.evaluate(2.4)) == pytest.approx(2.25)
        assert float(capped.evaluate(2.75)) == pytest.approx(2.75)
        assert float(capped.evaluate(1.25)) == pytest.approx(1.25)

    def test_cap_creates_jump_at_window_end(self, linear):
        capped = one_sided_truncate(linear, RadialInterval(1.5, 2.5), 2.25)
        jump = capped.jump_at(2.5)
        assert jump is not None
        assert (jump.inner, jump.outer) == pytest.approx((2.25, 2.5))
        assert capped.jump_at(1.5) is None

    def test_infinite_cap_is_identity(self, linear):
        assert one_sided_truncate(linear, (1.5, 2.5), math.inf) is linear

    def test_window_inside_annulus(self, linear):
        with pytest.raises(InvalidInputError):
            one_sided_truncate(linear, (0.5, 2.5), 2.0)


class TestGammaExperiment:
    def test_zero_measure(self, flat_domain):
        config = GammaExperimentConfig(RadialMeasure(flat_domain), 0.0, 0.0, max_iter=500)
        table = gamma_experiment(config, [0.2, 0.1])
        assert table.limit_energy == pytest.approx(9.0 * math.pi, rel=1e-12)
        assert [row.delta for row in table.rows] == [0.2, 0.1]
        assert table.monotone
        assert table.final_gap <= 1e-9
        assert all(row.l1_distance == 0.0 for row in table.rows)

    def test_deltas_must_decrease(self, one_sphere_measure):
        config = GammaExperimentConfig(one_sphere_measure, 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            gamma_experiment(config, [0.1, 0.2])
        with pytest.raises(InvalidInputError):
            gamma_experiment(config, [])
