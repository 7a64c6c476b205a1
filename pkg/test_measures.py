#!/usr/bin/env python3
"""Tests for radial measures, the Hahn split and the admissibility checks"""

import math

import numpy as np
import pytest

from pmcm.core.errors import InvalidInputError
from pmcm.models.measure import (
    Atom,
    HahnSplit,
    PolynomialPiece,
    RadialDensity,
    RadialMeasure,
    RadialSet,
)
from pmcm.models.profile import RadialDomain, RadialProfile
from pmcm.services.measure_service import (
    ball_condition_check,
    cell_moments,
    density_bound_check,
    hahn_lambda,
    integrate_against,
    measure_of,
    nonextremality_ratio,
    nonextremality_report,
    restrict,
    single_sphere_measure,
    variation_of,
)


@pytest.fixture
def signed_measure(one_sphere_domain) -> RadialMeasure:
    """Atoms of both signs and h(r) = r - 2, negative on (1, 2)"""
    density = RadialDensity((PolynomialPiece(1.0, 3.0, (-2.0, 1.0)),))
    return RadialMeasure(one_sphere_domain, (Atom(1.5, 0.5), Atom(2.5, -0.4)), density)


class TestRadialMeasure:
    def test_atom_outside_domain(self, one_sphere_domain):
        with pytest.raises(InvalidInputError):
            RadialMeasure(one_sphere_domain, (Atom(3.5, 0.1),))

    def test_atoms_must_increase(self, one_sphere_domain):
        with pytest.raises(InvalidInputError):
            RadialMeasure(one_sphere_domain, (Atom(2.5, 0.1), Atom(1.5, 0.1)))

    def test_overlapping_density_pieces(self):
        with pytest.raises(InvalidInputError):
            RadialDensity((PolynomialPiece(1.0, 2.0, (1.0,)), PolynomialPiece(1.5, 3.0, (1.0,))))

    def test_flux_masses(self, one_sphere_measure):
        assert one_sphere_measure.flux_masses.tolist() == [1.6]
        assert one_sphere_measure.total_variation() == pytest.approx(3.2 * math.pi, rel=1e-14)

    def test_single_sphere_helper(self, one_sphere_domain):
        m = single_sphere_measure(one_sphere_domain, 2.0, 0.8)
        assert m.atoms == (Atom(2.0, 0.8),)
        assert m.atoms_only

    def test_polynomial_integral(self, signed_measure):
        # int_1^3 (r - 2) r dr = 2/3
        assert signed_measure.density.integrate(1.0, 3.0, 2) == pytest.approx(2.0 / 3.0, rel=1e-13)
        assert signed_measure.density.integrate(1.0, 3.0, 2, absolute=True) == pytest.approx(2.0, rel=1e-13)


class TestHahnSplit:
    def test_indicators(self, signed_measure):
        split = hahn_lambda(signed_measure)
        assert split.atom_indicators == (0, 1)
        assert [flag for _, _, flag in split.density_indicators] == [1, 0]
        assert split.density_indicator_at(1.5) == 1
        assert split.density_indicator_at(2.5) == 0

    def test_indicator_values_checked(self):
        with pytest.raises(InvalidInputError):
            HahnSplit((2,))

    def test_jordan_decomposition(self, signed_measure):
        split = hahn_lambda(signed_measure)
        whole = RadialSet.of((1.0, 3.0))
        positive = measure_of(restrict(signed_measure, split, 0), whole)
        negative = measure_of(restrict(signed_measure, split, 1), whole)
        assert positive > 0.0 > negative
        assert positive + negative == pytest.approx(measure_of(signed_measure, whole), rel=1e-12)
        assert positive - negative == pytest.approx(variation_of(signed_measure, whole), rel=1e-12)
        assert variation_of(signed_measure, whole) == pytest.approx(7.5 * math.pi, rel=1e-12)
        assert measure_of(signed_measure, whole) == pytest.approx(5.0 * math.pi / 6.0, rel=1e-12)


class TestSetEvaluation:
    def test_atom_on_endpoint_is_not_counted(self, one_sphere_measure):
        assert measure_of(one_sphere_measure, RadialSet.of((1.0, 2.0))) == 0.0
        assert measure_of(one_sphere_measure, RadialSet.of((1.9, 2.1))) == pytest.approx(3.2 * math.pi)

    def test_touching_intervals_merge(self, one_sphere_measure):
        glued = RadialSet.of((1.5, 2.0), (2.0, 2.5))
        assert glued.merged() == [(1.5, 2.5)]
        assert measure_of(one_sphere_measure, glued) == pytest.approx(3.2 * math.pi)

    def test_set_must_stay_in_annulus(self, one_sphere_measure):
        with pytest.raises(InvalidInputError):
            measure_of(one_sphere_measure, RadialSet.of((0.5, 2.0)))


class TestNonextremality:
    def test_single_atom_closed_form(self, one_sphere_measure):
        report = nonextremality_report(one_sphere_measure)
        assert report.analytic_single_atom == pytest.approx(8.0 / 15.0, abs=1e-15)
        assert abs(report.value - report.analytic_single_atom) <= 1e-9
        assert (report.inner_radius, report.outer_radius, report.outer_side) == (1.0, 2.0, 1)
        assert report.non_extremal

    def test_single_atom_in_three_dimensions(self):
        domain = RadialDomain(3, 1.0, 3.0, 4.0)
        m = RadialMeasure(domain, (Atom(2.0, 0.5),))
        assert nonextremality_ratio(m) == pytest.approx(0.4, abs=1e-9)

    def test_constant_density(self):
        # h = 0.3 on (1, 3): the ratio over (s, r) is 0.15 (r - s), largest on the whole annulus
        domain = RadialDomain(2, 1.0, 3.0, 4.0)
        m = RadialMeasure(domain, density=RadialDensity((PolynomialPiece(1.0, 3.0, (0.3,)),)))
        assert nonextremality_ratio(m, resolution=16) == pytest.approx(0.3, rel=1e-12)

    def test_resolution_only_enlarges_the_family(self, signed_measure):
        coarse = nonextremality_ratio(signed_measure, resolution=16)
        fine = nonextremality_ratio(signed_measure, resolution=256)
        assert coarse <= fine + 1e-15

    def test_resolution_floor(self, signed_measure):
        with pytest.raises(InvalidInputError):
            nonextremality_report(signed_measure, resolution=3)

    def test_extremal_weight_flagged(self, one_sphere_domain):
        m = single_sphere_measure(one_sphere_domain, 2.0, 1.6)
        report = nonextremality_report(m)
        assert report.value == pytest.approx(3.2 / 3.0, abs=1e-9)
        assert not report.non_extremal


class TestBallCondition:
    def test_small_atom_passes(self, one_sphere_measure):
        report = ball_condition_check(one_sphere_measure, samples=16)
        assert not report.violated
        assert report.worst_ratio <= 1.0

    def test_heavy_atom_violates(self, one_sphere_domain):
        # a tiny ball centred on the circle sees about 4 * 2r against the perimeter 2 pi r
        m = single_sphere_measure(one_sphere_domain, 2.0, 4.0)
        report = ball_condition_check(m, samples=16)
        assert report.violated
        assert report.worst_ratio > 4.0 / math.pi

    def test_samples_positive(self, one_sphere_measure):
        with pytest.raises(InvalidInputError):
            ball_condition_check(one_sphere_measure, samples=0)


class TestDensityBound:
    def test_one_sphere(self, one_sphere_measure):
        report = density_bound_check(one_sphere_measure)
        assert report.Lambda == pytest.approx(2.0 * math.pi)
        assert report.rho_bar == pytest.approx(0.5)
        assert not report.vacuous

    def test_two_spheres(self, family_measure):
        assert density_bound_check(family_measure).rho_bar == pytest.approx(0.5)

    def test_no_atoms(self, flat_domain):
        report = density_bound_check(RadialMeasure(flat_domain))
        assert report.vacuous
        assert report.Lambda == 0.0


class TestIntegration:
    def test_cell_moments_sum_to_integral(self, signed_measure):
        grid = np.linspace(1.0, 3.0, 13)
        left, right = cell_moments(signed_measure.density, grid, 2)
        assert np.sum(left + right) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_constant_profile(self, signed_measure):
        p = RadialProfile.constant(signed_measure.domain, 2.0, cells=8)
        expected = 2.0 * measure_of(signed_measure, RadialSet.of((1.0, 3.0)))
        assert integrate_against(signed_measure, p) == pytest.approx(expected, rel=1e-12)

    def test_positive_atom_reads_lower_trace(self, one_sphere_measure):
        grid = np.array([1.0, 2.0, 3.0])
        p = RadialProfile.from_traces(one_sphere_measure.domain, grid, [0.0, 0.0, 1.0], [0.0, 1.0, 1.0])
        assert integrate_against(one_sphere_measure, p) == 0.0
        assert integrate_against(one_sphere_measure.negated(), p) == pytest.approx(-3.2 * math.pi)
