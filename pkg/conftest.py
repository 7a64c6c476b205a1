"""Shared fixtures for the pmcm test suite"""

import os

import pytest
from hypothesis import settings as hypothesis_settings

from pmcm.models.measure import Atom, RadialMeasure
from pmcm.models.profile import RadialDomain

hypothesis_settings.register_profile("pmcm", deadline=None)
hypothesis_settings.register_profile("quick", max_examples=50, deadline=None)
hypothesis_settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "pmcm"))


@pytest.fixture
def flat_domain() -> RadialDomain:
    """Planar annulus 1 < |x| < 2 inside B_3"""
    return RadialDomain(2, 1.0, 2.0, 3.0)


@pytest.fixture
def one_sphere_domain() -> RadialDomain:
    return RadialDomain(2, 1.0, 3.0, 4.0)


@pytest.fixture
def one_sphere_measure(one_sphere_domain) -> RadialMeasure:
    """Weight 0.8 on |x| = 2: jump-up window [0.5, 1.5], L_hat = 8/15"""
    return RadialMeasure(one_sphere_domain, (Atom(2.0, 0.8),))


@pytest.fixture
def family_domain() -> RadialDomain:
    return RadialDomain(2, 1.0, 4.0, 5.0)


@pytest.fixture
def family_measure(family_domain) -> RadialMeasure:
    """Two spheres whose data beyond the oscillation bound leave a one-parameter family"""
    return RadialMeasure(family_domain, (Atom(2.0, 0.8), Atom(3.0, 1.0 / 3.0)))


@pytest.fixture
def output_dir(tmp_path):
    out = tmp_path / "output"
    out.mkdir()
    return out
