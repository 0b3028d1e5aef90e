"""Shared fixtures: representative surfaces and quadrature settings."""

import math

import numpy as np
import pytest

from horocap.families import CapKind, CapSpec, PerturbationSpec, build, perturb
from horocap.quadrature import QuadratureSpec


def cap(kind=CapKind.SPHERE_CAP, n=2, a=1.0, r=0.5, **kw):
    return build(CapSpec(kind=kind, n=n, a=a, r=r, **kw))


@pytest.fixture(scope="session")
def ortho_cap():
    """Sphere cap centered on the support: contact angle pi/2, H = n*a/r."""
    return cap()


@pytest.fixture(scope="session")
def tilted_cap():
    """Off-center sphere cap with oblique contact angle."""
    return cap(a=0.6, r=0.7)


@pytest.fixture(scope="session")
def cap_3d():
    return cap(n=3, a=0.8, r=0.6)


@pytest.fixture(scope="session")
def geodesic_hemisphere():
    """Totally geodesic piece: sphere centered on the ideal boundary."""
    return cap(kind=CapKind.EQUIDISTANT_SPHERE_CAP, a=0.0, r=2.0)


@pytest.fixture(scope="session")
def equidistant_cap():
    return cap(kind=CapKind.EQUIDISTANT_SPHERE_CAP, a=-0.5, r=2.0)


@pytest.fixture(scope="session")
def vertical_plane():
    return build(CapSpec(kind=CapKind.VERTICAL_PLANE_DISK, n=2, extent=1.0))


@pytest.fixture(scope="session")
def tilted_plane():
    return build(CapSpec(kind=CapKind.TILTED_PLANE_CAP, n=2,
                         beta=math.pi / 3, extent=1.0))


@pytest.fixture(scope="session")
def bumped_cap():
    """Constant-angle, non-CMC negative control."""
    return perturb(cap(), PerturbationSpec(amplitude=1e-2))


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec(128)


@pytest.fixture(scope="session")
def quad_fast():
    return QuadratureSpec(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240824)
