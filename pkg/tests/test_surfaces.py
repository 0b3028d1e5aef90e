"""Shape data, boundary frames and integration on parametric surfaces."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horocap.families import CapKind, CapSpec, build
from horocap.quadrature import QuadratureSpec
from horocap.surfaces import (ImmersionError, ProfileSurface, SupportError,
                              check_immersion, fields_at, integrate_dM,
                              integrate_M)


def sphere_cap(n=2, a=1.0, r=0.5):
    return build(CapSpec(kind=CapKind.SPHERE_CAP, n=n, a=a, r=r))


def fd_normal_transport_curvature(S, t, delta=1e-6):
    """Independent meridian-curvature oracle.

    Transports the unit normal along the meridian by central differences
    and applies the conformal connection by hand:
    kappa = g(nabla_T nu, T) / g(T, T) with T the chart tangent.
    """
    def nu(tt):
        return S.shape_at(tt).nu.components

    x = S.embed(t)
    w = x[-1]
    rho, z, dr, dz, *_ = S.profile_jet(t)
    Y = np.zeros_like(x)
    Y[0], Y[-1] = dr, dz
    nuv = nu(t)
    dnu = (nu(t + delta) - nu(t - delta)) / (2.0 * delta)
    dlnw = np.zeros_like(x)
    dlnw[-1] = 1.0 / w
    nab = (dnu - (Y[-1] / w) * nuv - (nuv[-1] / w) * Y
           + np.dot(Y, nuv) * dlnw)
    gYY = np.dot(Y, Y) / (w * w)
    return (np.dot(nab, Y) / (w * w)) / gYY


class TestShapeData:
    def test_horosphere_type_cap_has_unit_curvatures(self):
        S = sphere_cap(a=0.7, r=0.7)
        for t in np.linspace(0.0, S.t1, 9):
            sd = S.shape_at(t)
            np.testing.assert_allclose(sd.principal_curvatures, 1.0,
                                       atol=1e-12)

    def test_vertical_plane_is_totally_geodesic(self, vertical_plane):
        u = np.array([0.3, 0.1])
        sd = vertical_plane.shape_at(u)
        assert abs(sd.H) < 1e-12
        np.testing.assert_allclose(sd.h, 0.0, atol=1e-12)

    def test_geodesic_sphere_curvature_value(self):
        S = sphere_cap(a=2.0, r=1.5)
        sd = S.shape_at(0.4 * S.t1)
        np.testing.assert_allclose(sd.principal_curvatures, 2.0 / 1.5,
                                   atol=1e-12)
        assert sd.H == pytest.approx(2 * 2.0 / 1.5, abs=1e-12)

    def test_meridian_curvature_against_normal_transport_oracle(self):
        for spec in [(2, 2.0, 1.5), (2, 0.6, 0.7), (3, 1.0, 0.5)]:
            S = sphere_cap(*spec)
            for t in (0.3 * S.t1, 0.7 * S.t1):
                kappa_oracle = fd_normal_transport_curvature(S, t)
                sd = S.shape_at(t)
                g_tt = sd.g[0, 0]
                kappa_m = sd.h[0, 0] / g_tt
                assert kappa_m == pytest.approx(kappa_oracle, abs=1e-6)

    def test_mean_curvature_positive_orientation(self):
        for spec in [(2, 1.0, 0.5), (2, 0.6, 0.7), (3, 2.0, 1.5)]:
            S = sphere_cap(*spec)
            assert S.shape_at(0.5 * S.t1).H > 0

    @given(st.floats(0.2, 3.0), st.floats(0.05, 0.95))
    @settings(max_examples=40, deadline=None)
    def test_sphere_cap_curvature_is_center_height_over_radius(self, r, frac):
        # choose a so the cut is transversal: |1 - a| < r
        a = 1.0 - r * (2.0 * frac - 1.0) * 0.99
        S = sphere_cap(a=a, r=r)
        sd = S.shape_at(0.5 * S.t1)
        # the positive-H orientation makes the curvature |a|/r
        np.testing.assert_allclose(sd.principal_curvatures, abs(a) / r,
                                   atol=1e-10)


class TestBoundaryFrame:
    def test_support_centered_sphere_meets_orthogonally(self):
        for r in (0.3, 0.5, 0.9):
            bf = sphere_cap(a=1.0, r=r).boundary_frame_at()
            assert bf.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_vertical_plane_orthogonal_with_flat_boundary(self, vertical_plane):
        bf = vertical_plane.boundary_frame_at(np.array([0.1]))
        assert bf.theta == pytest.approx(math.pi / 2, abs=1e-10)
        assert abs(bf.Hhat) < 1e-6
        assert abs(bf.hmumu) < 1e-10

    def test_contact_angle_from_euclidean_intersection(self):
        """Conformality: the derived angle matches arccos((1-a)/r)."""
        for a, r in [(0.6, 0.7), (1.4, 0.9), (2.0, 1.5)]:
            bf = sphere_cap(a=a, r=r).boundary_frame_at()
            assert bf.theta == pytest.approx(math.acos((1 - a) / r),
                                             abs=1e-12)

    def test_angle_constant_along_grid_boundary(self, tilted_plane):
        thetas = [tilted_plane.boundary_frame_at(np.array([s])).theta
                  for s in np.linspace(-0.4, 0.4, 32)]
        assert np.std(thetas) < 1e-10

    def test_frame_reconstruction_identities(self, tilted_cap, tilted_plane):
        """Nbar = sin(theta) mu - cos(theta) nu and the inverse relations."""
        frames = [tilted_cap.boundary_frame_at(),
                  tilted_plane.boundary_frame_at(np.array([0.2]))]
        for bf in frames:
            st_, ct = math.sin(bf.theta), math.cos(bf.theta)
            np.testing.assert_allclose(
                bf.Nbar.components,
                st_ * bf.mu.components - ct * bf.nu.components, atol=1e-10)
            np.testing.assert_allclose(
                bf.nubar.components,
                ct * bf.mu.components + st_ * bf.nu.components, atol=1e-10)
            # inverse: mu = sin(theta) Nbar + cos(theta) nubar
            np.testing.assert_allclose(
                bf.mu.components,
                st_ * bf.Nbar.components + ct * bf.nubar.components,
                atol=1e-10)

    def test_position_field_pairing_with_support_normal(self, tilted_cap):
        """g(x, Nbar) = -1 at every boundary point of the support."""
        bf = tilted_cap.boundary_frame_at()
        x = bf.shape.position.coords
        w = x[-1]
        assert np.dot(x, bf.Nbar.components) / (w * w) == pytest.approx(
            -1.0, abs=1e-12)

    def test_boundary_off_support_rejected(self):
        # a valid sphere profile truncated before it reaches the support
        bad = ProfileSurface(2, 0.5 * math.acos(0.0), lambda t: (
            0.5 * math.sin(t), 1.0 + 0.5 * math.cos(t),
            0.5 * math.cos(t), -0.5 * math.sin(t),
            -0.5 * math.sin(t), -0.5 * math.cos(t)))
        with pytest.raises(SupportError):
            bad.boundary_frame_at()


class TestIntegration:
    def test_zero_integrand(self, ortho_cap, quad):
        assert integrate_M(ortho_cap, lambda t: 0.0, quad) == 0.0
        assert integrate_dM(ortho_cap, lambda s: 0.0, quad) == 0.0

    def test_area_self_convergence_on_geodesic_hemisphere(
            self, geodesic_hemisphere, quad):
        a1 = integrate_M(geodesic_hemisphere, lambda t: 1.0, quad)
        a2 = integrate_M(geodesic_hemisphere, lambda t: 1.0, quad.refined())
        assert abs(a1 - a2) / abs(a2) < 1e-10

    def test_boundary_is_flat_circle(self, ortho_cap, quad):
        """The support is intrinsically flat: circumference = 2*pi*rho."""
        circ = integrate_dM(ortho_cap, lambda s: 1.0, quad)
        assert circ == pytest.approx(2.0 * math.pi * 0.5, rel=1e-14)

    def test_bulk_boundary_identity_for_curvature_weighted_position(
            self, tilted_cap, quad):
        """int_M g(x,nu) H dA = int_dM [-cos(theta) g(x,nubar) + sin(theta)]."""
        bf = tilted_cap.boundary_frame_at()
        th = bf.theta
        lhs = integrate_M(
            tilted_cap,
            lambda t: fields_at(tilted_cap, t).gxnu
            * fields_at(tilted_cap, t).H, quad)
        x = bf.shape.position.coords
        gxnubar = float(np.dot(x, bf.nubar.components) / x[-1] ** 2)
        rhs = integrate_dM(
            tilted_cap, lambda s: -math.cos(th) * gxnubar + math.sin(th),
            quad)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_grid_area_matches_flat_plane(self, vertical_plane, quad_fast):
        # the vertical unit-extent plane piece: area = int 1/z^2 over the strip
        area = integrate_M(vertical_plane, lambda u: 1.0, quad_fast)
        # embed: z = 1 + u_0, horizontal width 1 -> int_0^1 dz/z^2 = 1/2
        assert area == pytest.approx(0.5, rel=1e-12)


class TestImmersionChecks:
    def test_degenerate_grid_chart_rejected(self):
        from horocap.surfaces import GridSurface

        d = 3
        J = np.zeros((d, 2))
        J[0, 0] = J[0, 1] = 1.0  # two parallel tangent columns
        Hess = np.zeros((d, 2, 2))
        origin = np.array([0.0, 0.0, 1.0])
        S = GridSurface(2, [(0.0, 1.0), (0.0, 1.0)],
                        lambda u: (origin + J @ u, J, Hess))
        with pytest.raises(ImmersionError):
            S.shape_at(np.array([0.5, 0.5]))

    def test_valid_cap_passes(self, ortho_cap):
        check_immersion(ortho_cap, QuadratureSpec(32))

    def test_umbilical_spread_small_everywhere(self, tilted_cap, cap_3d):
        for S in (tilted_cap, cap_3d):
            for t in np.linspace(0.0, S.t1, 17):
                k = S.shape_at(t).principal_curvatures
                assert np.ptp(k) < 1e-8
