"""Parametric hypersurfaces with boundary on the support horosphere.

Two chart kinds are supported:

* ``ProfileSurface`` -- axisymmetric about the vertical axis, described by
  a meridian profile t -> (rho(t), z(t)) on [0, t1] with the axis point at
  t = 0 and the boundary (on the horosphere {x_d = 1}) at t = t1.  All
  geometric quantities reduce to functions of t; angular integration uses
  the exact unit-sphere factor.

* ``GridSurface`` -- a box chart with an affine-or-smooth embedding whose
  face u_0 = 0 lies on the horosphere.  The remaining faces may be
  artificial cuts (flagged), in which case divergence-theorem identities
  are not expected to close.

Curvature conventions: the second fundamental form is h(X, Y) =
g(nabla_X nu, Y), computed from embedding jets through the conformal
connection, and the unit normal nu is oriented so that the mean
curvature is positive, with an explicit per-surface flag breaking the
tie for minimal surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .halfspace import GeometryError, HPoint, HVector
from .quadrature import QuadratureSpec, unit_sphere_area

__all__ = [
    "ImmersionError",
    "SupportError",
    "EvaluationError",
    "ShapeData",
    "BoundaryFrame",
    "ParamSurface",
    "ProfileSurface",
    "GridSurface",
    "SurfaceFields",
    "integrate_M",
    "integrate_dM",
    "check_immersion",
]

SUPPORT_TOL = 1e-12


class ImmersionError(ValueError):
    """Induced metric degenerate: the chart map fails to immerse."""


class SupportError(ValueError):
    """Boundary point does not lie on the support horosphere."""


class EvaluationError(ValueError):
    """Non-finite value encountered during integration."""


@dataclass(frozen=True)
class ShapeData:
    """First/second fundamental data at one chart point."""

    position: HPoint
    nu: HVector
    g: np.ndarray
    h: np.ndarray
    H: float
    h2: float
    principal_curvatures: np.ndarray


@dataclass(frozen=True)
class BoundaryFrame:
    """Frame and contact data at one boundary point.

    mu is the outward conormal in the surface, nubar the normal of the
    boundary inside the (flat) horosphere, Nbar the outward support
    normal -E_d, and theta the contact angle fixed by
    cos(theta) = -g(nu, Nbar).
    """

    mu: HVector
    nubar: HVector
    Nbar: HVector
    theta: float
    hmumu: float
    Hhat: float
    nu: HVector
    shape: ShapeData


class ParamSurface:
    """Base class; see ProfileSurface and GridSurface."""

    n: int
    chart_kind: str
    orientation: int = +1  # tie-break for minimal surfaces: upward nu
    artificial_cut: bool = False

    _sign_cache: Optional[int] = None

    # -- orientation ---------------------------------------------------
    def _probe_center(self):
        raise NotImplementedError

    def orientation_sign(self) -> int:
        """Global normal sign making H > 0 (flag-tie-broken when H = 0)."""
        if self._sign_cache is None:
            H_trial, nu_z_trial = self._probe_center()
            if abs(H_trial) > 1e-9:
                sign = 1 if H_trial > 0 else -1
            else:
                up = 1 if nu_z_trial >= 0 else -1
                sign = self.orientation * up
            self._sign_cache = sign
        return self._sign_cache

    def shape_at(self, u) -> ShapeData:
        raise NotImplementedError

    def boundary_frame_at(self, s=None) -> BoundaryFrame:
        raise NotImplementedError


def _shape_from_jet(x: np.ndarray, J: np.ndarray, Hess: np.ndarray,
                    sign: int) -> ShapeData:
    """Shape data from an embedding jet (point, tangents, second derivatives).

    J has shape (d, n) with tangent columns; Hess has shape (d, n, n).
    """
    d, n = J.shape
    w = x[-1]
    g = (J.T @ J) / (w * w)
    try:
        scipy.linalg.cholesky(g)
    except scipy.linalg.LinAlgError as exc:
        raise ImmersionError("induced metric is not positive definite") from exc
    # Euclidean unit normal with chart-orientation-continuous sign.
    U, _, _ = np.linalg.svd(J, full_matrices=True)
    m = U[:, -1]
    if np.linalg.det(np.column_stack([J, m])) < 0:
        m = -m
    nu_comp = sign * w * m
    # Conformal-connection correction of the flat second derivatives.
    dlnw = J[-1, :] / w
    e_d = np.zeros(d)
    e_d[-1] = 1.0
    h = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            T = (Hess[:, i, j] - dlnw[i] * J[:, j] - dlnw[j] * J[:, i]
                 + np.dot(J[:, i], J[:, j]) * e_d / w)
            h[i, j] = -np.dot(nu_comp, T) / (w * w)
    kappa = scipy.linalg.eigh(h, g, eigvals_only=True)
    H = float(np.sum(kappa))
    h2 = float(np.sum(kappa * kappa))
    p = HPoint(x)
    return ShapeData(p, HVector(p, nu_comp), g, h, H, h2, kappa)


class ProfileSurface(ParamSurface):
    """Axisymmetric surface from a meridian profile on [0, t1].

    ``profile_jet(t)`` returns (rho, z, rho', z', rho'', z'').  The axis
    point is t = 0 (rho(0) = 0) and the boundary t = t1 must satisfy
    z(t1) = 1 to support tolerance.
    """

    chart_kind = "profile"

    def __init__(self, n: int, t1: float,
                 profile_jet: Callable[[float], tuple],
                 orientation: int = +1):
        if n < 2:
            raise ValueError("surface dimension n must be >= 2")
        self.n = n
        self.t1 = float(t1)
        self.profile_jet = profile_jet
        self.orientation = orientation
        self._sign_cache = None

    # -- embedding -----------------------------------------------------
    def embed(self, t: float) -> np.ndarray:
        """Chart point on the representative meridian (first horizontal axis)."""
        rho, z, *_ = self.profile_jet(t)
        x = np.zeros(self.n + 1)
        x[0] = rho
        x[-1] = z
        return x

    def _meridian_shape(self, t: float, sign: int):
        """Meridian normal and principal curvatures at parameter t."""
        rho, z, dr, dz, d2r, d2z = self.profile_jet(t)
        w = z
        if w <= 0:
            raise GeometryError("profile leaves the upper half-space")
        s2 = dr * dr + dz * dz
        s = np.sqrt(s2)
        if s <= 0:
            raise ImmersionError("profile tangent vanishes")
        m = np.array([dz, -dr]) / s  # meridian-plane unit normal (radial, vertical)
        # meridian curvature via the conformal connection
        g_tt = s2 / (w * w)
        T_rad = d2r - 2.0 * (dz / w) * dr
        T_ver = d2z - 2.0 * (dz / w) * dz + s2 / w
        h_tt = -sign * w * (m[0] * T_rad + m[1] * T_ver) / (w * w)
        kappa_m = h_tt / g_tt
        # azimuthal curvature; smoothness forces the meridian value at the axis
        if rho > 1e-13:
            kappa_a = sign * (w * m[0] / rho - m[1])
        else:
            kappa_a = kappa_m
        return m, kappa_m, kappa_a, (rho, z, dr, dz, s, w)

    def _probe_center(self):
        t_c = 0.5 * self.t1
        m, kappa_m, kappa_a, (rho, z, dr, dz, s, w) = self._meridian_shape(t_c, +1)
        H_trial = kappa_m + (self.n - 1) * kappa_a
        return H_trial, w * m[1]

    def shape_at(self, t: float) -> ShapeData:
        sign = self.orientation_sign()
        m, kappa_m, kappa_a, (rho, z, dr, dz, s, w) = self._meridian_shape(t, sign)
        n = self.n
        x = self.embed(t)
        nu_comp = np.zeros(n + 1)
        nu_comp[0] = sign * w * m[0]
        nu_comp[-1] = sign * w * m[1]
        g = np.diag([s * s / (w * w)] + [rho * rho / (w * w)] * (n - 1))
        h = np.diag([kappa_m * s * s / (w * w)]
                    + [kappa_a * rho * rho / (w * w)] * (n - 1))
        kappa = np.sort(np.array([kappa_m] + [kappa_a] * (n - 1)))
        H = kappa_m + (n - 1) * kappa_a
        h2 = kappa_m ** 2 + (n - 1) * kappa_a ** 2
        p = HPoint(x)
        return ShapeData(p, HVector(p, nu_comp), g, h, float(H), float(h2), kappa)

    # -- metric coefficients for the intrinsic grid operators ----------
    def metric_coeffs(self, t: float) -> tuple[float, float, float, float]:
        """(A, B, A', B') of the induced metric A^2 dt^2 + B^2 dsigma^2."""
        rho, z, dr, dz, d2r, d2z = self.profile_jet(t)
        w = z
        s = np.sqrt(dr * dr + dz * dz)
        A = s / w
        B = rho / w
        ds = (dr * d2r + dz * d2z) / s
        dA = ds / w - s * dz / (w * w)
        dB = (dr * w - rho * dz) / (w * w)
        return A, B, dA, dB

    # -- boundary ------------------------------------------------------
    def boundary_frame_at(self, s=None) -> BoundaryFrame:
        t1 = self.t1
        shape = self.shape_at(t1)
        x = shape.position.coords
        w = x[-1]
        if abs(w - 1.0) > 1e-9:
            raise SupportError(f"boundary point height {w} is off the horosphere")
        n = self.n
        rho, z, dr, dz, *_ = self.profile_jet(t1)
        sn = np.sqrt(dr * dr + dz * dz)
        mu_comp = np.zeros(n + 1)
        mu_comp[0] = w * dr / sn
        mu_comp[-1] = w * dz / sn
        Nbar_comp = np.zeros(n + 1)
        Nbar_comp[-1] = -1.0
        nu_comp = shape.nu.components
        cos_theta = -float(np.dot(nu_comp, Nbar_comp)) / (w * w)
        cos_theta = min(1.0, max(-1.0, cos_theta))
        theta = float(np.arccos(cos_theta))
        sin_theta = np.sqrt(max(0.0, 1.0 - cos_theta ** 2))
        nubar_comp = cos_theta * mu_comp + sin_theta * nu_comp
        # boundary sphere of Euclidean radius rho in the flat horosphere;
        # its curvature w.r.t. nubar follows from the radial component
        Hhat = (n - 1) * nubar_comp[0] / rho
        g_tt = shape.g[0, 0]
        hmumu = shape.h[0, 0] / g_tt
        p = shape.position
        return BoundaryFrame(
            mu=HVector(p, mu_comp),
            nubar=HVector(p, nubar_comp),
            Nbar=HVector(p, Nbar_comp),
            theta=theta,
            hmumu=float(hmumu),
            Hhat=float(Hhat),
            nu=shape.nu,
            shape=shape,
        )

    @property
    def boundary_radius(self) -> float:
        rho, *_ = self.profile_jet(self.t1)
        return float(rho)


class GridSurface(ParamSurface):
    """Box chart u in [0, L_0] x ... with the face u_0 = 0 on the horosphere.

    ``embed_jet(u)`` returns (x, J, Hess) with J of shape (d, n) and Hess
    of shape (d, n, n).  Faces other than u_0 = 0 are artificial cuts
    unless the embedding closes them on the support.
    """

    chart_kind = "grid"
    artificial_cut = True

    def __init__(self, n: int, box: Sequence[tuple[float, float]],
                 embed_jet: Callable[[np.ndarray], tuple],
                 orientation: int = +1):
        if n < 2:
            raise ValueError("surface dimension n must be >= 2")
        if len(box) != n:
            raise ValueError("box must give one interval per chart axis")
        self.n = n
        self.box = [(float(lo), float(hi)) for lo, hi in box]
        self.embed_jet = embed_jet
        self.orientation = orientation
        self._sign_cache = None

    def _probe_center(self):
        u_c = np.array([0.5 * (lo + hi) for lo, hi in self.box])
        x, J, Hess = self.embed_jet(u_c)
        sd = _shape_from_jet(x, J, Hess, +1)
        return sd.H, sd.nu.components[-1]

    def shape_at(self, u) -> ShapeData:
        u = np.asarray(u, dtype=float)
        x, J, Hess = self.embed_jet(u)
        return _shape_from_jet(x, J, Hess, self.orientation_sign())

    def _boundary_chart_point(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u = np.empty(self.n)
        u[0] = self.box[0][0]
        u[1:] = s
        return u

    def boundary_frame_at(self, s) -> BoundaryFrame:
        u = self._boundary_chart_point(s)
        shape = self.shape_at(u)
        x = shape.position.coords
        w = x[-1]
        if abs(w - 1.0) > 1e-9:
            raise SupportError(f"boundary point height {w} is off the horosphere")
        _, J, _ = self.embed_jet(u)
        # outward conormal: tangent to the surface, orthogonal to the
        # boundary tangents, pointing against the u_0 axis
        v = -J[:, 0].astype(float)
        for k in range(1, self.n):
            tk = J[:, k]
            v -= np.dot(v, tk) / np.dot(tk, tk) * tk
        mu_comp = v / (np.linalg.norm(v) / w)
        Nbar_comp = np.zeros(self.n + 1)
        Nbar_comp[-1] = -1.0
        nu_comp = shape.nu.components
        cos_theta = -float(np.dot(nu_comp, Nbar_comp)) / (w * w)
        cos_theta = min(1.0, max(-1.0, cos_theta))
        theta = float(np.arccos(cos_theta))
        sin_theta = np.sqrt(max(0.0, 1.0 - cos_theta ** 2))
        nubar_comp = cos_theta * mu_comp + sin_theta * nu_comp
        Hhat = self._boundary_mean_curvature(np.atleast_1d(s), nubar_comp)
        # conormal second fundamental value h(mu, mu)
        mu_chart = np.linalg.lstsq(J, mu_comp, rcond=None)[0]
        hmumu = float(mu_chart @ shape.h @ mu_chart)
        p = shape.position
        return BoundaryFrame(
            mu=HVector(p, mu_comp),
            nubar=HVector(p, nubar_comp),
            Nbar=HVector(p, Nbar_comp),
            theta=theta,
            hmumu=hmumu,
            Hhat=float(Hhat),
            nu=shape.nu,
            shape=shape,
        )

    def _nubar_at(self, s) -> np.ndarray:
        u = self._boundary_chart_point(s)
        shape = self.shape_at(u)
        _, J, _ = self.embed_jet(u)
        w = shape.position.coords[-1]
        v = -J[:, 0].astype(float)
        for k in range(1, self.n):
            tk = J[:, k]
            v -= np.dot(v, tk) / np.dot(tk, tk) * tk
        mu_comp = v / (np.linalg.norm(v) / w)
        nu_comp = shape.nu.components
        Nbar_comp = np.zeros(self.n + 1)
        Nbar_comp[-1] = -1.0
        cos_theta = -float(np.dot(nu_comp, Nbar_comp)) / (w * w)
        sin_theta = np.sqrt(max(0.0, 1.0 - cos_theta ** 2))
        return cos_theta * mu_comp + sin_theta * nu_comp

    def _boundary_mean_curvature(self, s: np.ndarray, nubar_comp: np.ndarray) -> float:
        """Trace of the flat boundary shape operator via central differences."""
        k_dim = self.n - 1
        step = 1e-4
        total = 0.0
        u0 = self._boundary_chart_point(s)
        _, J0, _ = self.embed_jet(u0)
        for k in range(k_dim):
            e = np.zeros(k_dim)
            e[k] = step
            nb_p = self._nubar_at(s + e)
            nb_m = self._nubar_at(s - e)
            dnb = (nb_p - nb_m) / (2.0 * step)
            tangent = J0[:, 1 + k]
            total += np.dot(dnb[:-1], tangent[:-1]) / np.dot(tangent[:-1], tangent[:-1])
        return total


# ----------------------------------------------------------------------
# pointwise geometric scalars used by the integral and PDE identities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceFields:
    """Scalar fields of the distinguished ambient quantities at a chart point."""

    w: float
    V: float           # 1 / x_d
    gxnu: float        # g(x, nu)
    gEnu: float        # g(E_d, nu)
    gXnu: float        # g(x - E_d, nu)
    H: float
    h2: float
    E_tan_sq: float    # g(E_d^T, E_d^T), tangential part of the vertical field

    @staticmethod
    def from_shape(sd: ShapeData) -> "SurfaceFields":
        x = sd.position.coords
        w = x[-1]
        nu = sd.nu.components
        gxnu = float(np.dot(x, nu) / (w * w))
        gEnu = float(nu[-1] / (w * w))
        nu_hat_z = nu[-1] / w
        return SurfaceFields(
            w=float(w),
            V=1.0 / float(w),
            gxnu=gxnu,
            gEnu=gEnu,
            gXnu=gxnu - gEnu,
            H=sd.H,
            h2=sd.h2,
            E_tan_sq=float((1.0 - nu_hat_z ** 2) / (w * w)),
        )


def fields_at(S: ParamSurface, u) -> SurfaceFields:
    return SurfaceFields.from_shape(S.shape_at(u))


# ----------------------------------------------------------------------
# integration
# ----------------------------------------------------------------------

def integrate_M(S: ParamSurface, f, Q: QuadratureSpec) -> float:
    """Integral of the chart scalar field f over the surface."""
    if S.chart_kind == "profile":
        nodes, wts = Q.rule(0.0, S.t1)
        total = 0.0
        omega = unit_sphere_area(S.n - 1)
        for t, wt in zip(nodes, wts):
            A, B, _, _ = S.metric_coeffs(t)
            val = f(t)
            if not np.isfinite(val):
                raise EvaluationError(f"non-finite integrand at t={t}")
            total += wt * val * A * B ** (S.n - 1)
        return total * omega
    # grid chart: tensor-product Gauss-Legendre
    axes = [Q.rule(lo, hi) for lo, hi in S.box]
    total = 0.0
    for idx in np.ndindex(*(len(a[0]) for a in axes)):
        u = np.array([axes[k][0][i] for k, i in enumerate(idx)])
        wt = np.prod([axes[k][1][i] for k, i in enumerate(idx)])
        x, J, _ = S.embed_jet(u)
        w = x[-1]
        g = (J.T @ J) / (w * w)
        val = f(u)
        if not np.isfinite(val):
            raise EvaluationError(f"non-finite integrand at u={u}")
        total += wt * val * np.sqrt(np.linalg.det(g))
    return total


def integrate_dM(S: ParamSurface, f, Q: QuadratureSpec) -> float:
    """Integral of the boundary scalar field f over the on-support boundary."""
    if S.chart_kind == "profile":
        rho1 = S.boundary_radius
        omega = unit_sphere_area(S.n - 1)
        val = f(np.zeros(S.n - 1)) if callable(f) else float(f)
        if not np.isfinite(val):
            raise EvaluationError("non-finite boundary integrand")
        return val * rho1 ** (S.n - 1) * omega
    # grid chart: the support face u_0 = lo, flat measure at height 1
    axes = [Q.rule(lo, hi) for lo, hi in S.box[1:]]
    total = 0.0
    for idx in np.ndindex(*(len(a[0]) for a in axes)):
        s = np.array([axes[k][0][i] for k, i in enumerate(idx)])
        wt = np.prod([axes[k][1][i] for k, i in enumerate(idx)])
        u = S._boundary_chart_point(s)
        x, J, _ = S.embed_jet(u)
        gb = J[:, 1:].T @ J[:, 1:]  # flat: boundary sits at height 1
        val = f(s) if callable(f) else float(f)
        if not np.isfinite(val):
            raise EvaluationError(f"non-finite boundary integrand at s={s}")
        total += wt * val * np.sqrt(np.linalg.det(gb))
    return total


def check_immersion(S: ParamSurface, Q: QuadratureSpec) -> None:
    """Raise ImmersionError if the induced metric degenerates at any node."""
    if S.chart_kind == "profile":
        nodes, _ = Q.rule(0.0, S.t1)
        for t in nodes:
            A, B, _, _ = S.metric_coeffs(t)
            if not (A > 0 and B > 0 and np.isfinite(A) and np.isfinite(B)):
                raise ImmersionError(f"degenerate induced metric at t={t}")
    else:
        axes = [Q.rule(lo, hi) for lo, hi in S.box]
        for idx in np.ndindex(*(len(a[0]) for a in axes)):
            u = np.array([axes[k][0][i] for k, i in enumerate(idx)])
            S.shape_at(u)  # raises on degenerate metric
