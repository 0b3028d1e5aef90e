"""Jacobi operator, stability quadratic form, spectra and variation checks.

Discrete machinery lives on the 1-D profile grid of axisymmetric
surfaces: uniform nodes t_j = j*h on [0, t1] including both ends.  The
induced metric is A(t)^2 dt^2 + B(t)^2 dsigma^2, so for axisymmetric
fields

    Laplace-Beltrami:  Delta f = f''/A^2 + f' * [(n-1)B'/(A^2 B) - A'/A^3]

with the pole row replaced by the smooth-axis limit
Delta f(0) = n f''(0)/A(0)^2.  Differentiation uses 4th-order stencils
with even (reflective) extension across the pole, one-sided at the outer
boundary; nodal integration uses the 4th-order Gregory rule.

The quadratic form is assembled in the symmetric Dirichlet shape

    Q(phi) = int_M |grad phi|^2 - (|h|^2 - n) phi^2 dA - int_dM q phi^2 ds,

and the constrained spectra decompose over angular modes: mode l adds
the potential l(l+n-2)/B^2 and is discretized with conforming P1
elements, so every discrete eigenvalue bounds its continuous one from
above (Rayleigh-Ritz).  The volume (int_M phi = 0) and wetting
(int_dM phi = 0) constraints act on the axisymmetric mode only and are
enforced by null-space projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from .quadrature import (QuadratureSpec, fd_weights, gauss_legendre,
                         gregory_weights, unit_sphere_area)
from .halfspace import PotentialV
from .surfaces import ParamSurface, ProfileSurface, SurfaceFields, fields_at

__all__ = [
    "ScalarField",
    "RobinData",
    "SpectrumResult",
    "VariationCheck",
    "GridError",
    "MIN_RESOLUTION",
    "ZERO_MODE_TOL",
    "laplace_beltrami",
    "jacobi_apply",
    "robin_q",
    "normal_derivative",
    "phi_test",
    "phi_aux",
    "jacobi_field_residuals",
    "boundary_identity_residuals",
    "quadratic_form",
    "constrained_spectrum",
    "fd_variation_check",
    "energy_second_difference",
    "umbilicity_deficit",
    "boundary_cancellation",
    "sphere_mode_multiplicity",
]

MIN_RESOLUTION = 16
ZERO_MODE_TOL = 1e-6


class GridError(ValueError):
    """Grid too coarse or incompatible with the surface chart."""


def _require_profile(S: ParamSurface) -> ProfileSurface:
    if not isinstance(S, ProfileSurface):
        raise GridError(
            "discrete operators require an axisymmetric (profile) chart"
        )
    return S


# ----------------------------------------------------------------------
# grid geometry cache
# ----------------------------------------------------------------------

class _ProfileGrid:
    """Nodal geometry, stencil matrices and quadrature weights for one grid."""

    def __init__(self, S: ProfileSurface, resolution: int):
        if resolution < MIN_RESOLUTION:
            raise GridError(
                f"grid resolution {resolution} < minimum {MIN_RESOLUTION}"
            )
        self.S = S
        self.N = resolution
        self.h = S.t1 / resolution
        self.nodes = np.linspace(0.0, S.t1, resolution + 1)
        n = S.n

        coeffs = np.array([S.metric_coeffs(t) for t in self.nodes])
        self.A, self.B, self.dA, self.dB = coeffs.T
        flds = [fields_at(S, t) for t in self.nodes]
        self.V = np.array([f.V for f in flds])
        self.gxnu = np.array([f.gxnu for f in flds])
        self.gEnu = np.array([f.gEnu for f in flds])
        self.gXnu = np.array([f.gXnu for f in flds])
        self.H = np.array([f.H for f in flds])
        self.h2 = np.array([f.h2 for f in flds])
        self.E_tan_sq = np.array([f.E_tan_sq for f in flds])

        omega = unit_sphere_area(n - 1)
        # nodal area weights; the pole weight carries B(0) = 0
        self.dA_weights = (gregory_weights(resolution + 1, self.h)
                           * self.A * self.B ** (n - 1) * omega)
        bf = S.boundary_frame_at()
        self.frame = bf
        self.theta = bf.theta
        self.hmumu = bf.hmumu
        self.boundary_measure = omega * S.boundary_radius ** (n - 1)
        self.area = float(np.sum(self.dA_weights))
        self.H_mean = float(np.sum(self.dA_weights * self.H) / self.area)
        self.H_spread = float(np.max(np.abs(self.H - self.H_mean)))

        self.D1 = self._stencil_matrix(1)
        self.D2 = self._stencil_matrix(2)

    def _stencil_matrix(self, deriv: int) -> np.ndarray:
        """4th-order differentiation with even pole extension, one-sided tail."""
        N, h = self.N, self.h
        D = np.zeros((N + 1, N + 1))
        central = fd_weights(np.arange(-2, 3), deriv) / h ** deriv
        for j in range(N + 1):
            if j >= N - 1:
                offs = np.arange(-4, 1) + (N - j)
                w = fd_weights(offs, deriv) / h ** deriv
                for o, c in zip(offs, w):
                    D[j, j + o] += c
            else:
                for o, c in zip(np.arange(-2, 3), central):
                    D[j, abs(j + o)] += c  # fold: even extension across t=0
        return D

    def laplacian_matrix(self) -> np.ndarray:
        n = self.S.n
        L = self.D2 / self.A[:, None] ** 2
        C = np.zeros_like(self.A)
        C[1:] = ((n - 1) * self.dB[1:] / (self.A[1:] ** 2 * self.B[1:])
                 - self.dA[1:] / self.A[1:] ** 3)
        L += C[:, None] * self.D1
        # smooth-axis limit at the pole
        L[0, :] = n * self.D2[0, :] / self.A[0] ** 2
        return L


def _grid(S: ProfileSurface, resolution: int) -> _ProfileGrid:
    cache = S.__dict__.setdefault("_stability_grids", {})
    if resolution not in cache:
        cache[resolution] = _ProfileGrid(S, resolution)
    return cache[resolution]


# ----------------------------------------------------------------------
# scalar fields and discrete operators
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarField:
    """Axisymmetric nodal field on the uniform profile grid."""

    surface: ProfileSurface
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.shape[0] < MIN_RESOLUTION + 1:
            raise GridError(
                f"field needs >= {MIN_RESOLUTION + 1} nodes, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")

    @property
    def resolution(self) -> int:
        return self.values.shape[0] - 1

    @property
    def nodes(self) -> np.ndarray:
        return _grid(self.surface, self.resolution).nodes

    @staticmethod
    def from_function(S: ParamSurface, fn: Callable[[float], float],
                      resolution: int) -> "ScalarField":
        S = _require_profile(S)
        g = _grid(S, resolution)
        return ScalarField(S, np.array([fn(t) for t in g.nodes]))

    def norm_sq(self) -> float:
        """L2 norm squared with the surface area measure."""
        g = _grid(self.surface, self.resolution)
        return float(np.sum(g.dA_weights * self.values ** 2))

    def integral_M(self) -> float:
        g = _grid(self.surface, self.resolution)
        return float(np.sum(g.dA_weights * self.values))

    def integral_dM(self) -> float:
        g = _grid(self.surface, self.resolution)
        return float(self.values[-1] * g.boundary_measure)


@dataclass(frozen=True)
class RobinData:
    """Robin coefficient of the second-variation boundary term."""

    theta: float
    hmumu: float
    q: float


def robin_q(S: ParamSurface) -> RobinData:
    """q = csc(theta) + cot(theta) h(mu,mu) at the (constant-angle) boundary."""
    bf = S.boundary_frame_at() if S.chart_kind == "profile" \
        else S.boundary_frame_at(np.zeros(S.n - 1))
    th = bf.theta
    q = 1.0 / math.sin(th) + bf.hmumu / math.tan(th)
    return RobinData(theta=th, hmumu=bf.hmumu, q=q)


def laplace_beltrami(f: ScalarField) -> ScalarField:
    g = _grid(f.surface, f.resolution)
    return ScalarField(f.surface, g.laplacian_matrix() @ f.values)


def jacobi_apply(f: ScalarField) -> ScalarField:
    """J f = Delta f + (|h|^2 - n) f."""
    g = _grid(f.surface, f.resolution)
    lap = g.laplacian_matrix() @ f.values
    return ScalarField(f.surface, lap + (g.h2 - f.surface.n) * f.values)


def normal_derivative(f: ScalarField) -> float:
    """Outward conormal derivative at the boundary, f'(t1)/A(t1)."""
    g = _grid(f.surface, f.resolution)
    return float((g.D1 @ f.values)[-1] / g.A[-1])


# ----------------------------------------------------------------------
# the distinguished test and auxiliary functions
# ----------------------------------------------------------------------

def phi_test(S: ParamSurface, resolution: int = 128
             ) -> tuple[ScalarField, dict]:
    """The admissible test function n V - g(X,nu) H - n cos(theta) g(x,nu).

    Returns the nodal field plus its four defining residuals: the Jacobi
    equation J phi = (n|h|^2 - H^2) V, the Robin boundary condition, and
    the two vanishing integrals over M and dM.  On near-CMC input H is
    the area-weighted mean and the node spread is reported.
    """
    S = _require_profile(S)
    g = _grid(S, resolution)
    n, H = S.n, g.H_mean
    ct = math.cos(g.theta)
    phi = ScalarField(S, n * g.V - g.gXnu * H - n * ct * g.gxnu)
    jac = jacobi_apply(phi).values
    rhs = (n * g.h2 - H * H) * g.V
    q = robin_q(S).q
    residuals = {
        "jacobi": float(np.max(np.abs(jac - rhs))),
        "robin": abs(normal_derivative(phi) - q * phi.values[-1]),
        "integral_M": abs(phi.integral_M()),
        "integral_dM": abs(phi.integral_dM()),
        "H_mean": H,
        "H_spread": g.H_spread,
        "cmc_ok": g.H_spread < 1e-8,
    }
    return phi, residuals


def phi_aux(S: ParamSurface, resolution: int = 128
            ) -> tuple[ScalarField, dict]:
    """The auxiliary function Phi = -H V - n g(E,nu) with its identities.

    Residuals: Delta Phi = (n|h|^2 - H^2) g(E,nu); the boundary value
    -H - n cos(theta); the conormal derivative -sin(theta)(H - n h(mu,mu)).
    """
    S = _require_profile(S)
    g = _grid(S, resolution)
    n, H = S.n, g.H_mean
    phi = ScalarField(S, -H * g.V - n * g.gEnu)
    lap = laplace_beltrami(phi).values
    rhs = (n * g.h2 - H * H) * g.gEnu
    st, ct = math.sin(g.theta), math.cos(g.theta)
    residuals = {
        "laplace": float(np.max(np.abs(lap - rhs))),
        "boundary_value": abs(phi.values[-1] - (-H - n * ct)),
        "conormal": abs(normal_derivative(phi)
                        - (-st * (H - n * g.hmumu))),
        "constant_deviation": float(np.max(np.abs(phi.values
                                                  - (-H - n * ct)))),
        "H_mean": H,
        "H_spread": g.H_spread,
        "cmc_ok": g.H_spread < 1e-8,
    }
    return phi, residuals


def jacobi_field_residuals(S: ParamSurface, resolution: int = 128) -> dict:
    """Jacobi-equation residuals of the distinguished normal components.

    On a CMC surface: J g(x,nu) = 0, J g(E,nu) = -H V - n g(E,nu), and
    J g(X,nu) = H V + n g(E,nu).  The last right-hand side is also
    checked in its gradient form -n g(grad V, nu), which must agree with
    +n g(E,nu) pointwise.
    """
    S = _require_profile(S)
    g = _grid(S, resolution)
    n, H = S.n, g.H_mean
    f_x = ScalarField(S, g.gxnu)
    f_E = ScalarField(S, g.gEnu)
    f_X = ScalarField(S, g.gXnu)
    # gradient form of the conformal-field right-hand side: grad V = -E_d,
    # so g(grad V, nu) = -g(E, nu) exactly
    grad_form = np.array([
        -n * float(np.dot(PotentialV(n + 1).gradient(
            S.shape_at(t).position).components,
            S.shape_at(t).nu.components))
        / S.shape_at(t).position.height ** 2
        for t in g.nodes
    ])
    return {
        "position": float(np.max(np.abs(jacobi_apply(f_x).values))),
        "vertical": float(np.max(np.abs(
            jacobi_apply(f_E).values - (-H * g.V - n * g.gEnu)))),
        "conformal": float(np.max(np.abs(
            jacobi_apply(f_X).values - (H * g.V + n * g.gEnu)))),
        "rhs_forms_agree": float(np.max(np.abs(
            grad_form - (n * g.gEnu)))),
        "H_mean": H,
        "H_spread": g.H_spread,
    }


def boundary_identity_residuals(S: ParamSurface, resolution: int = 128
                                ) -> dict:
    """Conormal-derivative identities of the distinguished boundary fields.

    Checks, at the boundary node: the Robin relations for
    V - cos(theta) g(E,nu) and g(X,nu), the derivative formula for
    g(x,nu), and the tangency relation g(X,mu) = cot(theta) g(X,nu).
    """
    S = _require_profile(S)
    g = _grid(S, resolution)
    q = robin_q(S).q
    f1 = ScalarField(S, g.V - math.cos(g.theta) * g.gEnu)
    f2 = ScalarField(S, g.gXnu)
    f3 = ScalarField(S, g.gxnu)
    bf = g.frame
    x = bf.shape.position.coords
    w = x[-1]
    gxnubar = float(np.dot(x, bf.nubar.components) / (w * w))
    gxmu = float(np.dot(x, bf.mu.components) / (w * w))
    e_d = np.zeros_like(x)
    e_d[-1] = 1.0
    X = x - e_d
    gXmu = float(np.dot(X, bf.mu.components) / (w * w))
    gXnu_b = float(np.dot(X, bf.nu.components) / (w * w))
    return {
        "robin_potential": abs(normal_derivative(f1) - q * f1.values[-1]),
        "robin_conformal": abs(normal_derivative(f2) - q * f2.values[-1]),
        "position": abs(normal_derivative(f3)
                        - (gxnubar + g.hmumu * gxmu)),
        "tangency": abs(gXmu - gXnu_b / math.tan(g.theta)),
    }


# ----------------------------------------------------------------------
# quadratic form and constrained spectra
# ----------------------------------------------------------------------

def quadratic_form(S: ParamSurface, phi: ScalarField) -> float:
    """Second variation of energy in symmetric Dirichlet form."""
    S = _require_profile(S)
    if phi.surface is not S:
        raise GridError("field was built on a different surface")
    g = _grid(S, phi.resolution)
    dphi = g.D1 @ phi.values
    grad_sq = dphi ** 2 / g.A ** 2
    q = robin_q(S).q
    bulk = float(np.sum(g.dA_weights
                        * (grad_sq - (g.h2 - S.n) * phi.values ** 2)))
    return bulk - q * phi.values[-1] ** 2 * g.boundary_measure


def sphere_mode_multiplicity(n: int, l: int) -> int:
    """Dimension of the degree-l spherical harmonics on S^(n-1)."""
    if l == 0:
        return 1
    d = n - 1
    if d == 1:
        return 2
    def comb(a, b):
        return math.comb(a, b) if a >= b >= 0 else 0
    return comb(l + d, d) - comb(l + d - 2, d)


@dataclass(frozen=True)
class SpectrumResult:
    constraint: str  # VOLUME | WETTING | NONE
    eigenvalues: np.ndarray
    morse_index: int
    zero_modes: int
    resolution: int
    num_requested: int
    modes_used: int


def _mode_matrices(g: _ProfileGrid, l: int) -> tuple[np.ndarray, np.ndarray,
                                                     np.ndarray]:
    """(K, M, volume-constraint row) of the P1 discretization of mode l."""
    S = g.S
    n = S.n
    N = g.N
    lam = l * (l + n - 2)
    omega = unit_sphere_area(n - 1)
    K = np.zeros((N + 1, N + 1))
    M = np.zeros((N + 1, N + 1))
    c = np.zeros(N + 1)
    glx, glw = gauss_legendre(4, 0.0, 1.0)
    for e in range(N):
        t0, t1 = g.nodes[e], g.nodes[e + 1]
        he = t1 - t0
        for xi, wq in zip(glx, glw):
            t = t0 + he * xi
            A, B, _, _ = S.metric_coeffs(t)
            fl = fields_at(S, t)
            Wt = omega * A * B ** (n - 1) * he * wq
            shp = np.array([1.0 - xi, xi])
            dsh = np.array([-1.0, 1.0]) / he
            idx = (e, e + 1)
            pot = (S.n - fl.h2) + (lam / (B * B) if l > 0 else 0.0)
            for a in range(2):
                c[idx[a]] += Wt * shp[a]
                for b in range(2):
                    K[idx[a], idx[b]] += Wt * (dsh[a] * dsh[b] / (A * A)
                                               + pot * shp[a] * shp[b])
                    M[idx[a], idx[b]] += Wt * shp[a] * shp[b]
    q = robin_q(S).q
    K[N, N] -= q * g.boundary_measure
    return K, M, c


def constrained_spectrum(S: ParamSurface, constraint: str = "VOLUME",
                         resolution: int = 128, k: int = 10,
                         max_mode: int = 40) -> SpectrumResult:
    """Lowest eigenvalues of the second-variation form under one constraint.

    The linear constraint (volume or wetting mean) only restricts the
    axisymmetric mode; every higher angular mode satisfies it identically
    and contributes with its spherical-harmonic multiplicity.
    """
    if constraint not in ("VOLUME", "WETTING", "NONE"):
        raise ValueError(f"unknown constraint {constraint!r}")
    S = _require_profile(S)
    g = _grid(S, resolution)
    collected: list[float] = []
    modes_used = 0
    for l in range(max_mode + 1):
        K, M, c = _mode_matrices(g, l)
        if l == 0:
            if constraint == "VOLUME":
                Z = scipy.linalg.null_space(c[None, :])
            elif constraint == "WETTING":
                cw = np.zeros(g.N + 1)
                cw[-1] = g.boundary_measure
                Z = scipy.linalg.null_space(cw[None, :])
            else:
                Z = np.eye(g.N + 1)
            Kr, Mr = Z.T @ K @ Z, Z.T @ M @ Z
        else:
            # pole regularity: modes with angular dependence vanish on the axis
            Kr, Mr = K[1:, 1:], M[1:, 1:]
        try:
            vals = scipy.linalg.eigh(Kr, Mr, eigvals_only=True)
        except scipy.linalg.LinAlgError as exc:
            raise ArithmeticError(
                f"eigenvalue solve failed for angular mode {l}: {exc}"
            ) from exc
        mult = sphere_mode_multiplicity(S.n, l)
        collected.extend([float(v) for v in vals[:k] for _ in range(mult)])
        modes_used = l + 1
        collected.sort()
        if len(collected) >= k and l >= 2 and vals[0] > collected[k - 1]:
            break
    eigs = np.array(collected[:k])
    zero_modes = int(np.sum(np.abs(eigs) <= ZERO_MODE_TOL))
    morse = int(np.sum(eigs < -ZERO_MODE_TOL))
    return SpectrumResult(
        constraint=constraint,
        eigenvalues=eigs,
        morse_index=morse,
        zero_modes=zero_modes,
        resolution=resolution,
        num_requested=k,
        modes_used=modes_used,
    )


# ----------------------------------------------------------------------
# finite-difference variation cross-checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class VariationCheck:
    functional: str  # AREA | WETTING_AREA | VOLUME | ENERGY
    fd_value: float
    formula_value: float
    step: float
    richardson_order: int


class _Variation:
    """Straight-line admissible variation x + s*Y from a nodal scalar.

    Y = phi*nu + eta*mu with eta a boundary-collar ramp chosen so the
    vertical component of Y vanishes at the boundary: the displaced
    boundary slides inside the flat support exactly.
    """

    def __init__(self, S: ProfileSurface, phi: ScalarField):
        self.S = S
        g = _grid(S, phi.resolution)
        self.g = g
        self.spline = CubicSpline(g.nodes, phi.values)
        self.sign = S.orientation_sign()
        nu1 = self._nu(S.t1)
        mu1 = self._mu(S.t1)
        if abs(mu1[1]) < 1e-12:
            raise ValueError("conormal is horizontal; boundary slide undefined")
        self.eta1 = -phi.values[-1] * nu1[1] / mu1[1]
        self.t_ramp = 0.8 * S.t1

    def _nu(self, t: float) -> np.ndarray:
        rho, z, dr, dz, *_ = self.S.profile_jet(t)
        s = math.hypot(dr, dz)
        return self.sign * z * np.array([dz, -dr]) / s

    def _mu(self, t: float) -> np.ndarray:
        rho, z, dr, dz, *_ = self.S.profile_jet(t)
        s = math.hypot(dr, dz)
        return z * np.array([dr, dz]) / s

    def _ramp(self, t: float) -> float:
        u = (t - self.t_ramp) / (self.S.t1 - self.t_ramp)
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return 1.0
        a = math.exp(-1.0 / u)
        b = math.exp(-1.0 / (1.0 - u))
        return a / (a + b)

    def displacement(self, t: float) -> np.ndarray:
        """(radial, vertical) Euclidean displacement at parameter t."""
        return (self.spline(t) * self._nu(t)
                + self.eta1 * self._ramp(t) * self._mu(t))

    def meridian(self, t: float, s: float, dt: float = 1e-6
                 ) -> tuple[float, float, float, float]:
        """(rho, z, rho', z') of the displaced profile via fine differencing."""
        rho, z, dr, dz, *_ = self.S.profile_jet(t)
        Y = self.displacement(t)
        Yp = (self.displacement(t + dt) - self.displacement(t - dt)) / (2 * dt)
        return (rho + s * Y[0], z + s * Y[1], dr + s * Yp[0], dz + s * Yp[1])

    # -- functionals of the deformed surface ---------------------------
    def area(self, s: float, Q: QuadratureSpec) -> float:
        n = self.S.n
        omega = unit_sphere_area(n - 1)
        nodes, wts = Q.rule(0.0, self.S.t1)
        total = 0.0
        for t, wq in zip(nodes, wts):
            rho, z, dr, dz = self.meridian(t, s)
            total += wq * math.hypot(dr, dz) * rho ** (n - 1) / z ** n
        return omega * total

    def wetting_area(self, s: float) -> float:
        """Signed flat area swept on the support relative to s = 0."""
        n = self.S.n
        omega = unit_sphere_area(n - 1)
        rho1 = self.S.boundary_radius
        Y1 = self.displacement(self.S.t1)
        rho_s = rho1 + s * Y1[0]
        nubar_rad = self.g.frame.nubar.components[0]
        sgn = 1.0 if nubar_rad > 0 else -1.0
        return sgn * omega * (rho_s ** n - rho1 ** n) / n

    def volume(self, s: float, Q: QuadratureSpec) -> float:
        """Signed enclosed-volume change relative to s = 0 (swept region)."""
        if s == 0.0:
            return 0.0
        n = self.S.n
        omega = unit_sphere_area(n - 1)
        nodes, wts = Q.rule(0.0, self.S.t1)
        snodes, swts = gauss_legendre(8, 0.0, s) if s > 0 else \
            gauss_legendre(8, s, 0.0)
        ssign = 1.0 if s > 0 else -1.0
        total = 0.0
        for t, wq in zip(nodes, wts):
            Y = self.displacement(t)
            for sv, sw in zip(snodes, swts):
                rho, z, dr, dz = self.meridian(t, sv)
                total += wq * sw * (Y[0] * dz - Y[1] * dr) \
                    * rho ** (n - 1) / z ** (n + 1)
        return self.sign * ssign * omega * total

    def energy(self, s: float, Q: QuadratureSpec) -> float:
        return self.area(s, Q) - math.cos(self.g.theta) * self.wetting_area(s)


def _first_variation_formula(var: _Variation, functional: str,
                             Q: QuadratureSpec) -> float:
    """The printed first-variation integral for the constructed Y."""
    S, g = var.S, var.g
    nodes, wts = Q.rule(0.0, S.t1)
    omega = unit_sphere_area(S.n - 1)

    def g_Y_nu(t):
        # hyperbolic normal component of Y: phi by construction away from
        # the collar, phi plus the tangential ramp contribution inside it
        Y = var.displacement(t)
        nu = var._nu(t)
        _, z, *_ = S.profile_jet(t)
        return float(np.dot(Y, nu)) / (z * z)

    def dAw(t):
        rho, z, dr, dz, *_ = S.profile_jet(t)
        return omega * math.hypot(dr, dz) * rho ** (S.n - 1) / z ** S.n

    def H_at(t):
        return fields_at(S, t).H

    bulk_phi = sum(wq * g_Y_nu(t) * dAw(t) for t, wq in zip(nodes, wts))
    bulk_Hphi = sum(wq * H_at(t) * g_Y_nu(t) * dAw(t)
                    for t, wq in zip(nodes, wts))
    # boundary terms: g(Y, mu) = eta1 and g(Y, nubar) at t1
    Y1 = var.displacement(S.t1)
    mu1 = g.frame.mu.components[[0, -1]]
    nubar1 = g.frame.nubar.components[[0, -1]]
    gYmu = float(np.dot(Y1, mu1))
    gYnubar = float(np.dot(Y1, nubar1))
    bm = g.boundary_measure
    if functional == "AREA":
        return bulk_Hphi + bm * gYmu
    if functional == "WETTING_AREA":
        return bm * gYnubar
    if functional == "VOLUME":
        return bulk_phi
    if functional == "ENERGY":
        ct = math.cos(g.theta)
        return bulk_Hphi + bm * (gYmu - ct * gYnubar)
    raise ValueError(f"unknown functional {functional!r}")


def fd_variation_check(S: ParamSurface, phi: ScalarField, functional: str,
                       step: float = 1e-3,
                       Q: Optional[QuadratureSpec] = None) -> VariationCheck:
    """Richardson-extrapolated d/ds of a functional vs its printed formula."""
    S = _require_profile(S)
    # the boundary-collar ramp has large high derivatives; resolve it
    Q = Q or QuadratureSpec(256)
    var = _Variation(S, phi)
    fns = {
        "AREA": lambda s: var.area(s, Q),
        "WETTING_AREA": var.wetting_area,
        "VOLUME": lambda s: var.volume(s, Q),
        "ENERGY": lambda s: var.energy(s, Q),
    }
    if functional not in fns:
        raise ValueError(f"unknown functional {functional!r}")
    F = fns[functional]

    def central(d):
        return (F(d) - F(-d)) / (2.0 * d)

    fd = (4.0 * central(step / 2.0) - central(step)) / 3.0
    formula = _first_variation_formula(var, functional, Q)
    return VariationCheck(functional=functional, fd_value=fd,
                          formula_value=formula, step=step,
                          richardson_order=4)


def energy_second_difference(S: ParamSurface, phi: ScalarField,
                             step: float = 1e-2,
                             Q: Optional[QuadratureSpec] = None
                             ) -> tuple[float, float]:
    """(FD second derivative of E - H_mean*V, quadratic_form value).

    At a capillary critical point the second derivative of the volume
    Lagrangian along the straight-line variation depends only on the
    normal scalar, so it must reproduce the quadratic form.
    """
    S = _require_profile(S)
    Q = Q or QuadratureSpec(256)
    var = _Variation(S, phi)
    H = var.g.H_mean

    def L(s):
        return var.energy(s, Q) - H * var.volume(s, Q)

    def second(d):
        return (L(d) - 2.0 * L(0.0) + L(-d)) / (d * d)

    fd2 = (16.0 * second(step / 2.0) - second(step)) / 15.0
    return fd2, quadratic_form(S, phi)


# ----------------------------------------------------------------------
# umbilicity deficit
# ----------------------------------------------------------------------

def _phi_aux_value(S: ParamSurface, H_mean: float, u) -> float:
    fl = fields_at(S, u)
    return -H_mean * fl.V - S.n * fl.gEnu


def umbilicity_deficit(S: ParamSurface,
                       Q: Optional[QuadratureSpec] = None) -> float:
    """D(S) = int_M n g(E^T,E^T)(n|h|^2 - H^2) + |grad Phi|^2 dA.

    The Cauchy-Schwarz term uses the pointwise mean curvature (keeping
    the integrand nonnegative on non-CMC controls); Phi uses the
    area-weighted mean.  D vanishes exactly on umbilical caps.
    """
    Q = Q or QuadratureSpec()
    from .surfaces import integrate_M
    n = S.n
    area = integrate_M(S, lambda u: 1.0, Q)
    H_mean = integrate_M(S, lambda u: fields_at(S, u).H, Q) / area

    if S.chart_kind == "profile":
        dt = 1e-4
        w5 = fd_weights(np.arange(-2, 3), 1) / dt

        def integrand(t):
            fl = fields_at(S, t)
            cs = n * fl.E_tan_sq * (n * fl.h2 - fl.H ** 2)
            dphi = sum(c * _phi_aux_value(S, H_mean, t + o * dt)
                       for o, c in zip(range(-2, 3), w5))
            A, _, _, _ = S.metric_coeffs(t)
            return cs + (dphi / A) ** 2

        return integrate_M(S, integrand, Q)

    du = 1e-4
    w5 = fd_weights(np.arange(-2, 3), 1) / du

    def integrand(u):
        fl = fields_at(S, u)
        cs = n * fl.E_tan_sq * (n * fl.h2 - fl.H ** 2)
        grad = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = du
            grad[i] = sum(c * _phi_aux_value(S, H_mean, u + o * e)
                          for o, c in zip(range(-2, 3), w5))
        sd = S.shape_at(u)
        ginv = np.linalg.inv(sd.g)
        return cs + float(grad @ ginv @ grad)

    return integrate_M(S, integrand, Q)


def boundary_cancellation(S: ParamSurface,
                          Q: Optional[QuadratureSpec] = None) -> float:
    """int_dM [ -sin(theta) + cos(theta) g(x,nubar) + h(mu,mu) g(x,nubar) ] ds.

    Vanishes on constant-angle CMC caps (the key boundary cancellation of
    the stability argument).
    """
    Q = Q or QuadratureSpec()
    from .surfaces import integrate_dM

    def f(s):
        bf = S.boundary_frame_at(s) if S.chart_kind != "profile" \
            else S.boundary_frame_at()
        x = bf.shape.position.coords
        w = x[-1]
        gxnubar = float(np.dot(x, bf.nubar.components) / (w * w))
        th = bf.theta
        return (-math.sin(th) + math.cos(th) * gxnubar
                + bf.hmumu * gxnubar)

    return integrate_dM(S, f, Q)
