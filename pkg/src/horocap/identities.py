"""Integral identities of constant-contact-angle hypersurfaces on the support.

Five identities are verified by direct quadrature, with the integrands
assembled exactly as stated:

* I_BOUNDARY_MINK:  int_dM [ g(x,nubar) Hhat - (n-1) ] ds = 0
* I_HX_NU:          int_M g(x,nu) H dA = int_dM [ -cos(theta) g(x,nubar) + sin(theta) ] ds
* I_X_NU:           int_M n g(x,nu) dA = int_dM g(x,nubar) ds
* I_COR:            int_dM [ n sin(theta) - g(x,nubar) H - n cos(theta) g(x,nubar) ] ds = 0
* I_MINK1:          int_M [ n V - g(X,nu) H - n cos(theta) g(x,nu) ] dA = 0

All of them need only a constant contact angle except I_COR, which needs
constant mean curvature; on declared non-CMC controls a failing I_COR is
reported as EXPECTED_FAIL.  H enters pointwise everywhere except I_COR,
where the area-weighted mean is used and the node spread recorded.

Pass tolerances are scheme-derived: max(1e-8, 100x the quadrature error
estimated by node doubling).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .quadrature import QuadratureSpec
from .surfaces import (ParamSurface, SurfaceFields, fields_at, integrate_M,
                       integrate_dM)

__all__ = [
    "IDENTITY_IDS",
    "IdentityReport",
    "AngleError",
    "verify",
    "suite",
    "cmc_stats",
    "angle_stats",
]

IDENTITY_IDS = ("I_BOUNDARY_MINK", "I_COR", "I_HX_NU", "I_MINK1", "I_X_NU")

REQUIRES_CMC = {"I_COR"}

BASE_TOL = 1e-8
CMC_SPREAD_TOL = 1e-8
ANGLE_SPREAD_TOL = 1e-8


class AngleError(ValueError):
    """Contact angle is not constant along the boundary."""


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    requires_cmc: bool
    cmc_ok: bool
    tolerance: float
    status: str  # PASS | FAIL | EXPECTED_FAIL
    quad_order: int
    H_mean: float
    H_spread: float
    theta: float


class _FieldCache:
    """Memoized pointwise/boundary data for one surface."""

    def __init__(self, S: ParamSurface):
        self.S = S
        self._interior: dict = {}
        self._boundary: dict = {}

    def interior(self, u) -> SurfaceFields:
        key = u if np.isscalar(u) else tuple(np.atleast_1d(u))
        if key not in self._interior:
            self._interior[key] = fields_at(self.S, u)
        return self._interior[key]

    def boundary(self, s) -> dict:
        key = tuple(np.atleast_1d(s))
        if key not in self._boundary:
            bf = self.S.boundary_frame_at(s)
            x = bf.shape.position.coords
            w = x[-1]
            self._boundary[key] = {
                "theta": bf.theta,
                "Hhat": bf.Hhat,
                "H": bf.shape.H,
                "gxnubar": float(np.dot(x, bf.nubar.components) / (w * w)),
            }
        return self._boundary[key]


def angle_stats(S: ParamSurface, num_samples: int = 32) -> tuple[float, float]:
    """(mean, standard deviation) of the contact angle over boundary samples."""
    if S.chart_kind == "profile":
        th = S.boundary_frame_at().theta
        return th, 0.0
    thetas = []
    for pt in _boundary_samples(S, num_samples):
        thetas.append(S.boundary_frame_at(pt).theta)
    th = np.asarray(thetas)
    return float(th.mean()), float(th.std())


def _boundary_samples(S: ParamSurface, num: int) -> list[np.ndarray]:
    k = S.n - 1
    per_axis = max(2, int(round(num ** (1.0 / k))))
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in S.box[1:]]
    return [np.array(pt) for pt in itertools.product(*axes)]


def cmc_stats(S: ParamSurface, Q: QuadratureSpec,
              cache: Optional[_FieldCache] = None) -> tuple[float, float]:
    """Area-weighted mean of H and the max-node spread |H - mean|."""
    cache = cache or _FieldCache(S)
    area = integrate_M(S, lambda u: 1.0, Q)
    h_int = integrate_M(S, lambda u: cache.interior(u).H, Q)
    H_mean = h_int / area
    if S.chart_kind == "profile":
        nodes, _ = Q.rule(0.0, S.t1)
        hs = np.array([cache.interior(t).H for t in nodes])
    else:
        hs = np.array([cache.interior(u).H
                       for u in _grid_nodes(S, Q)])
    return float(H_mean), float(np.max(np.abs(hs - H_mean)))


def _grid_nodes(S: ParamSurface, Q: QuadratureSpec) -> list[np.ndarray]:
    axes = [Q.rule(lo, hi)[0] for lo, hi in S.box]
    return [np.array(pt) for pt in itertools.product(*axes)]


def _evaluate(S: ParamSurface, identity_id: str, Q: QuadratureSpec,
              cache: _FieldCache, theta: float, H_mean: float
              ) -> tuple[float, float]:
    """(lhs, rhs) of one identity at the given quadrature."""
    n = S.n
    ct, st = math.cos(theta), math.sin(theta)
    if identity_id == "I_BOUNDARY_MINK":
        lhs = integrate_dM(
            S, lambda s: cache.boundary(s)["gxnubar"] * cache.boundary(s)["Hhat"]
            - (n - 1), Q)
        return lhs, 0.0
    if identity_id == "I_HX_NU":
        lhs = integrate_M(
            S, lambda u: cache.interior(u).gxnu * cache.interior(u).H, Q)
        rhs = integrate_dM(
            S, lambda s: -ct * cache.boundary(s)["gxnubar"] + st, Q)
        return lhs, rhs
    if identity_id == "I_X_NU":
        lhs = integrate_M(S, lambda u: n * cache.interior(u).gxnu, Q)
        rhs = integrate_dM(S, lambda s: cache.boundary(s)["gxnubar"], Q)
        return lhs, rhs
    if identity_id == "I_COR":
        lhs = integrate_dM(
            S, lambda s: n * st - cache.boundary(s)["gxnubar"] * H_mean
            - n * ct * cache.boundary(s)["gxnubar"], Q)
        return lhs, 0.0
    if identity_id == "I_MINK1":
        def f(u):
            fl = cache.interior(u)
            return n * fl.V - fl.gXnu * fl.H - n * ct * fl.gxnu
        return integrate_M(S, f, Q), 0.0
    raise ValueError(f"unknown identity id {identity_id!r}")


def verify(S: ParamSurface, identity_id: str, Q: QuadratureSpec,
           cache: Optional[_FieldCache] = None) -> IdentityReport:
    """Evaluate one identity and grade its residual against the scheme tolerance."""
    if identity_id not in IDENTITY_IDS:
        raise ValueError(f"unknown identity id {identity_id!r}")
    cache = cache or _FieldCache(S)
    theta, theta_spread = angle_stats(S)
    if theta_spread > ANGLE_SPREAD_TOL:
        raise AngleError(
            f"contact angle varies along the boundary (std {theta_spread:.3e})"
        )
    H_mean, H_spread = cmc_stats(S, Q, cache)
    requires_cmc = identity_id in REQUIRES_CMC
    cmc_ok = H_spread <= max(CMC_SPREAD_TOL, CMC_SPREAD_TOL * abs(H_mean))

    lhs, rhs = _evaluate(S, identity_id, Q, cache, theta, H_mean)
    lhs2, rhs2 = _evaluate(S, identity_id, Q.refined(), cache, theta, H_mean)
    abs_res = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs), 1.0)
    rel_res = abs_res / scale
    quad_err = (abs(lhs - lhs2) + abs(rhs - rhs2)) / scale
    tol = max(BASE_TOL, 100.0 * quad_err)

    if rel_res < tol:
        status = "PASS"
    elif requires_cmc and not cmc_ok:
        status = "EXPECTED_FAIL"
    elif S.artificial_cut:
        # open chart: divergence-theorem identities cannot close
        status = "EXPECTED_FAIL"
    else:
        status = "FAIL"
    return IdentityReport(
        identity_id=identity_id,
        lhs=lhs,
        rhs=rhs,
        abs_residual=abs_res,
        rel_residual=rel_res,
        requires_cmc=requires_cmc,
        cmc_ok=cmc_ok,
        tolerance=tol,
        status=status,
        quad_order=Q.order,
        H_mean=H_mean,
        H_spread=H_spread,
        theta=theta,
    )


def suite(S: ParamSurface, Q: QuadratureSpec) -> list[IdentityReport]:
    """All five identities in deterministic (alphabetical) order."""
    cache = _FieldCache(S)
    return [verify(S, iid, Q, cache) for iid in IDENTITY_IDS]
