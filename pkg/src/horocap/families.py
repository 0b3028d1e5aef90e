"""Constructors for the shipped surface families.

Umbilical caps are realized as Euclidean spheres and planes of the
conformal model (totally umbilical there), cut by the support horosphere
{x_d = 1}:

* sphere of center height a and Euclidean radius r -- principal
  curvatures a/r everywhere, contact angle arccos((1-a)/r); the a = 0
  members are totally geodesic, |a| < r equidistant, a = r
  horosphere-type, a > r geodesic spheres;
* tilted Euclidean plane at angle beta to the support -- equidistant
  with curvature cos(beta), contact angle beta; beta = pi/2 gives the
  totally geodesic vertical plane.

Plane pieces are unbounded; they ship as box charts with artificial
lateral cuts and only the face on the support is treated as boundary.

``perturb`` produces the constant-angle non-CMC negative controls: a
compactly supported radial bump on a sphere cap, identically zero in a
boundary collar so every boundary quantity is bit-identical to the base.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .quadrature import QuadratureSpec
from .surfaces import (GridSurface, ImmersionError, ParamSurface,
                       ProfileSurface, check_immersion)

__all__ = [
    "CapKind",
    "CapSpec",
    "PerturbationSpec",
    "ConstructionError",
    "AmplitudeError",
    "InfeasibleError",
    "FREE",
    "build",
    "perturb",
    "solve_for_angle",
    "FAMILY_REGISTRY",
]

FREE = None  # sentinel for "no mean-curvature target" in solve_for_angle


class ConstructionError(ValueError):
    """Family parameters do not cut the support horosphere transversally."""


class AmplitudeError(ValueError):
    """Perturbation amplitude breaks the immersion; max feasible value attached."""

    def __init__(self, requested: float, max_feasible: float):
        super().__init__(
            f"amplitude {requested} breaks the immersion; "
            f"maximal feasible amplitude ~ {max_feasible:.6g}"
        )
        self.requested = requested
        self.max_feasible = max_feasible


class InfeasibleError(ValueError):
    """No family member matches the requested (theta, H) pair."""


class CapKind(enum.Enum):
    SPHERE_CAP = "sphere_cap"
    EQUIDISTANT_SPHERE_CAP = "equidistant_sphere_cap"
    VERTICAL_PLANE_DISK = "vertical_plane_disk"
    TILTED_PLANE_CAP = "tilted_plane_cap"


@dataclass(frozen=True)
class CapSpec:
    """Euclidean construction parameters of one family member.

    The contact angle is always derived from the built surface, never
    prescribed here.
    """

    kind: CapKind
    n: int = 2
    a: float = 1.0      # sphere center height
    r: float = 0.5      # sphere Euclidean radius
    beta: float = math.pi / 2  # plane tilt angle
    extent: float = 1.0        # plane chart size

    def validate(self) -> None:
        if self.n < 2:
            raise ConstructionError("dimension n must be >= 2")
        if self.kind in (CapKind.SPHERE_CAP, CapKind.EQUIDISTANT_SPHERE_CAP):
            if self.r <= 0:
                raise ConstructionError("sphere radius must be positive")
            if abs(1.0 - self.a) >= self.r:
                raise ConstructionError(
                    "sphere does not cut the horosphere transversally "
                    f"(need |1 - a| < r, got a={self.a}, r={self.r})"
                )
            if self.kind is CapKind.EQUIDISTANT_SPHERE_CAP and abs(self.a) >= self.r:
                raise ConstructionError(
                    "equidistant sphere caps need |a| < r "
                    f"(got a={self.a}, r={self.r})"
                )
        else:
            if self.extent <= 0:
                raise ConstructionError("plane chart extent must be positive")
            if self.kind is CapKind.TILTED_PLANE_CAP and not 0.0 < self.beta < math.pi:
                raise ConstructionError("tilt angle must lie in (0, pi)")

    # -- configuration-file round trip ---------------------------------
    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "a": self.a,
            "r": self.r,
            "beta": self.beta,
            "extent": self.extent,
        }

    @staticmethod
    def from_dict(d: dict) -> "CapSpec":
        kind = CapKind(d["kind"])
        kwargs = {k: d[k] for k in ("n", "a", "r", "beta", "extent") if k in d}
        return CapSpec(kind=kind, **kwargs)


@dataclass(frozen=True)
class PerturbationSpec:
    """Compactly supported normal bump; zero outside the interior window.

    The support is [lo, hi] in fractions of the chart parameter range and
    must keep >= 10% clearance to both chart ends.
    """

    amplitude: float
    support: tuple[float, float] = (0.1, 0.9)

    def validate(self) -> None:
        lo, hi = self.support
        if not (0.1 - 1e-12 <= lo < hi <= 0.9 + 1e-12):
            raise ValueError(
                "bump support must keep 10% clearance to the chart ends"
            )

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "support": list(self.support)}

    @staticmethod
    def from_dict(d: dict) -> "PerturbationSpec":
        return PerturbationSpec(
            amplitude=float(d["amplitude"]),
            support=tuple(d.get("support", (0.1, 0.9))),
        )


FAMILY_REGISTRY = {k.value: k for k in CapKind}


# ----------------------------------------------------------------------
# smooth bump profile
# ----------------------------------------------------------------------

def bump_jet(t: float, lo: float, hi: float) -> tuple[float, float, float]:
    """(b, b', b'') of the C-infinity bump exp(4 - 1/(u(1-u))), u=(t-lo)/(hi-lo).

    Hard zero (with all derivatives) outside (lo, hi); peak value 1.
    """
    width = hi - lo
    u = (t - lo) / width
    margin = 1e-9
    if u <= margin or u >= 1.0 - margin:
        return 0.0, 0.0, 0.0
    p = u * (1.0 - u)
    dp = 1.0 - 2.0 * u
    g = 1.0 / p
    dg = -dp / (p * p)
    d2g = (2.0 * dp * dp + 2.0 * p) / (p ** 3)
    b = math.exp(4.0 - g)
    db = -dg * b
    d2b = (dg * dg - d2g) * b
    s = 1.0 / width
    return b, db * s, d2b * s * s


# ----------------------------------------------------------------------
# builders
# ----------------------------------------------------------------------

class SphereCapSurface(ProfileSurface):
    """Spherical cap of center height a and Euclidean radius r."""

    def __init__(self, n: int, a: float, r: float):
        self.a = float(a)
        self.r = float(r)
        t1 = math.acos((1.0 - self.a) / self.r)

        def jet(t: float):
            st, ct = math.sin(t), math.cos(t)
            r_ = self.r
            return (r_ * st, self.a + r_ * ct, r_ * ct, -r_ * st,
                    -r_ * st, -r_ * ct)

        super().__init__(n, t1, jet)


class BumpedCapSurface(ProfileSurface):
    """Sphere cap with the radius modulated by a compact bump, r + eps*b(t)."""

    def __init__(self, base: SphereCapSurface, pspec: PerturbationSpec):
        self.base = base
        self.pspec = pspec
        a, r, t1 = base.a, base.r, base.t1
        lo, hi = pspec.support[0] * t1, pspec.support[1] * t1
        eps = pspec.amplitude

        def jet(t: float):
            b, db, d2b = bump_jet(t, lo, hi)
            R = r + eps * b
            dR = eps * db
            d2R = eps * d2b
            st, ct = math.sin(t), math.cos(t)
            rho = R * st
            z = a + R * ct
            drho = dR * st + R * ct
            dz = dR * ct - R * st
            d2rho = d2R * st + 2.0 * dR * ct - R * st
            d2z = d2R * ct - 2.0 * dR * st - R * ct
            return rho, z, drho, dz, d2rho, d2z

        super().__init__(base.n, t1, jet)


class PlaneCapSurface(GridSurface):
    """Euclidean plane piece tilted by beta, cut off by an artificial box."""

    def __init__(self, n: int, beta: float, extent: float):
        self.beta = float(beta)
        self.extent = float(extent)
        d = n + 1
        direction = np.zeros(d)
        direction[0] = -math.cos(beta)
        direction[-1] = math.sin(beta)
        origin = np.zeros(d)
        origin[-1] = 1.0
        J = np.zeros((d, n))
        J[:, 0] = direction
        for k in range(1, n):
            J[k, k] = 1.0
        Hess = np.zeros((d, n, n))

        def embed_jet(u: np.ndarray):
            return origin + J @ u, J, Hess

        box = [(0.0, extent)] + [(-extent / 2.0, extent / 2.0)] * (n - 1)
        super().__init__(n, box, embed_jet)


def build(spec: CapSpec) -> ParamSurface:
    """Construct the ParamSurface of a family member (analytic derivatives)."""
    spec.validate()
    if spec.kind in (CapKind.SPHERE_CAP, CapKind.EQUIDISTANT_SPHERE_CAP):
        return SphereCapSurface(spec.n, spec.a, spec.r)
    if spec.kind is CapKind.VERTICAL_PLANE_DISK:
        return PlaneCapSurface(spec.n, math.pi / 2.0, spec.extent)
    return PlaneCapSurface(spec.n, spec.beta, spec.extent)


def perturb(base: ParamSurface, p: PerturbationSpec,
            Q: Optional[QuadratureSpec] = None) -> ParamSurface:
    """Constant-angle, non-CMC control: base with a collar-avoiding bump.

    Verifies that the perturbed map is still an immersion; on failure the
    raised error reports the maximal feasible amplitude (bisection).
    """
    p.validate()
    if p.amplitude == 0.0:
        return base
    if not isinstance(base, SphereCapSurface):
        raise TypeError("perturb currently supports sphere-cap bases")
    Q = Q or QuadratureSpec()

    def feasible(eps: float) -> bool:
        try:
            check_immersion(BumpedCapSurface(base, replace(p, amplitude=eps)), Q)
            return True
        except (ImmersionError, ValueError):
            return False

    if not feasible(p.amplitude):
        lo, hi = 0.0, p.amplitude
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        raise AmplitudeError(p.amplitude, lo)
    return BumpedCapSurface(base, p)


# ----------------------------------------------------------------------
# inverse convenience: angle-targeted construction
# ----------------------------------------------------------------------

def _derived_theta(spec: CapSpec) -> float:
    return build(spec).boundary_frame_at().theta


def solve_for_angle(kind: CapKind, theta_target: float,
                    H_target: Optional[float] = FREE,
                    n: int = 2, r: Optional[float] = None) -> CapSpec:
    """CapSpec whose built surface meets the support at theta_target.

    Bisection on the Euclidean parameters against the derived angle of
    the built surface; H_target (when given) must be consistent with the
    family's feasibility region.
    """
    if not 0.0 < theta_target < math.pi:
        raise InfeasibleError("contact angle must lie in (0, pi)")

    if kind is CapKind.VERTICAL_PLANE_DISK:
        if abs(theta_target - math.pi / 2.0) > 1e-10:
            raise InfeasibleError(
                "vertical plane pieces meet the horosphere orthogonally: "
                "theta must be pi/2"
            )
        if H_target is not FREE and abs(H_target) > 1e-10:
            raise InfeasibleError("vertical plane pieces are minimal: H must be 0")
        return CapSpec(kind=kind, n=n)

    if kind is CapKind.TILTED_PLANE_CAP:
        # with the positive-mean-curvature orientation the derived contact
        # angle of a plane tilted by beta is pi - beta
        beta = math.pi - theta_target
        spec = CapSpec(kind=kind, n=n, beta=beta)
        if H_target is not FREE:
            H_plane = n * math.cos(beta)
            if abs(H_target - H_plane) > 1e-8:
                raise InfeasibleError(
                    f"tilted planes with contact angle {theta_target} "
                    f"have H = {H_plane}"
                )
        return spec

    # spherical families: theta = arccos((1-a)/r) is monotone increasing in a
    if r is None:
        r = 2.0 if kind is CapKind.EQUIDISTANT_SPHERE_CAP else 0.5
    if H_target is not FREE:
        # H = n a / r and cos(theta) = (1 - a)/r pin both parameters
        denom = n * math.cos(theta_target) + H_target
        if abs(denom) < 1e-14:
            raise InfeasibleError("requested (theta, H) pair degenerates the cap")
        a0 = H_target / denom
        r = (1.0 - a0) / math.cos(theta_target) if abs(H_target) < 1e-14 \
            else n * a0 / H_target
        if r <= 0 or abs(1.0 - a0) >= r:
            raise InfeasibleError(
                "requested (theta, H) pair leaves the family's feasibility "
                f"region (a={a0}, r={r})"
            )

    # restrict to the a >= 0 branch: the positive-H orientation flips the
    # normal at a = 0, making the derived angle non-monotone across it;
    # for r > 1 this leaves angles below arccos(1/r) unreachable
    lo = max(1.0 - r * (1.0 - 1e-12), 1e-12)
    hi = 1.0 + r * (1.0 - 1e-12)
    theta_lo = _derived_theta(CapSpec(kind=kind, n=n, a=lo, r=r))
    if theta_target < theta_lo - 1e-12:
        raise InfeasibleError(
            f"{kind.value} members of radius {r} only reach contact angles "
            f">= {theta_lo:.6g} under the positive-mean-curvature orientation"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        spec = CapSpec(kind=kind, n=n, a=mid, r=r)
        try:
            th = _derived_theta(spec)
        except ConstructionError:
            hi = mid
            continue
        if th < theta_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    a = 0.5 * (lo + hi)
    spec = CapSpec(kind=kind, n=n, a=a, r=r)
    try:
        spec.validate()
    except ConstructionError as exc:
        raise InfeasibleError(str(exc)) from exc
    if abs(_derived_theta(spec) - theta_target) > 1e-10:
        raise InfeasibleError(
            f"no {kind.value} member with theta = {theta_target} at r = {r}"
        )
    return spec
