"""Quadrature plumbing: Gauss-Legendre rules, sphere factors, grid rules.

Profile (axisymmetric) charts integrate with a 1-D Gauss-Legendre rule
along the profile parameter times the exact area of the unit
(n-1)-sphere; box charts use tensor-product Gauss-Legendre.  Uniform
nodal grids (used by the discrete operators) integrate with the
4th-order end-corrected trapezoid (Gregory) rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuadratureSpec",
    "gauss_legendre",
    "unit_sphere_area",
    "gregory_weights",
    "fd_weights",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre order per chart axis."""

    order: int = 128

    def __post_init__(self):
        if self.order < 8:
            raise ValueError("quadrature needs at least 8 nodes per axis")

    def rule(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        return gauss_legendre(self.order, lo, hi)

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(order=2 * self.order)


def gauss_legendre(order: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def unit_sphere_area(k: int) -> float:
    """Surface measure of the unit k-sphere S^k in R^{k+1}."""
    if k < 0:
        raise ValueError("sphere dimension must be nonnegative")
    if k == 0:
        return 2.0
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def gregory_weights(num_nodes: int, h: float) -> np.ndarray:
    """Weights of the 4th-order Gregory (end-corrected trapezoid) rule.

    Needs at least 7 nodes; interior weights are h, the three weights at
    each end are h * (3/8, 7/6, 23/24).
    """
    if num_nodes < 7:
        raise ValueError("Gregory rule needs at least 7 nodes")
    w = np.full(num_nodes, h)
    ends = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]) * h
    w[:3] = ends
    w[-3:] = ends[::-1]
    return w


def fd_weights(offsets: np.ndarray, deriv: int) -> np.ndarray:
    """Finite-difference weights for the given derivative on integer offsets.

    Solves the Vandermonde moment conditions; with m offsets the stencil
    is exact on polynomials of degree < m.
    """
    offs = np.asarray(offsets, dtype=float)
    m = offs.shape[0]
    if deriv >= m:
        raise ValueError("stencil too short for requested derivative")
    A = np.vander(offs, m, increasing=True).T
    b = np.zeros(m)
    b[deriv] = math.factorial(deriv)
    return np.linalg.solve(A, b)
