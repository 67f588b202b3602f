"""Compactly supported polynomial kernels of arbitrary order on [-1, 1].

A kernel of order ``s`` integrates to one and has vanishing moments
``int u^l K(u) du = 0`` for ``l = 1..s``.  The construction used here is the
reproducing kernel of polynomials of degree ``<= s`` evaluated at zero,

    K(u) = sum_{m=0}^{s} phi_m(0) phi_m(u),   phi_m = sqrt((2m+1)/2) P_m,

with ``P_m`` the Legendre polynomials.  Orders 0 and 1 give the box kernel,
order 2 and 3 give ``(9 - 15 u^2) / 8``, and so on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

__all__ = [
    "KernelSpec",
    "MomentReport",
    "build_order_kernel",
    "eval_kernel",
    "verify_moments",
    "gauss_legendre",
]

_GL_POINTS = 64


def gauss_legendre(npts: int = _GL_POINTS, lo: float = -1.0, hi: float = 1.0):
    """Nodes and weights of the ``npts``-point Gauss-Legendre rule on [lo, hi]."""
    x, w = npleg.leggauss(npts)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@dataclass(frozen=True)
class KernelSpec:
    """Polynomial kernel on [-1, 1]; ``coeffs`` are in ascending degree."""

    order: int
    coeffs: tuple
    sup_norm: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, u):
        return eval_kernel(self, u)

    def to_dict(self) -> dict:
        return {"order": self.order}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return build_order_kernel(int(d["order"]))


def _sup_abs(coeffs: np.ndarray) -> float:
    # extrema of a polynomial on [-1, 1] sit at endpoints or at real roots of the derivative
    cand = [-1.0, 1.0]
    if len(coeffs) > 2:
        for r in nppoly.polyroots(nppoly.polyder(coeffs)):
            if abs(r.imag) < 1e-12 and -1.0 <= r.real <= 1.0:
                cand.append(r.real)
    return float(np.max(np.abs(nppoly.polyval(np.asarray(cand), coeffs))))


def build_order_kernel(s: int) -> KernelSpec:
    """Kernel of order ``s`` supported on [-1, 1] (Legendre construction)."""
    s = int(s)
    if s < 0:
        raise ValueError(f"kernel order must be non-negative, got {s}")
    eye = np.eye(s + 1)
    leg = np.array([(2 * m + 1) / 2.0 * npleg.legval(0.0, eye[m]) for m in range(s + 1)])
    coeffs = npleg.leg2poly(leg)
    coeffs[np.abs(coeffs) < 1e-15] = 0.0
    coeffs = nppoly.polytrim(coeffs, tol=0.0) if np.any(coeffs) else np.zeros(1)
    return KernelSpec(order=s, coeffs=tuple(float(c) for c in coeffs), sup_norm=_sup_abs(coeffs))


def eval_kernel(k: KernelSpec, u):
    """Value of ``k`` at ``u``; exactly zero for ``|u| > 1``.  Accepts scalars or arrays."""
    u_arr = np.asarray(u, dtype=float)
    inside = np.abs(u_arr) <= 1.0
    # Horner on the whole array, then zero out the complement of the support
    val = np.zeros_like(u_arr)
    for c in reversed(k.coeffs):
        val = val * u_arr + c
    out = np.where(inside, val, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MomentReport:
    integral: float
    moments: tuple
    abs_moment: float
    passed: bool


def verify_moments(k: KernelSpec, tol_unit: float = 1e-10, tol_moment: float = 1e-8) -> MomentReport:
    """Quadrature check of the order-``k.order`` kernel conditions.

    ``abs_moment`` is ``int |u|^{s+1} |K(u)| du``; it is reported but never
    thresholded.
    """
    if tol_unit <= 0 or tol_moment <= 0:
        raise ValueError("tolerances must be positive")
    x, w = gauss_legendre()
    kx = eval_kernel(k, x)
    integral = float(np.dot(w, kx))
    moments = tuple(float(np.dot(w, x**ell * kx)) for ell in range(1, k.order + 1))
    abs_moment = float(np.dot(w, np.abs(x) ** (k.order + 1) * np.abs(kx)))
    passed = abs(integral - 1.0) <= tol_unit and all(abs(m) <= tol_moment for m in moments)
    return MomentReport(integral, moments, abs_moment, passed)
