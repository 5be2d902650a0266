"""Piecewise-linear finite elements on a uniform mesh of (0, 1).

The Galerkin system for ``u = sum_m alpha_m v^m`` reads

    M alpha' = -K alpha + (h/6) N(alpha) + F(t) + r(t),

with ``F_m = (f, v^m)`` and ``r`` the residual caused by the unresolved
part ``Q_k u``. In the coordinates ``beta = B^{-1} alpha`` this becomes

    beta' = A beta + B^{-1} M^{-1} [(h/6) N(B beta) + F(t)] + g(t),

where each ``g_l`` is bounded by a residual width ``eps_l``.

The dual functions used for the widths follow the scaled convention of
the displayed nodal equations (mass matrix ``(6/h) M``), so
``w^l = sum_m c_lm v^m`` with ``c = (h/6) B^{-1} M^{-1}``. Their L2 and H1
seminorms are still computed with the true Gram matrices ``M`` and ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh

from . import interval as iv
from .forcing import Forcing, NormMode, Window
from .interval import PI, Interval, IntervalMatrix, IntervalVector, as_interval

_SIXTH = Interval.from_fraction(Fraction(1, 6))


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh with ``k`` subintervals and ``k - 1`` interior nodes."""

    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise ValueError("mesh needs at least two subintervals")

    @property
    def h(self) -> Interval:
        return Interval.from_fraction(Fraction(1, self.k))

    @property
    def dim(self) -> int:
        return self.k - 1

    def nodes(self) -> np.ndarray:
        return np.arange(1, self.k) / self.k


def assemble(mesh: Mesh) -> tuple[IntervalMatrix, IntervalMatrix]:
    """Mass matrix ``M`` and stiffness matrix ``K`` as tight interval matrices."""
    n, k = mesh.dim, mesh.k
    diag_m = Interval.from_fraction(Fraction(2, 3 * k))
    off_m = Interval.from_fraction(Fraction(1, 6 * k))
    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    klo = np.zeros((n, n))
    idx = np.arange(n)
    lo[idx, idx], hi[idx, idx] = diag_m.lo, diag_m.hi
    lo[idx[:-1], idx[1:]], hi[idx[:-1], idx[1:]] = off_m.lo, off_m.hi
    lo[idx[1:], idx[:-1]], hi[idx[1:], idx[:-1]] = off_m.lo, off_m.hi
    klo[idx, idx] = 2.0 * k
    klo[idx[:-1], idx[1:]] = -float(k)
    klo[idx[1:], idx[:-1]] = -float(k)
    return IntervalMatrix(lo, hi), IntervalMatrix(klo, klo.copy())


def _shift_down(lo, hi):
    """``a_{m-1}`` with the boundary value ``a_0 = 0``."""
    z = np.zeros(lo.shape[:-1] + (1,))
    return (np.concatenate([z, lo[..., :-1]], axis=-1),
            np.concatenate([z, hi[..., :-1]], axis=-1))


def _shift_up(lo, hi):
    """``a_{m+1}`` with the boundary value ``a_k = 0``."""
    z = np.zeros(lo.shape[:-1] + (1,))
    return (np.concatenate([lo[..., 1:], z], axis=-1),
            np.concatenate([hi[..., 1:], z], axis=-1))


def quad_pair(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    """The bilinear form ``q(a, b)`` with ``q(a, a) = (h/6) N(a)``.

    ``q(a, b)_m = (a_m b_{m-1} - a_m b_{m+1} + a_{m-1} b_{m-1} - a_{m+1} b_{m+1}) / 6``.
    Summing ``q(a_i, a_j)`` over ordered pairs gives the Taylor convolution.
    """
    bd = IntervalVector._raw(*_shift_down(b.lo, b.hi))
    bu = IntervalVector._raw(*_shift_up(b.lo, b.hi))
    ad = IntervalVector._raw(*_shift_down(a.lo, a.hi))
    au = IntervalVector._raw(*_shift_up(a.lo, a.hi))
    s = a * bd - a * bu + ad * bd - au * bu
    return s * _SIXTH


def quad_field(alpha: IntervalVector) -> IntervalVector:
    """``(h/6) N(alpha)``; the mesh width cancels out of this product."""
    ad = IntervalVector._raw(*_shift_down(alpha.lo, alpha.hi))
    au = IntervalVector._raw(*_shift_up(alpha.lo, alpha.hi))
    s = alpha * (ad - au) + ad.sqr() - au.sqr()
    return s * _SIXTH


def nonlinear_term(alpha, mesh: Mesh) -> IntervalVector:
    """``N_m = (a_m a_{m-1} - a_m a_{m+1} + a_{m-1}^2 - a_{m+1}^2)/h`` with zero boundary values."""
    if not isinstance(alpha, IntervalVector):
        alpha = IntervalVector.point(alpha)
    if len(alpha) != mesh.dim:
        raise ValueError("alpha has the wrong length")
    ad = IntervalVector._raw(*_shift_down(alpha.lo, alpha.hi))
    au = IntervalVector._raw(*_shift_up(alpha.lo, alpha.hi))
    s = alpha * (ad - au) + ad.sqr() - au.sqr()
    return s * float(mesh.k)


def quad_jacobian(alpha: IntervalVector) -> IntervalMatrix:
    """Enclosure of the Jacobian of ``quad_field`` over a box (tridiagonal)."""
    n = len(alpha)
    ad = IntervalVector._raw(*_shift_down(alpha.lo, alpha.hi))
    au = IntervalVector._raw(*_shift_up(alpha.lo, alpha.hi))
    sub = (alpha + ad * 2.0) * _SIXTH      # d/d a_{m-1}
    dia = (ad - au) * _SIXTH               # d/d a_m
    sup = (-alpha - au * 2.0) * _SIXTH     # d/d a_{m+1}
    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    i = np.arange(n)
    lo[i, i], hi[i, i] = dia.lo, dia.hi
    lo[i[1:], i[1:] - 1], hi[i[1:], i[1:] - 1] = sub.lo[1:], sub.hi[1:]
    lo[i[:-1], i[:-1] + 1], hi[i[:-1], i[:-1] + 1] = sup.lo[:-1], sup.hi[:-1]
    return IntervalMatrix._raw(lo, hi)


@dataclass(frozen=True)
class DiagonalBasis:
    """Change of basis ``alpha = B beta`` that nearly diagonalizes the linear part."""

    B: np.ndarray
    Binv: IntervalMatrix
    Binv_Minv: IntervalMatrix
    A: IntervalMatrix
    eigenvalues: np.ndarray
    w_norms_L2: IntervalVector
    w_norms_H1: IntervalVector

    @property
    def dim(self) -> int:
        return self.B.shape[0]


def diagonalize(M: IntervalMatrix, K: IntervalMatrix, mesh: Mesh | None = None) -> DiagonalBasis:
    """Float eigenbasis of ``M^{-1}(-K)`` with rigorous enclosures of ``A`` and ``B^{-1} M^{-1}``.

    Columns of ``B`` have unit euclidean norm and are ordered by increasing
    ``|lambda|``. The eigen-solver is not trusted: only the interval
    products certify anything.
    """
    n = M.shape[0]
    k = mesh.k if mesh is not None else n + 1
    vals, vecs = eigh(-K.mid, M.mid)
    order = np.argsort(np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    # fix signs so each column has a positive first nonzero entry
    signs = np.sign(vecs[np.argmax(np.abs(vecs) > 1e-12, axis=0), np.arange(n)])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    B = vecs
    Binv = iv.verified_inverse(B)
    Minv = iv.verified_inverse(M)
    Binv_Minv = iv.matmul(Binv, Minv)
    A = iv.matmul(Binv_Minv, iv.matmul(-K, B))
    coeff = Binv_Minv * Interval.from_fraction(Fraction(1, 6 * k))
    w2 = _row_quadratic_forms(coeff, M)
    wx2 = _row_quadratic_forms(coeff, K)
    return DiagonalBasis(
        B=B, Binv=Binv, Binv_Minv=Binv_Minv, A=A, eigenvalues=vals,
        w_norms_L2=_sqrt_nonneg(w2), w_norms_H1=_sqrt_nonneg(wx2),
    )


def _row_quadratic_forms(c: IntervalMatrix, G: IntervalMatrix) -> IntervalVector:
    """``c_l G c_l^T`` for every row ``c_l`` of ``c``."""
    cg = iv.matmul(c, G)
    prod = cg * c
    lo, hi = iv._interval_sum(prod.lo, prod.hi, 1)
    return IntervalVector._raw(np.maximum(lo, 0.0), np.maximum(hi, 0.0))


def _sqrt_nonneg(v: IntervalVector) -> IntervalVector:
    lo = np.maximum(np.nextafter(np.sqrt(v.lo), -np.inf), 0.0)
    hi = np.nextafter(np.sqrt(v.hi), np.inf)
    return IntervalVector._raw(lo, hi)


def discrete_eigenvalue(l: int, mesh: Mesh) -> float:
    """Float value of the l-th eigenvalue of ``M^{-1}(-K)``."""
    h = 1.0 / mesh.k
    c = np.cos(l * np.pi * h)
    return -(6.0 / h ** 2) * (1 - c) / (2 + c)


def galerkin_error_bounds(R3, h) -> tuple[Interval, Interval]:
    """H1_0 and L2 bounds for ``Q_k u`` when ``||u_xx|| <= R3``."""
    R3, h = as_interval(R3), as_interval(h)
    h1 = h / PI * R3
    return h1, h1 * h / PI


@dataclass(frozen=True)
class ResidualWidths:
    """Per-coordinate widths ``eps_l``, split into remainder and forcing parts."""

    eps: IntervalVector
    remainder_part: IntervalVector
    forcing_part: IntervalVector

    @property
    def upper(self) -> np.ndarray:
        return self.eps.hi

    def max_upper(self) -> float:
        return float(np.max(self.eps.hi))


def residual_widths(bounds, basis: DiagonalBasis, f: Forcing, t_window: Window,
                    mesh: Mesh, mode: NormMode | str = NormMode.TRIANGLE) -> ResidualWidths:
    """Certified widths of the differential inclusion for one step.

    ``bounds`` supplies window suprema ``M1..M5`` of the Sobolev norms.
    """
    h = mesh.h
    M1, M2, M3, M4, M5 = (as_interval(getattr(bounds, f"M{j}")) for j in range(1, 6))
    C = M5 + 3 * iv.sqrt(Interval(2.0, 2.0)) * iv.sqrt(M2) * iv.pow_rational(M3, Fraction(3, 2)) \
        + iv.sqrt(M1) * iv.sqrt(M2) * M4
    pref = 6 * h / (PI * PI)
    t2 = M3 * M3 * iv.sqrt(h) / iv.sqrt(PI)
    wl2, wh1 = basis.w_norms_L2, basis.w_norms_H1
    remainder = (wh1 * (M2 * M3 / 2) + wl2 * (t2 + C)) * pref
    forcing = f.qk_pairing_bound(t_window, wl2, h, mode) * (6 / h)
    eps = remainder + forcing
    clip = lambda v: IntervalVector._raw(np.maximum(v.lo, 0.0), v.hi)
    return ResidualWidths(clip(eps), clip(remainder), clip(forcing))
