"""One rigorous time step of the differential inclusion

    beta' in A beta + Q q(B beta) + Q F(t) + [-eps, eps],   Q = B^{-1} M^{-1}.

The first ``m`` coordinates (the slow modes) are carried as a Lohner set and
advanced by a Taylor method; the remaining coordinates are strongly damped
and are advanced by a closed-form bound of the scalar linear equation.

Within a step the slow part sees the fast part only through the coupling
``p = A12 beta2 + Q1 [q(B1 beta1, B2 beta2) + q(B2 beta2, B1 beta1) + q(B2 beta2)]``,
which is enclosed over the rough enclosure. Its midpoint drives the Taylor
step and its radius joins ``eps`` as the width of the inclusion correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import interval as iv
from .bounds import _phi1
from .errors import ConfigError, EnclosureFailure, StepFailure
from .fem import DiagonalBasis, Mesh, quad_field, quad_jacobian, quad_pair
from .forcing import Forcing
from .interval import Interval, IntervalMatrix, IntervalVector, as_interval

_SERIES_ORDER = 12


@dataclass(frozen=True)
class LohnerSet:
    """The set ``{center + basis r + rem_basis q : r in coeff_box, q in remainder}``.

    ``basis r`` carries the image of the initial set, ``rem_basis q`` the
    errors picked up along the way. Both bases are QR-refreshed; the error
    part may also fall back to the identity basis (a plain box) when that
    is tighter.
    """

    center: np.ndarray
    basis: np.ndarray
    coeff_box: IntervalVector
    remainder: IntervalVector
    rem_basis: np.ndarray | None = None

    def __post_init__(self):
        if self.rem_basis is None:
            object.__setattr__(self, "rem_basis", np.eye(len(self.center)))

    @classmethod
    def from_box(cls, box: IntervalVector) -> "LohnerSet":
        c = box.mid
        m = len(c)
        return cls(c, np.eye(m), box - c, IntervalVector.point(np.zeros(m)))

    @property
    def dim(self) -> int:
        return len(self.center)

    def remainder_box(self) -> IntervalVector:
        return iv.matvec(self.rem_basis, self.remainder)

    def hull(self) -> IntervalVector:
        return iv.matvec(self.basis, self.coeff_box) + self.remainder_box() + self.center

    def add_box(self, box: IntervalVector) -> "LohnerSet":
        """Add a coordinate box to the error part."""
        if np.array_equal(self.rem_basis, np.eye(self.dim)):
            return replace(self, remainder=self.remainder + box)
        binv = iv.verified_inverse(self.rem_basis)
        return replace(self, remainder=self.remainder + iv.matvec(binv, box))

    def absorb(self) -> "LohnerSet":
        """Move the error part into the coefficient box through the inverse basis."""
        if np.all(self.remainder.lo == 0.0) and np.all(self.remainder.hi == 0.0):
            return self
        binv = iv.verified_inverse(self.basis)
        r = self.coeff_box + iv.matvec(binv, self.remainder_box())
        return LohnerSet(self.center, self.basis, r, IntervalVector.point(np.zeros(self.dim)))


def _qr_basis(C: IntervalMatrix, radii: np.ndarray) -> np.ndarray:
    """Orthonormal basis from QR of ``mid(C)`` with columns taken in order of image width."""
    Cmid = C.mid
    widths = np.linalg.norm(Cmid, axis=0) * radii
    perm = np.argsort(-widths, kind="stable")
    Qf, Rf = np.linalg.qr(Cmid[:, perm])
    Qf = Qf * np.where(np.diag(Rf) < 0, -1.0, 1.0)
    basis = np.empty_like(Qf)
    basis[:, perm] = Qf
    return basis


@dataclass(frozen=True)
class InclusionProblem:
    """Data of the inclusion in diagonal coordinates.

    ``forcing_weights[j]`` is ``Q`` applied to the nodal pairings of the
    j-th forcing term, so the forcing in ``beta`` is
    ``sum_j forcing_weights[j] * s_j(t)``.
    """

    A: IntervalMatrix
    B: np.ndarray
    Q: IntervalMatrix
    forcing: Forcing
    forcing_weights: tuple[IntervalVector, ...]
    eps: IntervalVector
    leading_count: int = 8
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.dim
        if not 0 < self.leading_count <= n:
            raise ConfigError("leading_count must lie in 1..dimension")
        diag_hi = np.diagonal(self.A.hi)[self.leading_count:]
        if np.any(diag_hi >= 0):
            raise ConfigError("a tail coordinate has a diagonal entry that is not negative")

    @classmethod
    def build(cls, basis: DiagonalBasis, mesh: Mesh, forcing: Forcing,
              leading_count: int = 8, eps: IntervalVector | None = None) -> "InclusionProblem":
        n = basis.dim
        weights = tuple(iv.matvec(basis.Binv_Minv, forcing.node_weights(t, n, mesh.h))
                        for t in forcing.terms)
        eps = eps if eps is not None else IntervalVector.point(np.zeros(n))
        return cls(basis.A, basis.B, basis.Binv_Minv, forcing, weights, eps, leading_count)

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    @property
    def diag(self) -> IntervalVector:
        return IntervalVector._raw(np.diagonal(self.A.lo).copy(), np.diagonal(self.A.hi).copy())

    def with_eps(self, eps: IntervalVector) -> "InclusionProblem":
        return replace(self, eps=eps)

    # forcing ---------------------------------------------------------------------
    def forcing_values(self, window) -> IntervalVector:
        out = IntervalVector.point(np.zeros(self.dim))
        for term, w in zip(self.forcing.terms, self.forcing_weights):
            out = out + w * self.forcing.temporal_range(term, as_interval(window))
        return out

    def forcing_taylor(self, t, order: int) -> list[IntervalVector]:
        coeffs = [IntervalVector.point(np.zeros(self.dim)) for _ in range(order + 1)]
        for term, w in zip(self.forcing.terms, self.forcing_weights):
            for n, c in enumerate(self.forcing.temporal_taylor(term, t, order)):
                coeffs[n] = coeffs[n] + w * c
        return coeffs

    # field pieces -------------------------------------------------------------------
    def slow_tensor(self) -> tuple[np.ndarray, np.ndarray]:
        """``G[a, j, l]``, the a-th slow component of ``Q1 q(B1 e_j, B1 e_l)``, as (lo, hi)."""
        if "G" not in self._cache:
            m, B1, _ = self._split()
            cols = [quad_pair(IntervalVector.point(B1[:, j]), IntervalVector.point(B1[:, l]))
                    for j in range(m) for l in range(m)]
            P = IntervalMatrix._raw(np.stack([c.lo for c in cols], axis=1),
                                    np.stack([c.hi for c in cols], axis=1))
            G = iv.matmul(self.Q[:m, :], P)
            self._cache["G"] = (G.lo.reshape(m, m, m), G.hi.reshape(m, m, m))
        return self._cache["G"]

    def _split(self):
        m = self.leading_count
        return m, self.B[:, :m], self.B[:, m:]

    def coupling(self, W: IntervalVector) -> IntervalVector:
        """Enclosure of the slow-mode terms that involve the fast modes."""
        m, B1, B2 = self._split()
        if m == self.dim:
            return IntervalVector.point(np.zeros(m))
        a1 = iv.matvec(B1, W[:m])
        a2 = iv.matvec(B2, W[m:])
        inner = quad_pair(a1, a2) + quad_pair(a2, a1) + quad_field(a2)
        naive = iv.matvec(self.A[:m, m:], W[m:]) + iv.matvec(self.Q[:m, :], inner)
        return naive.intersect(self._centered_coupling(W))

    def _centered_coupling(self, W: IntervalVector) -> IntervalVector:
        # q(B w) - q(B1 w1) expanded exactly about mid(W)
        m, B1, _ = self._split()
        w0 = W.mid
        d = W - w0
        a0 = iv.matvec(self.B, IntervalVector.point(w0))
        a10 = iv.matvec(B1, IntervalVector.point(w0[:m]))
        D = iv.matmul(quad_jacobian(a0), self.B)
        D1 = iv.matmul(quad_jacobian(a10), B1)
        D = IntervalMatrix._raw(D.lo.copy(), D.hi.copy())
        D.lo[:, :m] -= D1.hi
        D.hi[:, :m] -= D1.lo
        D = IntervalMatrix._raw(np.nextafter(D.lo, -np.inf), np.nextafter(D.hi, np.inf))
        inner = (quad_field(a0) - quad_field(a10) + iv.matvec(D, d)
                 + quad_field(iv.matvec(self.B, d)) - quad_field(iv.matvec(B1, d[:m])))
        return iv.matvec(self.A[:m, m:], W[m:]) + iv.matvec(self.Q[:m, :], inner)

    def off_diagonal_field(self, W: IntervalVector, window) -> tuple[IntervalVector, IntervalVector]:
        """``R(W)`` with ``F(W) = diag(A) W + R(W)``, plus the coupling enclosure.

        Slow rows use the split form (own quadratic term plus coupling), fast
        rows the direct evaluation; both enclose the true field.
        """
        m, B1, _ = self._split()
        n = self.dim
        A_off = IntervalMatrix._raw(self.A.lo.copy(), self.A.hi.copy())
        idx = np.arange(n)
        A_off.lo[idx, idx] = 0.0
        A_off.hi[idx, idx] = 0.0
        forcing = self.forcing_values(window)
        eps = IntervalVector._raw(-self.eps.hi, self.eps.hi)
        p = self.coupling(W)
        centered = self._centered_off_diagonal(W, A_off)
        slow = (iv.matvec(A_off[:m, :m], W[:m])
                + iv.matvec(self.Q[:m, :], quad_field(iv.matvec(B1, W[:m]))) + p)
        if m < n:
            fast = (iv.matvec(A_off[m:, :], W)
                    + iv.matvec(self.Q[m:, :], quad_field(iv.matvec(self.B, W))))
            lo = np.concatenate([slow.lo, fast.lo])
            hi = np.concatenate([slow.hi, fast.hi])
            R = IntervalVector._raw(lo, hi)
        else:
            R = slow
        # both forms enclose the same quantity; the centred one wins on wide boxes
        R = R.intersect(centered)
        return R + forcing + eps, p

    def _centered_off_diagonal(self, W: IntervalVector, A_off: IntervalMatrix) -> IntervalVector:
        """Mean-value form about the midpoint: the quadratic is split exactly into
        ``q(a0) + Dq(a0) d + q(d)`` with ``a0 = B mid(W)`` and ``d = B (W - mid(W))``."""
        w0 = W.mid
        a0 = iv.matvec(self.B, IntervalVector.point(w0))
        dW = W - w0
        J = iv.matmul(iv.matmul(self.Q, quad_jacobian(a0)), self.B)
        quad = (iv.matvec(self.Q, quad_field(a0)) + iv.matvec(J, dW)
                + iv.matvec(self.Q, quad_field(iv.matvec(self.B, dW))))
        return iv.matvec(A_off, W) + quad


def _concat(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    return IntervalVector._raw(np.concatenate([a.lo, b.lo]), np.concatenate([a.hi, b.hi]))


def _isolation_ok(diag: IntervalVector, W: IntervalVector, R: IntervalVector,
                  X0: IntervalVector) -> np.ndarray:
    """Faces of ``W`` where the field points strictly inwards."""
    top = IntervalVector._raw(W.hi, W.hi) * diag + R
    bot = IntervalVector._raw(W.lo, W.lo) * diag + R
    inside = (W.lo <= X0.lo) & (X0.hi <= W.hi)
    return inside & (diag.hi < 0) & (top.hi < 0) & (bot.lo > 0)


def rough_enclosure(prob: InclusionProblem, P: LohnerSet, tail_box: IntervalVector,
                    t0, step, max_tries: int = 12) -> IntervalVector:
    """A box containing every solution of the inclusion on ``[t0, t0 + step]``.

    A coordinate is validated either by the first-order test
    ``X0 + [0, step] F(W) within W`` or, for damped coordinates, by the
    field pointing inwards on both faces of ``W``.
    """
    step = as_interval(step)
    if step.lo <= 0:
        raise ValueError("step must be positive")
    X0 = _concat(P.hull(), tail_box)
    window = as_interval(t0) + Interval(0.0, step.hi)
    hstep = Interval(0.0, step.hi)
    diag = prob.diag
    lam_lo = np.where(diag.hi < 0, -diag.hi, 0.0)
    lam_hi = -diag.lo
    damped = lam_lo > 0

    def candidate(W, R, grow):
        # X0 plus the first-order increment over W, the increment scaled up
        inc = hstep * (diag * W + R)
        # faces with an exactly zero increment need no padding
        fo = X0 + IntervalVector._raw(np.where(inc.lo < 0, inc.lo * grow - 1e-14, 0.0),
                                      np.where(inc.hi > 0, inc.hi * grow + 1e-14, 0.0))
        # equilibrium box of the frozen remainder, for the isolation test
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(R.hi > 0, R.hi / lam_lo, R.hi / lam_hi)
            a = np.where(R.lo < 0, R.lo / lam_lo, R.lo / lam_hi)
        pad = (np.abs(a) + np.abs(b)) * 0.05 * grow + 1e-14
        a = np.minimum(a - pad, X0.lo)
        b = np.maximum(b + pad, X0.hi)
        use_eq = damped & np.isfinite(a) & np.isfinite(b) & (b - a < fo.hi - fo.lo)
        return np.where(use_eq, a, fo.lo), np.where(use_eq, b, fo.hi)

    R, _ = prob.off_diagonal_field(X0, window)
    lo, hi = candidate(X0, R, 1.5)
    W = IntervalVector._raw(lo, hi)
    for attempt in range(max_tries):
        R, _ = prob.off_diagonal_field(W, window)
        Z = X0 + hstep * (diag * W + R)
        fo_ok = (W.lo <= Z.lo) & (Z.hi <= W.hi)
        iso_ok = _isolation_ok(diag, W, R, X0)
        ok = fo_ok | iso_ok
        if ok.all():
            return W
        clo, chi = candidate(W, R, 1.0 + 0.5 * 2.0 ** min(attempt, 4))
        lo = np.where(ok, W.lo, np.minimum(W.lo, clo))
        hi = np.where(ok, W.hi, np.maximum(W.hi, chi))
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            break
        W = IntervalVector._raw(lo, hi)
    raise EnclosureFailure("rough enclosure not validated within the inflation budget")


# Taylor coefficients ---------------------------------------------------------------
def _slow_ops(prob: InclusionProblem):
    m, B1, _ = prob._split()
    return m, B1, prob.A[:m, :m], prob.Q[:m, :]


def _bilinear(G, y: IntervalVector, z: IntervalVector) -> IntervalVector:
    """``sum_{j,l} y_j z_l G[:, j, l]``."""
    plo, phi = iv._elem_mul(y.lo[:, None], y.hi[:, None], z.lo[None, :], z.hi[None, :])
    tlo, thi = iv._elem_mul(G[0], G[1], plo[None], phi[None])
    m = tlo.shape[0]
    lo, hi = iv._interval_sum(tlo.reshape(m, -1), thi.reshape(m, -1), 1)
    return IntervalVector._raw(lo, hi)


def _linearized(G, v: IntervalVector) -> IntervalMatrix:
    """Derivative of ``y -> sum_{j,l} y_j y_l G[:, j, l]`` at every ``y`` in ``v``.

    The derivative is linear in ``y``, so each entry is enclosed with the
    dependency on ``v`` handled exactly.
    """
    Tlo, Thi = iv._arr_down(G[0] + G[0].transpose(0, 2, 1)), iv._arr_up(G[1] + G[1].transpose(0, 2, 1))
    # T[a, j, b]: coefficient of v_j in entry (a, b)
    plo, phi = iv._elem_mul(Tlo, Thi, v.lo[None, :, None], v.hi[None, :, None])
    lo, hi = iv._interval_sum(plo, phi, 1)
    return IntervalMatrix._raw(lo, hi)


def taylor_coefficients(prob: InclusionProblem, y0: IntervalVector, forcing: list[IntervalVector],
                        p_mid: np.ndarray, order: int) -> list[IntervalVector]:
    """Coefficients ``y_[0..order]`` of ``y' = L y + Q1 q(B1 y) + s(t) + p_mid``.

    The field is quadratic, so ``y_[n+1]`` follows from a convolution of the
    lower coefficients.
    """
    m, _, L, _ = _slow_ops(prob)
    G = prob.slow_tensor()
    ys = [y0]
    for n in range(order):
        conv = _bilinear(G, ys[0], ys[n])
        for i in range(1, n + 1):
            conv = conv + _bilinear(G, ys[i], ys[n - i])
        nxt = iv.matvec(L, ys[n]) + conv + forcing[n][:m]
        if n == 0:
            nxt = nxt + p_mid
        ys.append(nxt / float(n + 1))
    return ys


def jacobian_coefficients(prob: InclusionProblem, ys: list[IntervalVector], order: int) -> list[IntervalMatrix]:
    """Coefficients of the derivative of the Taylor polynomial w.r.t. ``y0``."""
    m, _, L, _ = _slow_ops(prob)
    G = prob.slow_tensor()
    lin = [_linearized(G, y) for y in ys[:order]]
    Js = [IntervalMatrix.identity(m)]
    for n in range(order):
        acc = iv.matmul(L, Js[n])
        for i in range(n + 1):
            acc = acc + iv.matmul(lin[i], Js[n - i])
        Js.append(acc / float(n + 1))
    return Js


def _poly(coeffs, h: Interval):
    out = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = c + out * h
    return out


@dataclass(frozen=True)
class StepInfo:
    W: IntervalVector
    coupling: IntervalVector
    remainder: IntervalVector
    correction: np.ndarray


def taylor_lohner_step(prob: InclusionProblem, P: LohnerSet, W: IntervalVector, t0, step,
                       order: int = 4, p: IntervalVector | None = None) -> tuple[LohnerSet, IntervalVector]:
    """Advance the slow coordinates of the zero-selection equation by one step.

    Returns the new set (its ``remainder`` carries the Taylor remainder and
    the propagated old remainder) and the Taylor remainder box.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    m = prob.leading_count
    h = as_interval(step)
    t0 = as_interval(t0)
    window = t0 + Interval(0.0, h.hi)
    p = prob.coupling(W) if p is None else p
    p_mid = p.mid

    # polynomial part at the center
    f_center = prob.forcing_taylor(t0, order)
    yc = taylor_coefficients(prob, IntervalVector.point(P.center), f_center, p_mid, order)
    Tc = _poly(yc, h)
    # Lagrange remainder over the rough enclosure and the whole window
    f_window = prob.forcing_taylor(window, order + 1)
    yw = taylor_coefficients(prob, W[:m], f_window, p_mid, order + 1)
    E = yw[-1] * (h ** (order + 1))
    # derivative of the polynomial over the hull of the set
    X = P.hull()
    yX = taylor_coefficients(prob, X, f_window, p_mid, order)
    DT = _poly(jacobian_coefficients(prob, yX, order), h)

    C = iv.matmul(DT, P.basis)
    basis = _qr_basis(C, P.coeff_box.rad)
    new_r = iv.matvec(iv.matmul(iv.verified_inverse(basis), C), P.coeff_box)
    z = Tc + E
    center = z.mid
    # error part: a plain box, or the same linearization in a QR basis
    C2 = iv.matmul(DT, P.rem_basis)
    box_rem = (z - center) + iv.matvec(C2, P.remainder)
    rem_basis = _qr_basis(C2, P.remainder.rad)
    rinv = iv.verified_inverse(rem_basis)
    rot_rem = iv.matvec(iv.matmul(rinv, C2), P.remainder) + iv.matvec(rinv, z - center)
    if np.sum(iv.matvec(rem_basis, rot_rem).rad) < np.sum(box_rem.rad):
        rem = rot_rem
    else:
        rem, rem_basis = box_rem, np.eye(m)
    if not (new_r.is_finite() and rem.is_finite()):
        raise StepFailure("Taylor step produced non-finite enclosures")
    return LohnerSet(center, basis, new_r, rem, rem_basis), E


# inclusion correction ----------------------------------------------------------------
def correction_matrix(prob: InclusionProblem, W1: IntervalVector) -> np.ndarray:
    """``J`` with ``J_ii >= sup df_i/dy_i`` and ``J_ij >= sup |df_i/dy_j|`` over ``W1``."""
    m, _, L, _ = _slow_ops(prob)
    D = _linearized(prob.slow_tensor(), W1) + L
    J = D.mag.copy()
    idx = np.arange(m)
    J[idx, idx] = D.hi[idx, idx]
    return J


def inclusion_correction(J: np.ndarray, C: np.ndarray, step) -> np.ndarray:
    """Upper bound ``d`` of ``int_0^h e^{J s} C ds`` (componentwise).

    Series to order 12 in interval arithmetic plus an explicit tail bound.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1)
    if np.any(C < 0):
        raise ValueError("C must be nonnegative")
    if not np.any(C):
        return np.zeros_like(C)
    h = as_interval(step)
    Jm = IntervalMatrix.point(J)
    norm = Jm.norm_inf_upper()
    q = (Interval(norm, norm) * h).hi
    if not q < _SERIES_ORDER + 3:
        raise StepFailure("inclusion correction series does not converge for this step")
    v = IntervalVector.point(C) * h          # k = 0 term: h C
    total = v
    for k in range(1, _SERIES_ORDER + 1):
        v = iv.matvec(Jm, v) * h / float(k + 1)
        total = total + v
    # tail: sum_{k>12} ||J||^k h^{k+1}/(k+1)! max C
    N = _SERIES_ORDER + 1
    lead = Interval(norm, norm) ** N * h ** (N + 1) / float(math.factorial(N + 1))
    tail = lead / (1 - Interval(q, q) / (N + 2)) * float(np.max(C))
    d = np.maximum(total.hi + tail.hi, 0.0)
    return np.nextafter(d, np.inf)


# dissipative coordinates -------------------------------------------------------------
def dissipative_step(A_ll, N, x0, step) -> Interval:
    """Enclosure of ``x(h)`` for ``x' = A_ll x + n(t)``, ``n(t) in N``, ``x(0) in x0``."""
    A_ll, N, x0, h = (as_interval(v) for v in (A_ll, N, x0, step))
    if A_ll.hi >= 0:
        raise ConfigError("not a dissipative coordinate: diagonal entry is not negative")
    lam = -A_ll
    decay = iv.exp(-lam * h)
    gain = h * _phi1(lam * h)
    return x0 * decay + N * gain


def dissipative_step_vec(diag: IntervalVector, N: IntervalVector, x0: IntervalVector, step) -> IntervalVector:
    """Vectorized :func:`dissipative_step` over the fast coordinates."""
    h = as_interval(step)
    out = [dissipative_step(a, n, x, h) for a, n, x in zip(diag, N, x0)]
    return IntervalVector.from_intervals(out) if out else IntervalVector.point(np.zeros(0))


# a full step ----------------------------------------------------------------------------
def inclusion_step(prob: InclusionProblem, P: LohnerSet, tail: IntervalVector, t0, step,
                   order: int = 4, W: IntervalVector | None = None):
    """Rough enclosure, Taylor step, correction and dissipative step.

    Returns ``(P_new, tail_new, info)``.
    """
    m = prob.leading_count
    h = as_interval(step)
    window = as_interval(t0) + Interval(0.0, h.hi)
    if W is None:
        W = rough_enclosure(prob, P, tail, t0, h)
    R, p = prob.off_diagonal_field(W, window)
    P_ode, E = taylor_lohner_step(prob, P, W, t0, h, order, p)
    C = np.maximum(p.hi - p.mid, p.mid - p.lo) + prob.eps.hi[:m]
    # round up, but leave an exact zero alone
    C = np.where(C > 0, np.nextafter(np.nextafter(C, np.inf), np.inf), 0.0)
    d = inclusion_correction(correction_matrix(prob, W[:m]), C, h)
    P_new = P_ode.add_box(IntervalVector._raw(-d, d))
    tail_new = dissipative_step_vec(prob.diag[m:], R[m:], tail, h)
    return P_new, tail_new, StepInfo(W, p, E, d)
