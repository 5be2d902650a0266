"""Bounds on the Sobolev norms of ``u`` over one time step.

For a step ``[t_i, t_{i+1}]`` starting from radii ``R1..R5`` this module
computes window suprema ``M1..M5`` and endpoint radii. Each level uses the
window suprema of the lower levels, so the levels are computed in order.

Levels 2..5 work with squared norms ``z = ||d^j u||^2``, bounded by
comparison ODEs of linear form ``z' <= -a z + b`` or of tanh form
``z' <= -C z^2 + D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import interval as iv
from .bounds import ComparisonBound, linear_ode_bound, riccati_tanh_bound
from .errors import CertificationError
from .forcing import Forcing, NormMode, Window
from .interval import PI, Interval, IntervalMatrix, IntervalVector, as_interval
from .radii import FLOAT_OPS, INTERVAL_OPS, ParamGrid, Simplex, admissible

F_ = Fraction


@dataclass(frozen=True)
class StepBounds:
    """Window suprema ``M1..M5`` and endpoint radii ``R1..R5`` of one step."""

    M1: Interval
    M2: Interval
    M3: Interval
    M4: Interval
    M5: Interval
    R1: Interval
    R2: Interval
    R3: Interval
    R4: Interval
    R5: Interval
    window: tuple[float, float] = (0.0, 0.0)
    methods: dict = field(default_factory=dict, compare=False)

    @property
    def M(self) -> tuple[Interval, ...]:
        return (self.M1, self.M2, self.M3, self.M4, self.M5)

    @property
    def R(self) -> tuple[Interval, ...]:
        return (self.R1, self.R2, self.R3, self.R4, self.R5)


@dataclass(frozen=True)
class LocalInputs:
    f: tuple            # window norms of f and its first three derivatives
    M: dict             # window suprema of lower levels


@dataclass(frozen=True)
class LocalMethod:
    name: str
    kind: str           # "linear" or "tanh"
    n_params: int
    coefficients: Callable  # (ops, inputs, params) -> (a, b) or (C, D)

    @property
    def groups(self):
        return (Simplex(tuple(range(self.n_params))),)


def _pi2(o):
    return o.pi * o.pi


def _h1_source(o, x, a, b):
    return x.f[0] ** 2 / a + o.c(F_(7 ** 7, 2 ** 16)) * x.M[1] ** 10 / b ** 7


def _h2_sources(o, x, a, b):
    R1, R2, fx2 = x.M[1], x.M[2], x.f[1] ** 2
    return (o.c(F_(5 ** 4 * 27, 16)) * R2 ** 4 * R1 ** 2 / b ** 3 + fx2 / a,
            3 * o.pw(o.c(5), F_(13, 3)) / o.pw(o.c(2), F_(28, 3))
            * o.pw(R2, F_(14, 3)) / o.pw(b, F_(5, 3)) + fx2 / a)


def _h3_sources(o, x, a, b):
    R1, R2, R3, fxx2 = x.M[1], x.M[2], x.M[3], x.f[2] ** 2
    return (3 * o.pw(o.c(7), F_(8, 3)) * o.pw(o.c(5), F_(5, 3)) / o.pw(o.c(2), F_(25, 3))
            * o.pw(R2, F_(8, 3)) * R3 ** 2 / o.pw(a, F_(5, 3)) + fxx2 / b,
            o.c(F_(7 ** 4 * 27, 16)) * R1 ** 2 * R2 ** 2 * R3 ** 2 / a ** 3 + fxx2 / b)


def _h4_source(o, x, a, b, g):
    R1, R2, R3, R4 = x.M[1], x.M[2], x.M[3], x.M[4]
    return (x.f[3] ** 2 / a + 200 * R2 * R3 * R4 ** 2 / b
            + o.c(F_(27 * 11 ** 4, 16)) * R1 ** 2 * R2 ** 2 * R4 ** 2 / g ** 3)


METHODS: dict[int, tuple[LocalMethod, ...]] = {
    2: (LocalMethod("exp_H1", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]), _h1_source(o, x, *p))),
        LocalMethod("tanh_H1", "tanh", 2, lambda o, x, p: (
            (2 - p[0] - p[1]) / x.M[1] ** 2, _h1_source(o, x, *p)))),
    3: (LocalMethod("exp_H2_a", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]), _h2_sources(o, x, *p)[0])),
        LocalMethod("exp_H2_b", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]), _h2_sources(o, x, *p)[1])),
        LocalMethod("exp_H2_c", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]) - 25 * x.M[1] * x.M[2] / p[1], x.f[1] ** 2 / p[0])),
        LocalMethod("tanh_H2_a", "tanh", 2, lambda o, x, p: (
            (2 - p[0] - p[1]) / x.M[2] ** 2, _h2_sources(o, x, *p)[0])),
        LocalMethod("tanh_H2_b", "tanh", 2, lambda o, x, p: (
            (2 - p[0] - p[1]) / x.M[2] ** 2, _h2_sources(o, x, *p)[1]))),
    4: (LocalMethod("exp_H3_a", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]), _h3_sources(o, x, *p)[0])),
        LocalMethod("exp_H3_b", "linear", 2, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1]), _h3_sources(o, x, *p)[1])),
        LocalMethod("tanh_H3_a", "tanh", 2, lambda o, x, p: (
            (2 - p[0] - p[1]) / x.M[3] ** 2, _h3_sources(o, x, *p)[0])),
        LocalMethod("tanh_H3_b", "tanh", 2, lambda o, x, p: (
            (2 - p[0] - p[1]) / x.M[3] ** 2, _h3_sources(o, x, *p)[1]))),
    5: (LocalMethod("exp_H4", "linear", 3, lambda o, x, p: (
            _pi2(o) * (2 - p[0] - p[1] - p[2]), _h4_source(o, x, *p))),
        LocalMethod("tanh_H4", "tanh", 3, lambda o, x, p: (
            (2 - p[0] - p[1] - p[2]) / x.M[4] ** 2, _h4_source(o, x, *p)))),
}


# float twins of the comparison bounds ------------------------------------------------
def _linear_float(a, b, z0, t):
    at = a * t
    with np.errstate(all="ignore"):
        phi = np.where(np.abs(at) < 1e-12, 1.0, -np.expm1(-at) / np.where(at == 0, 1.0, at))
        end = z0 * np.exp(-at) + b * t * phi
    return end


def _tanh_float(C, D, z0, t):
    with np.errstate(all="ignore"):
        s = np.sqrt(C * D) * t
        tanhc = np.where(s < 1e-12, 1.0, np.tanh(s) / np.where(s == 0, 1.0, s))
        T = t * tanhc
        end = (D * T + z0) / (C * T * z0 + 1)
    return end


def _evaluate(method: LocalMethod, x: LocalInputs, params, z0: Interval, t: Interval) -> ComparisonBound:
    p = [Interval(v, v) for v in params]
    u, v = method.coefficients(INTERVAL_OPS, x, p)
    if method.kind == "linear":
        return linear_ode_bound(u, v, z0, t)
    return riccati_tanh_bound(u, v, z0, t)


def closed_form_h1_alpha(R1: float, f_norm: float) -> float | None:
    """Root of ``a + (R1^5/||f||)^{1/4} a^{1/4} - 1 = 0`` in (0, 1)."""
    if f_norm <= 0 or R1 <= 0:
        return None
    c = (R1 ** 5 / f_norm) ** 0.25
    g = lambda a: a + c * a ** 0.25 - 1
    return brentq(g, 0.0, 1.0, xtol=1e-15)


def _candidates(method: LocalMethod, x_float: LocalInputs, grid: ParamGrid) -> np.ndarray:
    pts = grid.points(method.groups[0])
    if method.name == "exp_H1":
        a = closed_form_h1_alpha(x_float.M[1], x_float.f[0])
        if a is not None:
            extra = np.array([[a, 7 / 4 - 7 * a / 4]])
            if admissible(method.groups, extra[0]):
                pts = np.vstack([pts, extra])
    return pts


def _level(level: int, x_float: LocalInputs, x_int: LocalInputs, z0: Interval, t: Interval,
           grid: ParamGrid, cache: dict | None) -> tuple[Interval, Interval, dict]:
    """Minimum over methods and parameters of (window sup, endpoint) for ``z``."""
    best_end, best_sup = math.inf, math.inf
    end_iv = sup_iv = None
    chosen = {}
    tf = t.hi
    for m in METHODS[level]:
        key = (level, m.name)
        if cache is not None and key in cache:
            picks = cache[key]
        else:
            pts = _candidates(m, x_float, grid)
            cols = [pts[:, i] for i in range(m.n_params)]
            with np.errstate(all="ignore"):
                u, v = m.coefficients(FLOAT_OPS, x_float, cols)
            u = np.broadcast_to(np.asarray(u, float), pts.shape[:1])
            v = np.broadcast_to(np.asarray(v, float), pts.shape[:1])
            if m.kind == "linear":
                end = _linear_float(u, v, z0.hi, tf)
            else:
                end = _tanh_float(u, v, z0.hi, tf)
            ok = np.isfinite(end) & np.isfinite(u) & np.isfinite(v) & (v >= 0)
            if m.kind == "tanh":
                ok &= u > 0
            if not ok.any():
                continue
            end = np.where(ok, end, np.inf)
            sup = np.where(ok, np.maximum(end, z0.hi), np.inf)
            picks = {tuple(pts[int(np.argmin(end))]), tuple(pts[int(np.argmin(sup))])}
            if cache is not None:
                cache[key] = picks
        for params in picks:
            try:
                cb = _evaluate(m, x_int, params, z0, t)
            except (CertificationError, ValueError):
                continue
            if not (cb.end.is_finite() and cb.sup.is_finite()):
                continue
            if cb.end.hi < best_end:
                best_end, end_iv = cb.end.hi, cb.end
                chosen["end"] = (m.name, params)
            if cb.sup.hi < best_sup:
                best_sup, sup_iv = cb.sup.hi, cb.sup
                chosen["sup"] = (m.name, params)
    if end_iv is None:
        raise CertificationError(f"no local method produced a bound at level {level}")
    return sup_iv, end_iv, chosen


def _up(x) -> Interval:
    x = as_interval(x)
    return Interval(x.hi, x.hi)


def local_L2(f: Forcing, R1_in, step, window: Window = None,
             mode: NormMode | str = NormMode.TRIANGLE) -> tuple[Interval, Interval]:
    """``d/dt ||u|| <= -pi^2 ||u|| + ||f||`` over the window."""
    fn = f.norm_bound(0, window, mode)
    cb = linear_ode_bound(PI * PI, _up(fn), _up(R1_in), as_interval(step))
    return cb.sup, cb.end


def _sqrt_pair(sup: Interval, end: Interval) -> tuple[Interval, Interval]:
    return iv.sqrt(sup), iv.sqrt(end)


def _inputs(f, window, mode, M: dict):
    norms = tuple(f.norm_bound(j, window, mode) for j in range(4))
    x_int = LocalInputs(tuple(_up(n) for n in norms), {k: _up(v) for k, v in M.items()})
    x_flt = LocalInputs(tuple(n.hi for n in norms), {k: as_interval(v).hi for k, v in M.items()})
    return x_flt, x_int


def _local(level, f, M, R_in, step, window, grid, mode, cache):
    x_flt, x_int = _inputs(f, window, mode, M)
    z0 = _up(R_in) ** 2
    sup, end, chosen = _level(level, x_flt, x_int, z0, as_interval(step), grid or ParamGrid(), cache)
    return (*_sqrt_pair(sup, end), chosen)


def local_H1(f, R1, R2_in, step, grid=None, window: Window = None,
             mode=NormMode.TRIANGLE, cache=None) -> tuple[Interval, Interval]:
    """Window and endpoint bounds on ``||u_x||`` given ``||u|| <= R1`` on the window."""
    return _local(2, f, {1: R1}, R2_in, step, window, grid, mode, cache)[:2]


def local_H2(f, R1, R2, R3_in, step, grid=None, window: Window = None,
             mode=NormMode.TRIANGLE, cache=None) -> tuple[Interval, Interval]:
    return _local(3, f, {1: R1, 2: R2}, R3_in, step, window, grid, mode, cache)[:2]


def local_H3(f, R1, R2, R3, R4_in, step, grid=None, window: Window = None,
             mode=NormMode.TRIANGLE, cache=None) -> tuple[Interval, Interval]:
    return _local(4, f, {1: R1, 2: R2, 3: R3}, R4_in, step, window, grid, mode, cache)[:2]


def local_H4(f, R1, R2, R3, R4, R5_in, step, grid=None, window: Window = None,
             mode=NormMode.TRIANGLE, cache=None) -> tuple[Interval, Interval]:
    return _local(5, f, {1: R1, 2: R2, 3: R3, 4: R4}, R5_in, step, window, grid, mode, cache)[:2]


def step_bounds(f: Forcing, R_in: Sequence, window: tuple[float, float] | Interval, step,
                grid: ParamGrid | None = None, mode: NormMode | str = NormMode.TRIANGLE,
                cache: dict | None = None) -> StepBounds:
    """All five levels for one step; ``window`` is ``[t_i, t_{i+1}]``."""
    w = as_interval(window) if not isinstance(window, tuple) else Interval(*window)
    step = as_interval(step)
    M1, R1 = local_L2(f, R_in[0], step, w, mode)
    M, R, methods = {1: M1}, {1: R1}, {}
    for level in range(2, 6):
        sup, end, chosen = _local(level, f, dict(M), R_in[level - 1], step, w, grid, mode, cache)
        M[level], R[level] = sup, end
        methods[level] = chosen
    return StepBounds(*(M[j] for j in range(1, 6)), *(R[j] for j in range(1, 6)),
                      window=(w.lo, w.hi), methods=methods)


# refinement ------------------------------------------------------------------------
def _quadratic_sup(alpha: IntervalVector, G: IntervalMatrix) -> Interval:
    """Upper bound of ``sqrt(alpha G alpha^T)`` over a box."""
    q = iv.matvec(G, alpha).dot(alpha)
    return iv.sqrt(Interval(0.0, max(q.hi, 0.0)))


def _refined(old: Interval, N3: Interval, h: Interval, v_norm: Interval, power: int) -> Interval:
    corr = (h ** power / PI ** power) * _up(N3) + v_norm
    return old if corr.hi >= old.hi else Interval(min(old.lo, corr.lo), corr.hi)


def refine(bounds: StepBounds, end_box: IntervalVector | None, M: IntervalMatrix, K: IntervalMatrix,
           h, window_box: IntervalVector | None = None) -> StepBounds:
    """Tighten ``R1, R2`` (and ``M1, M2`` with ``window_box``) from a coefficient box.

    ``||u|| <= ||P u|| + h^2 ||u_xx|| / pi^2`` and
    ``||u_x|| <= ||(P u)_x|| + h ||u_xx|| / pi``; the finite element part is
    bounded by the quadratic forms of the mass and stiffness matrices.
    """
    h = as_interval(h)
    out = bounds
    if end_box is not None:
        out = replace(out,
                      R1=_refined(out.R1, out.R3, h, _quadratic_sup(end_box, M), 2),
                      R2=_refined(out.R2, out.R3, h, _quadratic_sup(end_box, K), 1))
    if window_box is not None:
        out = replace(out,
                      M1=_refined(out.M1, out.M3, h, _quadratic_sup(window_box, M), 2),
                      M2=_refined(out.M2, out.M3, h, _quadratic_sup(window_box, K), 1))
    # the window supremum also bounds the endpoint
    clamp = lambda r, m: m if m.hi < r.hi else r
    return replace(out, R1=clamp(out.R1, out.M1), R2=clamp(out.R2, out.M2))
