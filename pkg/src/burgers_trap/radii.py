"""Global trapping radii ``R1..R5`` for the Sobolev norms of ``u``.

Every radius is the minimum over a family of methods. Root methods solve a
fixed-point equation and then take ``min(A/pi, sqrt(A R_prev))``. Wang
methods combine two differential inequalities through
:func:`~burgers_trap.bounds.wang_bound` and need free constants, which are
chosen by a float search and then evaluated once in interval arithmetic.

Each formula is written once against a small arithmetic backend, so the
search and the certified evaluation cannot drift apart.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import interval as iv
from .bounds import RootEquation, WangParams, solve_dominant_root, wang_bound
from .errors import NoBound, RootFailure
from .forcing import Forcing, NormMode
from .interval import PI, Interval, as_interval

F_ = Fraction


# arithmetic backends ----------------------------------------------------------------
class _FloatOps:
    pi = math.pi

    @staticmethod
    def c(x):
        return float(x)

    @staticmethod
    def pw(x, p):
        return np.power(x, float(Fraction(p)))

    @staticmethod
    def sqrt(x):
        return np.sqrt(x)


class _IntervalOps:
    pi = PI

    @staticmethod
    def c(x):
        return Interval.from_fraction(Fraction(x)) if not isinstance(x, Interval) else x

    @staticmethod
    def pw(x, p):
        return iv.pow_rational(as_interval(x), Fraction(p))

    @staticmethod
    def sqrt(x):
        return iv.sqrt(x)


FLOAT_OPS = _FloatOps()
INTERVAL_OPS = _IntervalOps()


# parameter grids -----------------------------------------------------------------
@dataclass(frozen=True)
class Simplex:
    """Parameters ``p[i] > 0`` for ``i`` in ``indices`` with ``sum < total``."""

    indices: tuple[int, ...]
    total: float = 2.0


@dataclass(frozen=True)
class Positive:
    """A single unbounded positive parameter, searched on a log scale."""

    index: int
    lo: float = 1e-4
    hi: float = 1e8


Group = Simplex | Positive


@dataclass(frozen=True)
class ParamGrid:
    """Float search settings for the free constants of the Wang methods.

    ``resolution`` points are used per parameter. Groups are searched
    jointly; methods with several groups alternate between them
    (``sweeps`` times). ``polish`` runs a Nelder-Mead refinement from the
    best grid point.
    """

    resolution: int = 64
    sweeps: int = 4
    polish: bool = True

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.sweeps < 1:
            raise ValueError("sweeps must be positive")

    def points(self, group: Group) -> np.ndarray:
        """Grid points of one group; every row strictly satisfies its constraint."""
        return _grid_points(self.resolution, group)


@functools.lru_cache(maxsize=64)
def _grid_points(n: int, group: Group) -> np.ndarray:
    if isinstance(group, Positive):
        pts = np.geomspace(group.lo, group.hi, n)[:, None]
    else:
        axis = (np.arange(n) + 0.5) * group.total / n
        mesh = np.stack(np.meshgrid(*([axis] * len(group.indices)), indexing="ij"), axis=-1)
        mesh = mesh.reshape(-1, len(group.indices))
        pts = mesh[mesh.sum(axis=1) < group.total]
    pts.setflags(write=False)
    return pts


def admissible(groups: Sequence[Group], p: Sequence[float]) -> bool:
    """Check the constraints exactly (outward-rounded sums)."""
    for g in groups:
        if isinstance(g, Positive):
            if not (g.lo <= p[g.index] and p[g.index] > 0 and math.isfinite(p[g.index])):
                return False
            continue
        vals = [p[i] for i in g.indices]
        if min(vals) <= 0:
            return False
        total = Interval(0.0, 0.0)
        for v in vals:
            total = total + v
        if total.hi >= g.total:
            return False
    return True


# method descriptions -------------------------------------------------------------
@dataclass(frozen=True)
class Inputs:
    """Norms of the forcing and lower radii, in one backend's number type."""

    f: tuple
    R: dict


Abcde = Callable[[object, Inputs, Sequence], tuple]


@dataclass(frozen=True)
class WangMethod:
    name: str
    n_params: int
    groups: tuple[Group, ...]
    abcde: Abcde


@dataclass(frozen=True)
class RootMethod:
    name: str
    equation: Callable[[object, Inputs], tuple]  # -> (d0, ((coeff, exponent), ...))
    previous: int  # index of the radius used in sqrt(A R_prev)


@dataclass(frozen=True)
class MethodResult:
    """Outcome of one method; ``radius`` bounds the norm, ``S`` the cross weight."""

    name: str
    radius: Interval
    S: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    params: tuple[float, ...] = ()
    certified: bool = True


def _wang_float(o, A, B, C, D, E):
    """Vectorized float twin of ``wang_bound``; returns ``inf`` where inadmissible."""
    A, B, C, D, E = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (A, B, C, D, E)))
    with np.errstate(all="ignore"):
        X = C * D + B * E
        lam = np.sqrt(np.where((X > 0) & (A > 0), X / np.where(A > 0, A, 1.0), 0.0))
        case1 = np.where(E < 0, -D / E, np.inf)
        case2 = (E * A + B + 2 * np.sqrt(np.maximum(A * X, 0.0))) / C
        use2 = (X > 0) & (A > 0) & (lam > -E)
        F = np.where(use2, case2, case1)
        F = np.where(C > 0, F, np.inf)
    return np.where(np.isfinite(F) & (F >= 0), F, np.inf)


def _search(method: WangMethod, inputs: Inputs, grid: ParamGrid) -> tuple[float, ...] | None:
    """Float minimization of ``F`` over the admissible parameters."""

    def objective(P: np.ndarray) -> np.ndarray:
        cols = [P[:, i] for i in range(method.n_params)]
        return _wang_float(FLOAT_OPS, *method.abcde(FLOAT_OPS, inputs, cols))

    current = np.empty(method.n_params)
    for g in method.groups:
        idx = g.indices if isinstance(g, Simplex) else (g.index,)
        pts = grid.points(g)
        current[list(idx)] = pts[len(pts) // 2]
    best = math.inf
    sweeps = 1 if len(method.groups) == 1 else grid.sweeps
    for _ in range(sweeps):
        for g in method.groups:
            idx = list(g.indices if isinstance(g, Simplex) else (g.index,))
            pts = grid.points(g)
            P = np.repeat(current[None, :], len(pts), axis=0)
            P[:, idx] = pts
            vals = objective(P)
            i = int(np.argmin(vals))
            if vals[i] < best:
                best = float(vals[i])
                current = P[i].copy()
    if not math.isfinite(best):
        return None
    if grid.polish:
        def scalar(x):
            # cheap float screen; the exact check runs on the final point only
            for g in method.groups:
                if isinstance(g, Positive):
                    if not g.lo <= x[g.index] < math.inf:
                        return math.inf
                elif min(x[i] for i in g.indices) <= 0 or sum(x[i] for i in g.indices) >= g.total:
                    return math.inf
            return float(objective(np.asarray(x, dtype=float)[None, :])[0])

        res = minimize(scalar, current, method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-9 * best,
                                "maxiter": 300 * method.n_params})
        if res.fun < best and admissible(method.groups, res.x):
            current = np.asarray(res.x, dtype=float)
    return tuple(float(v) for v in current)


def evaluate_wang(method: WangMethod, inputs: Inputs, params: Sequence[float]) -> MethodResult:
    """Single interval evaluation of a Wang method at fixed parameters."""
    if not admissible(method.groups, params):
        raise NoBound(f"{method.name}: parameters violate their constraints")
    p = [Interval(v, v) for v in params]
    A, B, C, D, E = method.abcde(INTERVAL_OPS, inputs, p)
    res = wang_bound(WangParams(A, B, C, D, E))
    F = Interval(max(res.F.lo, 0.0), max(res.F.hi, 0.0))
    R = iv.sqrt(F)
    certified = (Interval(R.hi, R.hi) ** 2).lo >= F.hi
    return MethodResult(method.name, R, res.S, tuple(params), certified)


def run_wang(method: WangMethod, inputs_f: Inputs, inputs_i: Inputs, grid: ParamGrid) -> MethodResult:
    params = _search(method, inputs_f, grid)
    if params is None:
        raise NoBound(f"{method.name}: no admissible parameters found")
    return evaluate_wang(method, inputs_i, params)


def run_root(method: RootMethod, inputs: Inputs) -> MethodResult:
    d0, terms = method.equation(INTERVAL_OPS, inputs)
    eq = RootEquation(d0, tuple(terms))
    A = solve_dominant_root(eq)
    certified = A.hi == 0.0 or eq.rhs(A.hi).hi <= A.hi
    prev = inputs.R[method.previous]
    R = (A / PI).min(iv.sqrt(A * prev))
    return MethodResult(method.name, Interval(max(R.lo, 0.0), R.hi), certified=certified)


# the formulas --------------------------------------------------------------------
def _young7(o, R1, d):
    """``7^7 R1^10 / (2^16 d^7)``."""
    return o.c(F_(7 ** 7, 2 ** 16)) * R1 ** 10 / d ** 7


def _uxx_sources(o, x: Inputs):
    """The three (D, E) pairs bounding ``||u_xx||^2`` growth, as functions of (a, b)."""
    R1, R2 = x.R[1], x.R[2]
    fx2 = x.f[1] ** 2
    pi2 = o.pi * o.pi
    return (
        lambda a, b: (o.c(F_(5 ** 4 * 27, 16)) * R2 ** 4 * R1 ** 2 / b ** 3 + fx2 / a,
                      -(2 - a - b) * pi2),
        lambda a, b: (3 * o.pw(o.c(5), F_(13, 3)) / o.pw(o.c(2), F_(28, 3))
                      * o.pw(R2, F_(14, 3)) / o.pw(b, F_(5, 3)) + fx2 / a,
                      -(2 - a - b) * pi2),
        lambda a, b: (fx2 / a, 25 * R1 * R2 / b - pi2 * (2 - a - b)),
    )


def _uxxx_sources(o, x: Inputs):
    """The two sources bounding ``||u_xxx||^2`` growth (without the forcing part)."""
    R1, R2, R3 = x.R[1], x.R[2], x.R[3]
    return (
        lambda a: (3 * o.pw(o.c(7), F_(8, 3)) * o.pw(o.c(5), F_(5, 3)) / o.pw(o.c(2), F_(25, 3))
                   * o.pw(R2, F_(8, 3)) * R3 ** 2 / o.pw(a, F_(5, 3))),
        lambda a: o.c(F_(7 ** 4 * 27, 16)) * R1 ** 2 * R2 ** 2 * R3 ** 2 / a ** 3,
    )


def _h4_source(o, x: Inputs, a, b, g):
    """Source of the ``||u_xxxx||^2`` inequality with constants (a, b, g)."""
    R1, R2, R3, R4 = x.R[1], x.R[2], x.R[3], x.R[4]
    return (x.f[3] ** 2 / a + 200 * R2 * R3 * R4 ** 2 / b
            + o.c(F_(27 * 11 ** 4, 16)) * R1 ** 2 * R2 ** 2 * R4 ** 2 / g ** 3)


def _r2_wang(o, x, p):
    a, b = p
    R1, f0 = x.R[1], x.f[0]
    return (R1 ** 2, 2 * f0 * R1, o.c(2), f0 ** 2 / a + _young7(o, R1, b),
            -(2 - a - b) * o.pi * o.pi)


def _r3_wang(which):
    def abcde(o, x, p):
        a, b, g, d = p
        R1, R2, f0 = x.R[1], x.R[2], x.f[0]
        D, E = _uxx_sources(o, x)[which](a, b)
        return (R2 ** 2, f0 ** 2 / g + _young7(o, R1, d), 2 - g - d, D, E)
    return abcde


def _r4_wang(b_which, d_which):
    def abcde(o, x, p):
        a, b, g, d = p
        R3 = x.R[3]
        # integral inequality for ||u_xx||^2 uses (g, d), growth of ||u_xxx||^2 uses (a, b)
        B = _uxx_sources(o, x)[b_which](g, d)[0]
        D = _uxxx_sources(o, x)[d_which](a) + x.f[2] ** 2 / b
        return (R3 ** 2, B, 2 - d - g, D, -o.pi * o.pi * (2 - a - b))
    return abcde


def _r5_wang_abcd4(o, x, p):
    a, b, g = p
    R2, R3, R4 = x.R[2], x.R[3], x.R[4]
    B = 7 * o.sqrt(o.c(2)) * o.sqrt(R2 * R3) * R4 ** 2 + x.f[2] ** 2 / a
    D = 100 * R3 * R4 ** 3 / g + x.f[4] ** 2 / b
    E = b + g + 9 * o.sqrt(o.c(2)) * R2 * R3 - 2 * o.pi * o.pi
    # g = ||u_xxx||^2 is bounded by R4^2
    return (R4 ** 2, B, 2 - a, D, E)


def _r5_wang_4x(which):
    def abcde(o, x, p):
        a, b, g, d, e = p
        B = _uxxx_sources(o, x)[which](d) + x.f[2] ** 2 / e
        D = _h4_source(o, x, a, b, g)
        return (x.R[4] ** 2, B, 2 - e - d, D, (a + b + g - 2) * o.pi * o.pi)
    return abcde


def _root_r2(o, x):
    return x.f[0], ((o.pw(x.R[1], F_(5, 4)), F_(3, 4)),)


def _root_r3_half(o, x):
    return x.f[1], ((5 * o.sqrt(x.R[1]) * x.R[2], F_(1, 2)),)


def _root_r3_quarter(o, x):
    return x.f[1], ((5 * o.sqrt(o.c(2)) / 4 * o.pw(x.R[2], F_(7, 4)), F_(1, 4)),)


def _root_r4_quarter(o, x):
    return x.f[2], ((F_(7, 2) * x.R[2] * o.pw(x.R[3], F_(3, 4)), F_(1, 4)),)


def _root_r4_half(o, x):
    return x.f[2], ((7 * o.sqrt(x.R[1] * x.R[2] * x.R[3]), F_(1, 2)),)


def _root_r5(o, x):
    R1, R2, R3, R4 = x.R[1], x.R[2], x.R[3], x.R[4]
    d0 = x.f[3] + 10 * o.sqrt(o.c(2)) * o.sqrt(R2 * R3) * R4
    return d0, ((11 * o.sqrt(R1 * R2 * R4), F_(1, 2)),)


_S2 = (Simplex((0, 1)),)
_S22 = (Simplex((0, 1)), Simplex((2, 3)))

METHODS: dict[int, tuple] = {
    2: (RootMethod("root_H1", _root_r2, 1),
        WangMethod("wang_H1", 2, _S2, _r2_wang)),
    3: (RootMethod("root_H2_half", _root_r3_half, 2),
        RootMethod("root_H2_quarter", _root_r3_quarter, 2),
        WangMethod("wang_H2_a", 4, _S22, _r3_wang(0)),
        WangMethod("wang_H2_b", 4, _S22, _r3_wang(1)),
        WangMethod("wang_H2_c", 4, _S22, _r3_wang(2))),
    4: (RootMethod("root_H3_quarter", _root_r4_quarter, 3),
        RootMethod("root_H3_half", _root_r4_half, 3),
        WangMethod("wang_H3_a", 4, _S22, _r4_wang(0, 0)),
        WangMethod("wang_H3_b", 4, _S22, _r4_wang(1, 0)),
        WangMethod("wang_H3_c", 4, _S22, _r4_wang(0, 1)),
        WangMethod("wang_H3_d", 4, _S22, _r4_wang(1, 1))),
    5: (RootMethod("root_H4", _root_r5, 4),
        WangMethod("wang_H4_single", 3, (Positive(1), Positive(2), Simplex((0,))), _r5_wang_abcd4),
        WangMethod("wang_H4_a", 5, (Simplex((0, 1, 2)), Simplex((3, 4))), _r5_wang_4x(0)),
        WangMethod("wang_H4_b", 5, (Simplex((0, 1, 2)), Simplex((3, 4))), _r5_wang_4x(1))),
}


# public API ----------------------------------------------------------------------
@dataclass(frozen=True)
class TrappingRadii:
    """Upper bounds ``R1..R5`` with the winning method and Wang cross weight ``S``.

    When ``S_i > 0`` the trapping set constrains ``||d^i u||^2 + S ||d^{i-1} u||^2``,
    which still implies ``||d^i u|| <= R_i``.
    """

    R1: Interval
    R2: Interval
    R3: Interval
    R4: Interval
    R5: Interval
    method_used: dict = field(default_factory=dict)
    S2: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    S3: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    S4: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    S5: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    methods: dict = field(default_factory=dict)

    def as_tuple(self) -> tuple[Interval, ...]:
        return (self.R1, self.R2, self.R3, self.R4, self.R5)

    def all_certified(self) -> bool:
        return all(m.certified for results in self.methods.values() for m in results)


def _inputs(f: Forcing, radii: dict, mode) -> tuple[Inputs, Inputs]:
    norms = tuple(f.norm_bound(j, None, mode) for j in range(5))
    # upper endpoints are the certified quantities; every formula is monotone in them
    up = lambda v: Interval(as_interval(v).hi, as_interval(v).hi)
    ivals = Inputs(tuple(up(n) for n in norms), {k: up(v) for k, v in radii.items()})
    fvals = Inputs(tuple(n.hi for n in norms), {k: as_interval(v).hi for k, v in radii.items()})
    return fvals, ivals


def method_results(level: int, f: Forcing, radii: dict, grid: ParamGrid | None = None,
                   mode: NormMode | str = NormMode.TRIANGLE,
                   only: Sequence[str] | None = None) -> list[MethodResult]:
    """Run every method for ``R_level`` that succeeds; failing ones are skipped."""
    grid = grid or ParamGrid()
    fvals, ivals = _inputs(f, radii, mode)
    out = []
    for m in METHODS[level]:
        if only is not None and m.name not in only:
            continue
        try:
            if isinstance(m, RootMethod):
                out.append(run_root(m, ivals))
            else:
                out.append(run_wang(m, fvals, ivals, grid))
        except (NoBound, RootFailure):
            continue
    return out


def _best(level: int, results: list[MethodResult]) -> MethodResult:
    if not results:
        raise NoBound(f"no method produced a bound for R{level}")
    return min(results, key=lambda r: (r.radius.hi, r.name))


def radius_R1(f: Forcing, mode: NormMode | str = NormMode.TRIANGLE) -> Interval:
    """``||f||_{L^inf(L2)} / pi^2``."""
    return f.norm_bound(0, None, mode) / (PI * PI)


def _radius(level, f, radii, grid, mode):
    results = method_results(level, f, radii, grid, mode)
    best = _best(level, results)
    return best, results


def radius_R2(f, R1, grid=None, mode=NormMode.TRIANGLE) -> tuple[Interval, Interval]:
    best, _ = _radius(2, f, {1: R1}, grid, mode)
    return best.radius, best.S


def radius_R3(f, R1, R2, grid=None, mode=NormMode.TRIANGLE) -> tuple[Interval, Interval]:
    best, _ = _radius(3, f, {1: R1, 2: R2}, grid, mode)
    return best.radius, best.S


def radius_R4(f, R1, R2, R3, grid=None, mode=NormMode.TRIANGLE) -> tuple[Interval, Interval]:
    best, _ = _radius(4, f, {1: R1, 2: R2, 3: R3}, grid, mode)
    return best.radius, best.S


def radius_R5(f, R1, R2, R3, R4, grid=None, mode=NormMode.TRIANGLE) -> tuple[Interval, Interval]:
    best, _ = _radius(5, f, {1: R1, 2: R2, 3: R3, 4: R4}, grid, mode)
    return best.radius, best.S


def trapping_radii(f: Forcing, grid: ParamGrid | None = None,
                   mode: NormMode | str = NormMode.TRIANGLE) -> TrappingRadii:
    """All five radii, each the minimum over its methods."""
    grid = grid or ParamGrid()
    R = {1: radius_R1(f, mode)}
    used = {"R1": "direct"}
    S = {}
    methods = {"R1": [MethodResult("direct", R[1])]}
    for level in range(2, 6):
        best, results = _radius(level, f, dict(R), grid, mode)
        R[level] = best.radius
        used[f"R{level}"] = best.name
        S[f"S{level}"] = best.S
        methods[f"R{level}"] = results
    return TrappingRadii(R[1], R[2], R[3], R[4], R[5], used, methods=methods, **S)
