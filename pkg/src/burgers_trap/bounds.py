"""Scalar inequality machinery: dominant roots, the Wang combiner and
comparison-ODE bounds.

Everything here returns intervals whose upper endpoints are the certified
quantities. Float work (root location) is only ever used to pick
candidates that are then checked in interval arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy.optimize import brentq

from . import interval as iv
from .errors import NoBound, RootFailure
from .interval import Interval, as_interval

_SMALL_ARG = 1e-4


@dataclass(frozen=True)
class RootEquation:
    """The fixed-point equation ``x = d0 + sum_k d_k x**p_k``."""

    d0: Interval
    terms: tuple[tuple[Interval, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "d0", as_interval(self.d0))
        terms = tuple((as_interval(d), Fraction(p)) for d, p in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.d0.lo < 0:
            raise ValueError("d0 must be nonnegative")
        for d, p in self.terms:
            if d.lo < 0:
                raise ValueError("term coefficients must be nonnegative")
            if not 0 < p < 1:
                raise ValueError("exponents must lie strictly between 0 and 1")

    def rhs(self, x) -> Interval:
        """Interval evaluation of ``h(x)``."""
        x = as_interval(x)
        out = self.d0
        for d, p in self.terms:
            out = out + d * iv.pow_rational(x, p)
        return out

    def rhs_float(self, x: float) -> float:
        return self.d0.mid + sum(d.mid * x ** float(p) for d, p in self.terms)


def solve_dominant_root(eq: RootEquation, budget: int = 80) -> Interval:
    """Certified bracket ``[lo, hi]`` around the positive root of ``x = h(x)``.

    ``h(hi) <= hi`` and ``h(lo) >= lo`` are both checked in interval
    arithmetic, so every root for coefficients inside the intervals lies
    in the result.
    """
    if eq.d0.hi == 0.0 and all(d.hi == 0.0 for d, _ in eq.terms):
        return Interval(0.0, 0.0)

    def gap(x: float) -> float:
        return x - eq.rhs_float(x)

    upper = max(1.0, 2.0 * eq.d0.hi)
    while gap(upper) <= 0:
        upper *= 2.0
        if not math.isfinite(upper):
            raise RootFailure("could not bracket the root")
    lower = 0.0
    if gap(lower) < 0 < gap(upper):
        root = brentq(gap, lower, upper, xtol=1e-300, rtol=4 * 2.0 ** -52, maxiter=400)
    else:
        root = upper if gap(upper) == 0 else lower

    hi = root
    step = max(abs(root), 1e-300) * 2.0 ** -50
    for _ in range(budget):
        if eq.rhs(hi).hi <= hi:
            break
        hi = hi + step
        step *= 2.0
    else:
        raise RootFailure("upper bracket not certified")

    lo = root
    step = max(abs(root), 1e-300) * 2.0 ** -50
    for _ in range(budget):
        if lo <= 0.0:
            lo = 0.0
            break
        if eq.rhs(lo).lo >= lo:
            break
        lo = lo - step
        step *= 2.0
    else:
        raise RootFailure("lower bracket not certified")
    lo = max(lo, 0.0)
    if lo == 0.0 and eq.rhs(0.0).lo < 0.0:
        raise RootFailure("lower bracket not certified")
    return Interval(lo, hi)


@dataclass(frozen=True)
class WangParams:
    """Constants of the paired inequalities ``g' + C v <= B``, ``v' <= D + E v``
    with ``0 <= g <= A``."""

    A: Interval
    B: Interval
    C: Interval
    D: Interval
    E: Interval

    def __post_init__(self):
        for name in "ABCDE":
            object.__setattr__(self, name, as_interval(getattr(self, name)))
        if self.A.lo < 0:
            raise ValueError("A must be nonnegative")
        if self.C.lo <= 0:
            raise ValueError("C must be positive")


@dataclass(frozen=True)
class WangResult:
    F: Interval
    S: Interval
    case: int = field(default=1)


def wang_bound(p: WangParams) -> WangResult:
    """Asymptotic bound ``F`` on ``v + S g`` with the optimal decay rate.

    Case 1 (decay ``-E``) gives ``F = -D/E`` and ``S = 0``. Case 2 uses
    ``lam = sqrt((CD + BE)/A)`` and gives
    ``F = (EA + B + 2 sqrt(A(CD + BE)))/C`` with ``S = (E + lam)/C``.
    When the case cannot be decided in interval arithmetic, whichever
    branch is certainly admissible is used.
    """
    A, B, C, D, E = p.A, p.B, p.C, p.D, p.E
    X = C * D + B * E
    case1_ok = E.hi < 0

    def case1() -> WangResult:
        return WangResult(-(D / E), Interval(0.0, 0.0), 1)

    if X.hi <= 0 or A.hi == 0.0:
        if case1_ok:
            return case1()
        raise NoBound("E is not negative and no decay rate is available")
    if X.lo > 0 and A.lo > 0:
        lam = iv.sqrt(X / A)
        if lam.hi <= -E.lo:
            if case1_ok:
                return case1()
        elif (lam + E).lo > 0:
            F = (E * A + B + 2 * iv.sqrt(A * X)) / C
            S = (E + lam) / C
            return WangResult(F, Interval(max(S.lo, 0.0), max(S.hi, 0.0)), 2)
    if case1_ok:
        return case1()
    raise NoBound("neither case of the combiner can be certified")


def _phi1(x: Interval) -> Interval:
    """Enclosure of ``(1 - exp(-x))/x`` (decreasing, equal to 1 at 0)."""

    def at(v: float) -> Interval:
        if abs(v) < _SMALL_ARG:
            vi = Interval(v, v)
            core = 1 - vi / 2
            tail = vi * vi / 5
            return Interval((core - tail).lo, (core + tail).hi)
        vi = Interval(v, v)
        return (1 - iv.exp(-vi)) / vi

    return Interval(at(x.hi).lo, at(x.lo).hi)


def _tanhc(x: Interval) -> Interval:
    """Enclosure of ``tanh(x)/x`` for ``x >= 0`` (decreasing, 1 at 0)."""

    def at(v: float) -> Interval:
        if v < _SMALL_ARG:
            vi = Interval(v, v)
            return Interval((1 - vi * vi / 3).lo, 1.0)
        vi = Interval(v, v)
        return iv.tanh(vi) / vi

    return Interval(at(x.hi).lo, at(max(x.lo, 0.0)).hi)


@dataclass(frozen=True)
class ComparisonBound:
    """Upper bounds at the end of a window and over the whole window."""

    end: Interval
    sup: Interval


def linear_ode_bound(a, b, z0, t) -> ComparisonBound:
    """Bound for ``z' <= -a z + b`` with ``z(0) <= z0`` after time ``t``.

    Uses ``z0 e^{-at} + b t phi(at)`` with ``phi(x) = (1 - e^{-x})/x``,
    which covers decay, growth and the ``a = 0`` limit in one formula.
    """
    a, b, z0, t = (as_interval(v) for v in (a, b, z0, t))
    if b.lo < 0 or z0.lo < 0 or t.lo < 0:
        raise ValueError("b, z0 and t must be nonnegative")
    at = a * t
    end = z0 * iv.exp(-at) + b * t * _phi1(at)
    end = Interval(max(end.lo, 0.0), end.hi)
    sup = Interval(max(z0.lo, end.lo), max(z0.hi, end.hi))
    return ComparisonBound(end, sup)


def riccati_tanh_bound(C, D, z0, t) -> ComparisonBound:
    """Bound for ``z' <= -C z^2 + D`` with ``z(0) <= z0`` after time ``t``.

    Evaluates ``(D T + z0)/(C T z0 + 1)`` with ``T = tanh(sqrt(CD) t)/sqrt(CD)``,
    the division-free form of the tanh solution. ``D = 0`` reduces to
    ``z0/(1 + C z0 t)``.
    """
    C, D, z0, t = (as_interval(v) for v in (C, D, z0, t))
    if C.lo <= 0:
        raise ValueError("C must be positive")
    if D.lo < 0 or z0.lo < 0 or t.lo < 0:
        raise ValueError("D, z0 and t must be nonnegative")
    s = iv.sqrt(C * D)
    T = t * _tanhc(s * t)
    end = (D * T + z0) / (C * T * z0 + 1)
    end = Interval(max(end.lo, 0.0), end.hi)
    sup = Interval(max(z0.lo, end.lo), max(z0.hi, end.hi))
    return ComparisonBound(end, sup)
