"""Outward-rounded interval arithmetic on binary64 endpoints.

Rounding strategy: every endpoint is computed in the default
round-to-nearest mode and then post-adjusted to the adjacent representable
value with ``nextafter``. No hardware rounding mode is ever changed, so the
code is safe to call from any thread. Addition and subtraction (scalar and
elementwise) and scalar multiplication use error-free transformations to
skip the adjustment when the float result is already exact, which keeps
integer-valued inputs tight and zeros exactly zero.

Elementary functions call the platform ``libm`` and widen the result by
``LIBM_ULPS`` units in the last place. glibc documents errors of at most
one or two ulps for the functions used here, so the padding covers them.

Vectors and matrices keep their endpoints in numpy arrays. Dot products are
summed in floating point and then widened by the standard a priori bound
``gamma_n * sum(|terms|)``, which holds for any summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import DomainError, InversionFailure

INF = math.inf
UNIT_ROUNDOFF = 2.0 ** -53
LIBM_ULPS = 2
_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_LIMIT = 1e290


def _down(x: float) -> float:
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    return math.nextafter(x, INF)


def _pad_down(x: float, n: int = LIBM_ULPS) -> float:
    for _ in range(n):
        x = math.nextafter(x, -INF)
    return x


def _pad_up(x: float, n: int = LIBM_ULPS) -> float:
    for _ in range(n):
        x = math.nextafter(x, INF)
    return x


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> tuple[float, float] | None:
    """Exact error of ``a*b``; None when splitting could overflow or underflow."""
    p = a * b
    if not math.isfinite(p) or abs(a) > _SPLIT_LIMIT or abs(b) > _SPLIT_LIMIT:
        return None
    # the partial products must stay normal for the error term to be exact
    if abs(p) < 1e-270 and a != 0.0 and b != 0.0:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _add_round(a: float, b: float) -> tuple[float, float]:
    s, e = _two_sum(a, b)
    if not math.isfinite(s):
        return _down(s), _up(s)
    if e == 0.0:
        return s, s
    return (s, _up(s)) if e > 0 else (_down(s), s)


def _mul_round(a: float, b: float) -> tuple[float, float]:
    r = _two_prod(a, b)
    if r is None:
        p = a * b
        return _down(p), _up(p)
    p, e = r
    if e == 0.0:
        return p, p
    return (p, _up(p)) if e > 0 else (_down(p), p)


def _div_round(a: float, b: float) -> tuple[float, float]:
    q = a / b
    r = _two_prod(q, b)
    if r is not None and math.isfinite(q):
        p, e = r
        # residual a - q*b has the sign of (a/b - q) times sign(b)
        resid = (a - p) - e
        if resid == 0.0:
            return q, q
        if (resid > 0) == (b > 0):
            return q, _up(q)
        return _down(q), q
    return _down(q), _up(q)


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]`` with binary64 endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    # construction -----------------------------------------------------
    @staticmethod
    def point(x) -> "Interval":
        return as_interval(x)

    @staticmethod
    def from_fraction(q: Fraction) -> "Interval":
        q = Fraction(q)
        f = float(q)
        exact = Fraction(f)
        if exact == q:
            return Interval(f, f)
        return Interval(f, _up(f)) if exact < q else Interval(_down(f), f)

    @staticmethod
    def hull(*items) -> "Interval":
        ivs = [as_interval(x) for x in items]
        return Interval(min(i.lo for i in ivs), max(i.hi for i in ivs))

    # queries ----------------------------------------------------------
    @property
    def mid(self) -> float:
        m = 0.5 * self.lo + 0.5 * self.hi
        return min(max(m, self.lo), self.hi)

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo)

    @property
    def rad(self) -> float:
        return _up(0.5 * (self.hi - self.lo))

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def interior_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    # arithmetic ---------------------------------------------------------
    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        o = as_interval(other)
        return Interval(_add_round(self.lo, o.lo)[0], _add_round(self.hi, o.hi)[1])

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        o = as_interval(other)
        return Interval(_add_round(self.lo, -o.hi)[0], _add_round(self.hi, -o.lo)[1])

    def __rsub__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        return as_interval(other) - self

    def __mul__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        o = as_interval(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if a >= 0 and c >= 0:
            return Interval(max(_mul_round(a, c)[0], 0.0), _mul_round(b, d)[1])
        pairs = ((a, c), (a, d), (b, c), (b, d))
        los, his = zip(*(_mul_round(x, y) for x, y in pairs))
        return Interval(min(los), max(his))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        o = as_interval(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError("division by an interval containing zero")
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        pairs = ((a, c), (a, d), (b, c), (b, d))
        los, his = zip(*(_div_round(x, y) for x, y in pairs))
        return Interval(min(los), max(his))

    def __rtruediv__(self, other) -> "Interval":
        if isinstance(other, (_IntervalArray, np.ndarray)):
            return NotImplemented
        return as_interval(other) / self

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int) or n < 0:
            return pow_rational(self, Fraction(n))
        if n == 0:
            return Interval(1.0, 1.0)
        if n % 2 == 0:
            base = Interval(self.mig, self.mag)
        else:
            base = self
        out = base
        for _ in range(n - 1):
            out = out * base
        if n % 2 == 0 and out.lo < 0:
            out = Interval(0.0, out.hi)
        return out

    def sqr(self) -> "Interval":
        return self ** 2

    def abs(self) -> "Interval":
        return Interval(self.mig, self.mag)

    def max(self, other) -> "Interval":
        o = as_interval(other)
        return Interval(max(self.lo, o.lo), max(self.hi, o.hi))

    def min(self, other) -> "Interval":
        o = as_interval(other)
        return Interval(min(self.lo, o.lo), min(self.hi, o.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


def as_interval(x) -> Interval:
    """Coerce ints, floats, Fractions and Intervals to an enclosing Interval."""
    if isinstance(x, Interval):
        return x
    if isinstance(x, bool):
        x = int(x)
    if isinstance(x, int):
        f = float(x)
        if abs(x) <= 2 ** 53 or Fraction(f) == x:
            return Interval(f, f)
        return Interval.from_fraction(Fraction(x))
    if isinstance(x, Fraction):
        return Interval.from_fraction(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            raise DomainError("NaN cannot form an interval")
        return Interval(f, f)
    if isinstance(x, Real):
        return as_interval(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Interval")


PI = Interval(math.pi, _up(math.pi))
ZERO = Interval(0.0, 0.0)
ONE = Interval(1.0, 1.0)


# elementary functions -------------------------------------------------------

def _is_exact_square(r: float, x: float) -> bool:
    if not math.isfinite(r):
        return False
    tp = _two_prod(r, r)
    return tp is not None and tp[0] == x and tp[1] == 0.0


def sqrt(x) -> Interval:
    x = as_interval(x)
    if x.lo < 0:
        raise DomainError("sqrt of an interval with negative part")
    lo = math.sqrt(x.lo)
    hi = math.sqrt(x.hi)
    # sqrt is correctly rounded; keep exact squares tight
    if not _is_exact_square(lo, x.lo):
        lo = _down(lo)
    if not _is_exact_square(hi, x.hi):
        hi = _up(hi)
    return Interval(max(lo, 0.0), hi)


def exp(x) -> Interval:
    x = as_interval(x)
    lo = 0.0 if x.lo == -INF else max(_pad_down(math.exp(x.lo)), 0.0)
    if x.lo == 0.0:
        lo = 1.0
    try:
        hi = _pad_up(math.exp(x.hi))
    except OverflowError:
        hi = INF
    if x.hi == 0.0:
        hi = 1.0
    return Interval(lo, hi)


def log(x) -> Interval:
    x = as_interval(x)
    if x.lo <= 0:
        raise DomainError("log requires a strictly positive interval")
    lo = 0.0 if x.lo == 1.0 else _pad_down(math.log(x.lo))
    hi = 0.0 if x.hi == 1.0 else _pad_up(math.log(x.hi))
    return Interval(lo, hi)


def tanh(x) -> Interval:
    x = as_interval(x)
    lo = 0.0 if x.lo == 0.0 else max(_pad_down(math.tanh(x.lo)), -1.0)
    hi = 0.0 if x.hi == 0.0 else min(_pad_up(math.tanh(x.hi)), 1.0)
    return Interval(lo, hi)


def _contains_point_of_lattice(x: Interval, offset: Interval, period: Interval) -> bool:
    """Whether ``x`` may contain ``offset + n*period`` for some integer n."""
    q = (x - offset) / period
    return math.floor(q.hi) >= math.ceil(q.lo)


def sin(x) -> Interval:
    x = as_interval(x)
    if not x.is_finite():
        return Interval(-1.0, 1.0)
    two_pi = 2 * PI
    if x.hi - x.lo >= 6.3:
        return Interval(-1.0, 1.0)
    a, b = math.sin(x.lo), math.sin(x.hi)
    lo = max(_pad_down(min(a, b)), -1.0)
    hi = min(_pad_up(max(a, b)), 1.0)
    if x.lo == x.hi == 0.0:
        return Interval(0.0, 0.0)
    if _contains_point_of_lattice(x, PI / 2, two_pi):
        hi = 1.0
    if _contains_point_of_lattice(x, -PI / 2, two_pi):
        lo = -1.0
    return Interval(lo, hi)


def cos(x) -> Interval:
    x = as_interval(x)
    if not x.is_finite() or x.hi - x.lo >= 6.3:
        return Interval(-1.0, 1.0)
    if x.lo == x.hi == 0.0:
        return Interval(1.0, 1.0)
    a, b = math.cos(x.lo), math.cos(x.hi)
    lo = max(_pad_down(min(a, b)), -1.0)
    hi = min(_pad_up(max(a, b)), 1.0)
    two_pi = 2 * PI
    if _contains_point_of_lattice(x, ZERO, two_pi):
        hi = 1.0
    if _contains_point_of_lattice(x, PI, two_pi):
        lo = -1.0
    return Interval(lo, hi)


def pow_rational(x, p) -> Interval:
    """Enclosure of ``x**p`` for a rational exponent ``p`` and ``x >= 0``.

    A float exponent such as 5/3 is inexact, so the exponent is enclosed
    too and both of its endpoints are tried.
    """
    x = as_interval(x)
    p = Fraction(p)
    if p == 0:
        return ONE
    if p.denominator == 1 and p > 0:
        return x ** int(p)
    if x.lo < 0:
        raise DomainError("pow_rational requires a nonnegative base")
    if p < 0 and x.lo == 0:
        raise DomainError("negative exponent of an interval touching zero")
    pe = Interval.from_fraction(p)

    def corners(base: float) -> tuple[float, float]:
        if base == 0.0:
            return 0.0, 0.0
        if base == 1.0:
            return 1.0, 1.0
        vals = [math.pow(base, pe.lo), math.pow(base, pe.hi)]
        return _pad_down(min(vals)), _pad_up(max(vals))

    lo_a, hi_a = corners(x.lo)
    lo_b, hi_b = corners(x.hi)
    return Interval(max(min(lo_a, lo_b), 0.0), max(hi_a, hi_b))


def hull(*items) -> Interval:
    return Interval.hull(*items)


# vectors and matrices -----------------------------------------------------------

def _arr_down(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, -INF)


def _arr_up(x: np.ndarray) -> np.ndarray:
    return np.nextafter(x, INF)


def _arr_add(a, b):
    """``a + b`` with outward rounding skipped where the float sum is exact."""
    s = a + b
    bb = s - a
    with np.errstate(invalid="ignore"):
        e = (a - (s - bb)) + (b - bb)
    return np.where(e >= 0, s, _arr_down(s)), np.where(e <= 0, s, _arr_up(s))


def _elem_mul(alo, ahi, blo, bhi):
    """Outward-rounded elementwise interval product with broadcasting.

    Zero endpoints coming from a zero factor are exact and stay put, so
    products with zero vectors remain exactly zero.
    """
    pairs = ((alo, blo), (alo, bhi), (ahi, blo), (ahi, bhi))
    prods = [x * y for x, y in pairs]
    lo = np.minimum(np.minimum(prods[0], prods[1]), np.minimum(prods[2], prods[3]))
    hi = np.maximum(np.maximum(prods[0], prods[1]), np.maximum(prods[2], prods[3]))
    # a zero product of two nonzero factors is an underflow and must be rounded
    underflow = np.zeros(np.broadcast(lo, hi).shape, dtype=bool)
    for p, (x, y) in zip(prods, pairs):
        underflow |= (p == 0) & (x != 0) & (y != 0)
    lo = np.where((lo == 0) & ~underflow, 0.0, _arr_down(lo))
    hi = np.where((hi == 0) & ~underflow, 0.0, _arr_up(hi))
    return lo, hi


def _sum_bound(terms: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Rigorous enclosure of the exact sum of float ``terms`` along ``axis``."""
    n = terms.shape[axis]
    s = np.sum(terms, axis=axis)
    if n <= 1:
        return s, s
    err = np.sum(np.abs(terms), axis=axis) * ((2 * n + 4) * UNIT_ROUNDOFF)
    # err == 0 means every term is zero or tiny enough that the sum is exact
    exact = err == 0
    return np.where(exact, s, _arr_down(s - err)), np.where(exact, s, _arr_up(s + err))


def _interval_sum(lo: np.ndarray, hi: np.ndarray, axis: int):
    return _sum_bound(lo, axis)[0], _sum_bound(hi, axis)[1]


def _sum_up(nonneg: np.ndarray, axis=None) -> np.ndarray:
    """Upper bound for a sum of nonnegative floats."""
    x = np.asarray(nonneg, dtype=float)
    n = x.size if axis is None else x.shape[axis]
    s = np.sum(x, axis=axis)
    return _arr_up(s * (1.0 + (2 * n + 4) * UNIT_ROUNDOFF))


class _IntervalArray:
    """Shared elementwise behaviour for interval vectors and matrices."""

    __slots__ = ("lo", "hi")
    ndim = 0

    def __init__(self, lo, hi=None):
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != self.ndim:
            raise ValueError(f"expected matching {self.ndim}-d endpoint arrays")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise DomainError("invalid interval array endpoints")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi):
        obj = object.__new__(cls)
        obj.lo = lo
        obj.hi = hi
        return obj

    @classmethod
    def point(cls, values):
        v = np.array(values, dtype=float)
        return cls._raw(v, v.copy())

    @classmethod
    def from_intervals(cls, items):
        objs = np.array(items, dtype=object)
        los = np.vectorize(lambda i: as_interval(i).lo, otypes=[float])(objs)
        his = np.vectorize(lambda i: as_interval(i).hi, otypes=[float])(objs)
        return cls(los, his)

    @property
    def shape(self):
        return self.lo.shape

    @property
    def mid(self) -> np.ndarray:
        m = 0.5 * self.lo + 0.5 * self.hi
        return np.clip(m, self.lo, self.hi)

    @property
    def rad(self) -> np.ndarray:
        return _arr_up(0.5 * (self.hi - self.lo))

    @property
    def width(self) -> np.ndarray:
        return _arr_up(self.hi - self.lo)

    @property
    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def __getitem__(self, idx):
        lo, hi = self.lo[idx], self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        if np.ndim(lo) == 1:
            return IntervalVector._raw(lo, hi)
        return IntervalMatrix._raw(lo, hi)

    def _coerce(self, other):
        if isinstance(other, _IntervalArray):
            return other.lo, other.hi
        if isinstance(other, Interval):
            return other.lo, other.hi
        arr = np.asarray(other, dtype=float)
        return arr, arr

    def _wrap(self, lo, hi):
        if lo.ndim == 1:
            return IntervalVector._raw(lo, hi)
        if lo.ndim == 2:
            return IntervalMatrix._raw(lo, hi)
        return Interval(float(lo), float(hi))

    def __neg__(self):
        return self._wrap(-self.hi, -self.lo)

    def __add__(self, other):
        olo, ohi = self._coerce(other)
        return self._wrap(_arr_add(self.lo, olo)[0], _arr_add(self.hi, ohi)[1])

    __radd__ = __add__

    def __sub__(self, other):
        olo, ohi = self._coerce(other)
        return self._wrap(_arr_add(self.lo, -ohi)[0], _arr_add(self.hi, -olo)[1])

    def __rsub__(self, other):
        olo, ohi = self._coerce(other)
        return self._wrap(_arr_add(olo, -self.hi)[0], _arr_add(ohi, -self.lo)[1])

    def __mul__(self, other):
        olo, ohi = self._coerce(other)
        return self._wrap(*_elem_mul(self.lo, self.hi, olo, ohi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        olo, ohi = self._coerce(other)
        if np.any((olo <= 0) & (ohi >= 0)):
            raise DomainError("division by an interval containing zero")
        rlo = _arr_down(np.asarray(1.0 / ohi))
        rhi = _arr_up(np.asarray(1.0 / olo))
        return self._wrap(*_elem_mul(self.lo, self.hi, rlo, rhi))

    def hull(self, other):
        olo, ohi = self._coerce(other)
        return self._wrap(np.minimum(self.lo, olo), np.maximum(self.hi, ohi))

    def intersect(self, other):
        olo, ohi = self._coerce(other)
        lo, hi = np.maximum(self.lo, olo), np.minimum(self.hi, ohi)
        if np.any(lo > hi):
            raise DomainError("empty intersection")
        return self._wrap(lo, hi)

    def contains(self, other) -> bool:
        olo, ohi = self._coerce(other)
        return bool(np.all(self.lo <= olo) and np.all(ohi <= self.hi))

    def interior_contains(self, other) -> bool:
        olo, ohi = self._coerce(other)
        return bool(np.all(self.lo < olo) and np.all(ohi < self.hi))

    def sqr(self):
        mig = np.where((self.lo <= 0) & (self.hi >= 0), 0.0,
                       np.minimum(np.abs(self.lo), np.abs(self.hi)))
        mag = self.mag
        lo, hi = _elem_mul(mig, mig, mig, mig)[0], _elem_mul(mag, mag, mag, mag)[1]
        return self._wrap(np.maximum(lo, 0.0), hi)

    def inflate(self, factor: float, absolute: float = 0.0):
        """Scale about the midpoint by ``factor`` and pad by ``absolute``."""
        m = self.mid
        r = self.rad * factor + absolute
        return self._wrap(_arr_down(m - r), _arr_up(m + r))

    def sum(self) -> Interval:
        lo, hi = _interval_sum(self.lo.ravel(), self.hi.ravel(), 0)
        return Interval(float(lo), float(hi))

    def __len__(self):
        return self.lo.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(lo={self.lo!r}, hi={self.hi!r})"


class IntervalVector(_IntervalArray):
    """Fixed-length vector of intervals."""

    __slots__ = ()
    ndim = 1

    def __iter__(self):
        for a, b in zip(self.lo, self.hi):
            yield Interval(float(a), float(b))

    def dot(self, other) -> Interval:
        olo, ohi = self._coerce(other)
        plo, phi = _elem_mul(self.lo, self.hi, olo, ohi)
        lo, hi = _interval_sum(plo, phi, 0)
        return Interval(float(lo), float(hi))

    def norm2_upper(self) -> float:
        """Upper bound of the euclidean norm."""
        return float(_arr_up(np.sqrt(_sum_up(self.mag ** 2 * (1 + 4 * UNIT_ROUNDOFF)))))

    def max_norm_upper(self) -> float:
        return float(np.max(self.mag)) if self.lo.size else 0.0


class IntervalMatrix(_IntervalArray):
    """Rectangular matrix of intervals."""

    __slots__ = ()
    ndim = 2

    @classmethod
    def identity(cls, n: int):
        return cls.point(np.eye(n))

    @property
    def T(self):
        return IntervalMatrix._raw(self.lo.T.copy(), self.hi.T.copy())

    def norm_inf_upper(self) -> float:
        """Upper bound of the induced infinity norm (max absolute row sum)."""
        return float(np.max(_sum_up(self.mag, axis=1))) if self.lo.size else 0.0

    def __matmul__(self, other):
        if isinstance(other, IntervalVector) or (not isinstance(other, _IntervalArray)
                                                 and np.ndim(other) == 1):
            return matvec(self, other)
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(IntervalMatrix.point(other), self)


def _as_matrix(m) -> IntervalMatrix:
    if isinstance(m, IntervalMatrix):
        return m
    return IntervalMatrix.point(m)


def _as_vector(v) -> IntervalVector:
    if isinstance(v, IntervalVector):
        return v
    return IntervalVector.point(v)


def matvec(m, v) -> IntervalVector:
    """Enclosure of the product of an interval (or point) matrix and vector."""
    m, v = _as_matrix(m), _as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise ValueError("dimension mismatch in matvec")
    plo, phi = _elem_mul(m.lo, m.hi, v.lo[None, :], v.hi[None, :])
    lo, hi = _interval_sum(plo, phi, 1)
    return IntervalVector._raw(lo, hi)


def matmul(a, b) -> IntervalMatrix:
    """Enclosure of the product of two interval (or point) matrices."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError("dimension mismatch in matmul")
    plo, phi = _elem_mul(a.lo[:, :, None], a.hi[:, :, None], b.lo[None, :, :], b.hi[None, :, :])
    lo, hi = _interval_sum(plo, phi, 1)
    return IntervalMatrix._raw(lo, hi)


def verified_inverse(m) -> IntervalMatrix:
    """Interval matrix guaranteed to contain the inverse of every matrix in ``m``.

    With an approximate inverse G and residual bound ``rho >= ||I - G m||_inf``
    the true inverse is ``G + E`` with ``|E_ij| <= ||G||_inf rho / (1 - rho)``.
    """
    m = _as_matrix(m)
    n, k = m.shape
    if n != k:
        raise ValueError("verified_inverse requires a square matrix")
    try:
        g = np.linalg.inv(m.mid)
    except np.linalg.LinAlgError as exc:
        raise InversionFailure("approximate inverse failed") from exc
    if not np.all(np.isfinite(g)):
        raise InversionFailure("approximate inverse is not finite")
    resid = IntervalMatrix.identity(n) - matmul(g, m)
    rho = resid.norm_inf_upper()
    if not rho < 1.0:
        raise InversionFailure(f"residual bound {rho} is not below one")
    g_norm = float(np.max(_sum_up(np.abs(g), axis=1)))
    num = _up(g_norm * rho)
    den = _down(1.0 - rho)
    delta = _up(num / den)
    return IntervalMatrix._raw(_arr_down(g - delta), _arr_up(g + delta))


def elem_exp(v: _IntervalArray):
    """Elementwise exponential of an interval array."""
    lo = np.maximum(np.nextafter(np.nextafter(np.exp(v.lo), -INF), -INF), 0.0)
    hi = np.nextafter(np.nextafter(np.exp(v.hi), INF), INF)
    lo = np.where(v.lo == 0.0, 1.0, lo)
    hi = np.where(v.hi == 0.0, 1.0, hi)
    return v._wrap(lo, hi)
