"""Separable trigonometric forcings ``f(x,t) = sum_j a_j sin(k_j pi x) s_j(t)``.

Each temporal factor is ``s_j(t) = c0 + c1 sin(2 pi (t + phase)/period)``.
All norms are spatial L2 norms on (0, 1), bounded over a time window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from . import interval as iv
from .interval import PI, Interval, IntervalVector, as_interval


class NormMode(str, Enum):
    """How multi-term forcings are bounded in L2."""

    TRIANGLE = "triangle"
    ORTHOGONAL = "orthogonal"


Window = Interval | None
_SQRT_HALF = iv.sqrt(Interval(0.5, 0.5))


@dataclass(frozen=True)
class ForcingTerm:
    amplitude: Interval
    spatial_mode: int
    c0: Interval = field(default_factory=lambda: Interval(1.0, 1.0))
    c1: Interval = field(default_factory=lambda: Interval(0.0, 0.0))
    phase: Interval = field(default_factory=lambda: Interval(0.0, 0.0))

    def __post_init__(self):
        for name in ("amplitude", "c0", "c1", "phase"):
            object.__setattr__(self, name, as_interval(getattr(self, name)))
        if not isinstance(self.spatial_mode, int) or self.spatial_mode < 1:
            raise ValueError("spatial_mode must be a positive integer")


@dataclass(frozen=True)
class Forcing:
    """Immutable forcing; ``period`` is the period of every temporal factor."""

    period: Interval
    terms: tuple[ForcingTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "period", as_interval(self.period))
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.period.lo <= 0:
            raise ValueError("period must be positive")

    @property
    def omega(self) -> Interval:
        return 2 * PI / self.period

    def is_zero(self) -> bool:
        return all(t.amplitude.mag == 0.0 for t in self.terms)

    def scaled(self, factor: float) -> "Forcing":
        return Forcing(self.period, tuple(
            ForcingTerm(t.amplitude * factor, t.spatial_mode, t.c0, t.c1, t.phase)
            for t in self.terms))

    # temporal factors --------------------------------------------------------
    def temporal_range(self, term: ForcingTerm, window: Window) -> Interval:
        """Range of ``s(t)`` over the window (whole line when None)."""
        if window is None or term.c1.mag == 0.0:
            sin_range = Interval(-1.0, 1.0) if term.c1.mag != 0.0 else Interval(0.0, 0.0)
        else:
            # endpoint values plus interior critical points of the closed form
            sin_range = iv.sin(self.omega * (as_interval(window) + term.phase))
        return term.c0 + term.c1 * sin_range

    def temporal_sup(self, term: ForcingTerm, window: Window) -> Interval:
        """Upper bound for ``sup |s(t)|`` over the window."""
        if window is None:
            return term.c0.abs() + term.c1.abs()
        return self.temporal_range(term, window).abs()

    def temporal_taylor(self, term: ForcingTerm, t, order: int) -> list[Interval]:
        """Taylor coefficients ``s^{(n)}(t)/n!`` for ``n = 0..order``.

        ``t`` may be an interval, giving enclosures valid over it.
        """
        t = as_interval(t)
        w = self.omega
        theta = w * (t + term.phase)
        coeffs = [term.c0 + term.c1 * iv.sin(theta)]
        wn = Interval(1.0, 1.0)
        for n in range(1, order + 1):
            wn = wn * w
            shifted = theta + PI * Fraction(n, 2)
            coeffs.append(term.c1 * wn * iv.sin(shifted) / math.factorial(n))
        return coeffs

    # spatial norms ----------------------------------------------------------------
    def _mode_factor(self, k: int, order: int) -> Interval:
        return (PI * k) ** order * _SQRT_HALF

    def norm_bound(self, deriv_order: int = 0, window: Window = None,
                   mode: NormMode | str = NormMode.TRIANGLE) -> Interval:
        """Upper bound for ``sup_t ||d^n f/dx^n (., t)||_{L2}`` over the window."""
        if not 0 <= deriv_order <= 4:
            raise ValueError("deriv_order must be between 0 and 4")
        mode = NormMode(mode)
        if not self.terms:
            return Interval(0.0, 0.0)
        if mode is NormMode.TRIANGLE:
            total = Interval(0.0, 0.0)
            for term in self.terms:
                total = total + (term.amplitude.abs() * self._mode_factor(term.spatial_mode, deriv_order)
                                 * self.temporal_sup(term, window))
            return Interval(max(total.lo, 0.0), total.hi)
        # distinct sine modes are orthogonal; equal modes are summed first
        per_mode: dict[int, Interval] = {}
        for term in self.terms:
            amp = term.amplitude.abs() * self.temporal_sup(term, window)
            per_mode[term.spatial_mode] = per_mode.get(term.spatial_mode, Interval(0.0, 0.0)) + amp
        sq = Interval(0.0, 0.0)
        for k, amp in per_mode.items():
            sq = sq + (amp * self._mode_factor(k, deriv_order)) ** 2
        return iv.sqrt(sq)

    # pairings with the finite element basis ---------------------------------------
    @staticmethod
    def hat_sine_integral(k: int, m: int, h: Interval) -> Interval:
        """Exact ``int_0^1 v^m(x) sin(k pi x) dx`` for the hat function at node ``m``."""
        kph = PI * k * h
        return 4 * iv.sin(kph / 2) ** 2 / (kph * PI * k) * iv.sin(kph * m)

    def node_weights(self, term: ForcingTerm, n_nodes: int, h: Interval) -> IntervalVector:
        """Vector of ``a_j * int v^m sin(k_j pi x)`` over interior nodes ``m = 1..n_nodes``."""
        vals = [term.amplitude * self.hat_sine_integral(term.spatial_mode, m, h)
                for m in range(1, n_nodes + 1)]
        return IntervalVector.from_intervals(vals)

    def project_node(self, window: Window, m: int, h) -> Interval:
        """Interval containing ``(f(t), v^m)`` for every ``t`` in the window."""
        h = as_interval(h)
        total = Interval(0.0, 0.0)
        for term in self.terms:
            weight = term.amplitude * self.hat_sine_integral(term.spatial_mode, m, h)
            total = total + weight * self.temporal_range(term, window)
        return total

    def project_nodes(self, window: Window, n_nodes: int, h) -> IntervalVector:
        h = as_interval(h)
        out = IntervalVector.point([0.0] * n_nodes)
        for term in self.terms:
            out = out + self.node_weights(term, n_nodes, h) * self.temporal_range(term, window)
        return out

    def qk_pairing_bound(self, window: Window, w_norm_L2, h,
                         mode: NormMode | str = NormMode.TRIANGLE):
        """Bound for ``sup |(Q_k f(t), w)|`` given ``||w||_{L2}``.

        ``w_norm_L2`` may be an Interval or an IntervalVector of norms.
        """
        h = as_interval(h)
        fxx = self.norm_bound(2, window, mode)
        return (h * h / (PI * PI)) * fxx * w_norm_L2


def forcing_from_records(period, records) -> Forcing:
    """Build a Forcing from plain ``{amplitude, spatial_mode, c0, c1, phase}`` mappings."""
    terms = []
    for rec in records:
        terms.append(ForcingTerm(
            amplitude=as_interval(rec["amplitude"]),
            spatial_mode=int(rec["spatial_mode"]),
            c0=as_interval(rec.get("c0", 1.0)),
            c1=as_interval(rec.get("c1", 0.0)),
            phase=as_interval(rec.get("phase", 0.0)),
        ))
    return Forcing(as_interval(period), tuple(terms))


def example1() -> Forcing:
    """``8 (sin 3 pi x + sin 4 pi x)(1 + sin 2 pi t)``."""
    return Forcing(Interval(1.0, 1.0), (
        ForcingTerm(Interval(8.0, 8.0), 3, Interval(1.0, 1.0), Interval(1.0, 1.0)),
        ForcingTerm(Interval(8.0, 8.0), 4, Interval(1.0, 1.0), Interval(1.0, 1.0)),
    ))


def example2() -> Forcing:
    """``12 sin(pi x) sin(2 pi t)``."""
    return Forcing(Interval(1.0, 1.0), (
        ForcingTerm(Interval(12.0, 12.0), 1, Interval(0.0, 0.0), Interval(1.0, 1.0)),
    ))
