import math
from fractions import Fraction

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from burgers_trap.forcing import Forcing, ForcingTerm, NormMode, example1, example2
from burgers_trap.interval import Interval

from .oracles import hat_sine_quad

ZERO = Forcing(1.0, ())


def test_single_mode_norm():
    for mode in NormMode:
        n = example2().norm_bound(0, None, mode)
        assert n.contains(12 / math.sqrt(2)) or abs(n.mid - 12 / math.sqrt(2)) < 1e-13
        assert n.hi >= 12 / math.sqrt(2)


def test_example1_triangle_norm():
    n = example1().norm_bound(0, None, NormMode.TRIANGLE)
    assert n.lo <= 16 * math.sqrt(2) <= n.hi + 1e-13
    assert n.width < 1e-12


def test_zero_forcing():
    assert ZERO.norm_bound(3).hi == 0.0
    assert ZERO.project_node(None, 1, 0.5) == Interval(0.0, 0.0)


def test_project_node_one_interior_node():
    f = Forcing(1.0, (ForcingTerm(1.0, 1),))
    p = f.project_node(None, 1, Interval(0.5, 0.5))
    assert p.lo <= 4 / math.pi ** 2 <= p.hi


def test_project_node_symmetric_mode_vanishes():
    f = Forcing(1.0, (ForcingTerm(1.0, 2),))
    p = f.project_node(None, 1, Interval(0.5, 0.5))
    assert p.contains(0.0) and p.width < 1e-15


def test_qk_pairing():
    f = Forcing(1.0, (ForcingTerm(12.0, 1, 0.0, 1.0),))
    b = f.qk_pairing_bound(None, Interval(1, 1), Interval(0.125, 0.125))
    assert b.lo <= 12 / (64 * math.sqrt(2)) <= b.hi
    assert f.qk_pairing_bound(None, 1.0, 0.25).hi >= 4 * b.lo
    assert ZERO.qk_pairing_bound(None, 1.0, 0.25).hi == 0.0


terms = st.builds(
    ForcingTerm,
    amplitude=st.floats(-20, 20).map(lambda v: Interval(v, v)),
    spatial_mode=st.integers(1, 8),
    c0=st.floats(-2, 2).map(lambda v: Interval(v, v)),
    c1=st.floats(-2, 2).map(lambda v: Interval(v, v)),
    phase=st.floats(0, 1).map(lambda v: Interval(v, v)),
)


@given(st.lists(terms, min_size=1, max_size=4), st.integers(0, 4))
def test_orthogonal_below_triangle(ts, order):
    f = Forcing(1.0, tuple(ts))
    assert f.norm_bound(order, None, "orthogonal").lo <= f.norm_bound(order, None, "triangle").hi


@given(terms, st.integers(1, 4))
def test_derivative_scaling_single_mode(term, n):
    f = Forcing(1.0, (term,))
    base = f.norm_bound(0)
    scaled = f.norm_bound(n)
    factor = (term.spatial_mode * math.pi) ** n
    assert scaled.lo <= base.hi * factor * (1 + 1e-12) and scaled.hi >= base.lo * factor * (1 - 1e-12)


@given(terms, st.floats(0, 1))
def test_full_period_window_sup(term, start):
    f = Forcing(1.0, (term,))
    window = Interval(start, start + 1.0)
    expected = abs(term.c0.mid) + abs(term.c1.mid)
    s = f.temporal_sup(term, window)
    assert s.hi >= expected - 1e-12
    # ``|c0 + c1 sin|`` reaches |c0| + |c1| over a full period
    assert s.hi <= expected * (1 + 1e-9) + 1e-12


@given(terms, st.floats(0, 1), st.floats(0.001, 0.3))
def test_window_range_contains_samples(term, t0, dt):
    f = Forcing(1.0, (term,))
    r = f.temporal_range(term, Interval(t0, t0 + dt))
    for t in np.linspace(t0, t0 + dt, 17):
        s = term.c0.mid + term.c1.mid * math.sin(2 * math.pi * (t + term.phase.mid))
        assert r.lo - 1e-12 <= s <= r.hi + 1e-12


@given(st.integers(1, 9), st.integers(3, 40), st.data())
def test_project_node_matches_quadrature(mode, k, data):
    m = data.draw(st.integers(1, k - 1))
    h = Interval.from_fraction(Fraction(1, k))
    exact = hat_sine_quad(mode, m, 1.0 / k)
    got = Forcing.hat_sine_integral(mode, m, h)
    assert got.lo - 1e-13 <= exact <= got.hi + 1e-13


def test_temporal_taylor_first_derivative():
    f = example2()
    term = f.terms[0]
    c = f.temporal_taylor(term, Interval(0.1, 0.1), 2)
    t = 0.1
    assert c[0].contains(math.sin(2 * math.pi * t)) or abs(c[0].mid - math.sin(2 * math.pi * t)) < 1e-14
    assert abs(c[1].mid - 2 * math.pi * math.cos(2 * math.pi * t)) < 1e-12
    assert abs(c[2].mid + (2 * math.pi) ** 2 * math.sin(2 * math.pi * t) / 2) < 1e-11
