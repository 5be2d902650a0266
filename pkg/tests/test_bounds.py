import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from burgers_trap import interval as iv
from burgers_trap.bounds import (RootEquation, WangParams, linear_ode_bound, riccati_tanh_bound,
                                 solve_dominant_root, wang_bound)
from burgers_trap.errors import NoBound
from burgers_trap.interval import Interval

from .oracles import bisect_root, ode_max_and_end

EXPONENTS = [Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4)]


def random_root_equations(n, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d0 = float(rng.uniform(0.0, 100.0))
        count = int(rng.integers(1, 4))
        terms = tuple((float(rng.uniform(0.0, 20.0)), EXPONENTS[int(rng.integers(len(EXPONENTS)))])
                      for _ in range(count))
        out.append((d0, terms))
    return out


def check_root(d0, terms):
    eq = RootEquation(d0, terms)
    r = solve_dominant_root(eq)
    assert eq.rhs(r.hi).hi <= r.hi
    root = bisect_root(d0, [(c, float(p)) for c, p in terms])
    tol = 1e-12 * max(1.0, root)
    return r.lo - tol <= root <= r.hi + tol and r.width <= 1e-9 * max(1.0, root)


def test_root_constant_equation():
    assert solve_dominant_root(RootEquation(1.0)).contains(1.0)


def test_root_sqrt_equation():
    r = solve_dominant_root(RootEquation(2.0, ((1.0, Fraction(1, 2)),)))
    assert r.contains(4.0)


def test_root_golden_ratio_square():
    r = solve_dominant_root(RootEquation(1.0, ((1.0, Fraction(1, 2)),)))
    assert r.contains((3 + math.sqrt(5)) / 2) or abs(r.mid - (3 + math.sqrt(5)) / 2) < 1e-12


def test_root_zero_equation():
    assert solve_dominant_root(RootEquation(0.0, ((0.0, Fraction(1, 2)),))) == Interval(0.0, 0.0)


def test_root_rejects_bad_exponent():
    with pytest.raises(ValueError):
        RootEquation(1.0, ((1.0, Fraction(3, 2)),))


def test_roots_match_bisection_on_200_equations():
    bad = [eq for eq in random_root_equations(200) if not check_root(*eq)]
    assert not bad


def test_wang_zero_sources():
    res = wang_bound(WangParams(1, 0, 1, 0, -1))
    assert res.F.contains(0.0) and res.S.contains(0.0)


def test_wang_case_one():
    res = wang_bound(WangParams(1, 0, 1, 1, -2))
    assert res.case == 1
    assert res.F.contains(0.5) and res.S == Interval(0.0, 0.0)


def test_wang_case_two():
    res = wang_bound(WangParams(1, 0, 1, 4, -1))
    assert res.case == 2
    assert res.F.contains(3.0) and res.S.contains(1.0)


def test_wang_no_bound_without_decay():
    with pytest.raises(NoBound):
        wang_bound(WangParams(0, 0, 1, 1, 1))


pos = st.floats(0.01, 50.0)


@given(pos, pos, pos, pos, st.floats(-50.0, -0.01), st.floats(0.0, 10.0))
def test_wang_monotone_in_D_and_B(A, B, C, D, E, bump):
    base = wang_bound(WangParams(A, B, C, D, E))
    for p in (WangParams(A, B, C, D + bump, E), WangParams(A, B + bump, C, D, E)):
        more = wang_bound(p)
        if more.case == base.case:
            assert more.F.hi >= base.F.lo


def test_linear_initial_time():
    assert linear_ode_bound(iv.PI * iv.PI, 0, 1, 0).end.contains(1.0)


def test_linear_closed_form():
    cb = linear_ode_bound(1, 1, 0, iv.log(Interval(2, 2)))
    assert cb.end.contains(0.5) or abs(cb.end.mid - 0.5) < 1e-15
    assert cb.end.hi >= 0.5


def test_linear_growth():
    cb = linear_ode_bound(-1, 0, 1, 1)
    assert cb.end.lo <= math.e <= cb.end.hi
    assert cb.sup.hi >= math.e


def test_linear_zero_rate_limit():
    cb = linear_ode_bound(0, 2, 1, 3)
    assert cb.end.contains(7.0)


def test_riccati_equilibrium_is_constant():
    for t in (0.0, 0.1, 1.0, 10.0):
        cb = riccati_tanh_bound(1, 1, 1, t)
        assert cb.end.contains(1.0) and cb.end.width < 1e-12


def test_riccati_no_source():
    assert riccati_tanh_bound(1, 0, 1, 1).end.contains(0.5)


def test_riccati_large_time_limit():
    cb = riccati_tanh_bound(1, 4, 0, 40)
    assert abs(cb.end.hi - 2.0) < 1e-12 and cb.end.hi >= 2.0 - 1e-15


def _draws(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield (float(rng.uniform(-2, 20)), float(rng.uniform(0, 20)),
               float(rng.uniform(0, 10)), float(rng.uniform(0, 1)))


def linear_dominates(a, b, z0, t):
    cb = linear_ode_bound(a, b, z0, t)
    end, top = ode_max_and_end(lambda z: -a * z + b, z0, t)
    tol = 1e-9 * max(1.0, abs(end), abs(top))
    return end <= cb.end.hi + tol and top <= cb.sup.hi + tol


def riccati_dominates(C, D, z0, t):
    cb = riccati_tanh_bound(C, D, z0, t)
    end, top = ode_max_and_end(lambda z: -C * z * z + D, z0, t)
    tol = 1e-9 * max(1.0, abs(end), abs(top))
    return end <= cb.end.hi + tol and top <= cb.sup.hi + tol


def test_linear_bound_dominates_ode_solutions():
    assert all(linear_dominates(*d) for d in _draws(200, 11))


def test_riccati_bound_dominates_ode_solutions():
    assert all(riccati_dominates(abs(a) + 0.01, b, z0, t) for a, b, z0, t in _draws(200, 12))


@given(st.floats(0.01, 10), st.floats(0, 10), st.floats(0, 5))
def test_riccati_sup_formula(C, D, z0):
    cb = riccati_tanh_bound(C, D, z0, 2.0)
    assume(cb.end.is_finite())
    assert cb.sup.hi >= min(z0, cb.end.hi) and cb.sup.hi <= max(z0, math.sqrt(D / C)) * (1 + 1e-9) + 1e-12
