import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from burgers_trap.fem import (Mesh, assemble, diagonalize, galerkin_error_bounds, nonlinear_term,
                              residual_widths)
from burgers_trap.forcing import Forcing, example2
from burgers_trap.interval import PI, Interval, IntervalVector
from burgers_trap.radii import trapping_radii

from .oracles import interpolation_errors

ZERO_F = Forcing(1.0, ())


def exact_matrices(k):
    n = k - 1
    M = [[Fraction(0)] * n for _ in range(n)]
    K = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        M[i][i], K[i][i] = Fraction(2, 3 * k), Fraction(2 * k)
        if i + 1 < n:
            M[i][i + 1] = M[i + 1][i] = Fraction(1, 6 * k)
            K[i][i + 1] = K[i + 1][i] = Fraction(-k)
    return M, K


def check_assembly(k):
    M, K = assemble(Mesh(k))
    Me, Ke = exact_matrices(k)
    n = k - 1
    ok = all(M[i, j].contains(Me[i][j]) and K[i, j].contains(Ke[i][j])
             for i in range(n) for j in range(n))
    tight = np.all(M.hi - M.lo <= 2 * np.spacing(M.mid)) and np.array_equal(K.lo, K.hi)
    return ok and tight


@pytest.mark.parametrize("k", [2, 3, 4, 7, 8, 16, 33, 64])
def test_assembly_exact_rationals(k):
    assert check_assembly(k)


def test_assembly_small_cases():
    M, K = assemble(Mesh(2))
    assert M[0, 0].contains(Fraction(1, 3)) and K[0, 0] == Interval(4, 4)
    M, K = assemble(Mesh(4))
    assert M[1, 1].contains(Fraction(1, 6)) and M[0, 1].contains(Fraction(1, 24))
    assert K[1, 1] == Interval(8, 8) and K[0, 1] == Interval(-4, -4)
    assert np.array_equal(M.lo, M.lo.T) and np.array_equal(K.hi, K.hi.T)


def test_nonlinear_term_examples():
    assert np.all(nonlinear_term(np.zeros(5), Mesh(6)).mag == 0.0)
    N = nonlinear_term([1.0, 1.0], Mesh(3))
    assert N[0].contains(-6.0) and N[1].contains(6.0)


def trilinear_sum(alpha, mesh):
    """``sum_m alpha_m (u u_x, v^m)``, i.e. ``-(h/6) alpha . N(alpha)``."""
    N = nonlinear_term(IntervalVector.point(alpha), mesh)
    return (IntervalVector.point(alpha) * N).sum() * (-mesh.h / 6)


def trilinear_cancels(count=500, seed=3):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        k = int(rng.integers(3, 65))
        alpha = rng.normal(scale=float(rng.uniform(0.1, 10)), size=k - 1)
        if not trilinear_sum(alpha, Mesh(k)).contains(0.0):
            return False
    return True


def test_trilinear_cancellation_500_random():
    assert trilinear_cancels()


def test_diagonalize_k2():
    M, K = assemble(Mesh(2))
    A = diagonalize(M, K).A
    assert A[0, 0].contains(-12.0)


def discrete_eigs(k):
    h = 1.0 / k
    c = np.cos(np.arange(1, k) * np.pi * h)
    return -(6.0 / h ** 2) * (1 - c) / (2 + c)


@pytest.mark.parametrize("k", [8, 16, 32])
def test_diagonalize_spectrum(k):
    mesh = Mesh(k)
    M, K = assemble(mesh)
    basis = diagonalize(M, K, mesh)
    d = np.diagonal(basis.A.mid)
    assert np.all(np.diff(np.abs(d)) > 0)
    assert abs(abs(d[0]) - math.pi ** 2) < 0.25 * math.pi ** 2
    exact = discrete_eigs(k)
    assert np.all(np.diagonal(basis.A.lo) <= exact + 1e-9 * np.abs(exact))
    assert np.all(exact - 1e-9 * np.abs(exact) <= np.diagonal(basis.A.hi))
    # the float eigendecomposition's diagonal lies in the interval A
    assert np.all((np.diagonal(basis.A.lo) <= basis.eigenvalues) & (basis.eigenvalues <= np.diagonal(basis.A.hi)))
    off = basis.A.mag - np.diag(np.diagonal(basis.A.mag))
    assert off.max() < 1e-6 * abs(d[-1])
    assert np.allclose(np.linalg.norm(basis.B, axis=0), 1.0, atol=1e-14)
    assert np.all(basis.w_norms_L2.lo >= 0) and np.all(basis.w_norms_H1.lo >= 0)


def test_galerkin_bounds_formulae():
    h1, l2 = galerkin_error_bounds(0, 0.125)
    assert h1.hi == 0 and l2.hi == 0
    h1, l2 = galerkin_error_bounds(PI * PI / math.sqrt(2), Interval(0.125, 0.125))
    assert h1.lo - 1e-15 <= math.pi / (8 * math.sqrt(2)) <= h1.hi + 1e-15
    assert l2.contains((h1 * 0.125 / PI).mid)


def galerkin_dominates(l, k):
    R3 = (l * math.pi) ** 2 / math.sqrt(2)
    h1, l2 = galerkin_error_bounds(Interval(R3, R3 * (1 + 1e-15)), Mesh(k).h)
    e_h1, e_l2 = interpolation_errors(l, k)
    return e_h1 <= h1.hi and e_l2 <= l2.hi


@pytest.mark.parametrize("k", [8, 16, 32])
@pytest.mark.parametrize("l", [1, 2, 3, 4, 5])
def test_galerkin_bounds_dominate_projection_errors(l, k):
    assert galerkin_dominates(l, k)


def ones_bounds(v=1.0):
    return SimpleNamespace(**{f"M{j}": Interval(v, v) for j in range(1, 6)})


def test_residual_widths_zero():
    mesh = Mesh(8)
    M, K = assemble(mesh)
    w = residual_widths(ones_bounds(0.0), diagonalize(M, K, mesh), ZERO_F, None, mesh)
    assert np.all(w.eps.hi == 0.0)


def test_residual_widths_formula():
    mesh = Mesh(64)
    unit = SimpleNamespace(w_norms_L2=IntervalVector.point([1.0]), w_norms_H1=IntervalVector.point([1.0]))
    w = residual_widths(ones_bounds(), unit, ZERO_F, None, mesh)
    h = 1 / 64
    expected = (6 * h / math.pi ** 2) * (0.5 + math.sqrt(h / math.pi) + (2 + 3 * math.sqrt(2)))
    assert w.eps[0].lo <= expected * (1 + 1e-14) and expected * (1 - 1e-14) <= w.eps[0].hi
    assert w.eps[0].width < 1e-12


def test_residual_widths_decrease_with_h():
    unit = SimpleNamespace(w_norms_L2=IntervalVector.point([1.0]), w_norms_H1=IntervalVector.point([1.0]))
    a = residual_widths(ones_bounds(), unit, ZERO_F, None, Mesh(32)).remainder_part[0]
    b = residual_widths(ones_bounds(), unit, ZERO_F, None, Mesh(64)).remainder_part[0]
    assert b.hi < a.lo


def remainder_ratio(k):
    """Max non-forcing width at k over the same at 2k, with the example-2 radii as bounds."""
    radii = trapping_radii(example2())
    bounds = SimpleNamespace(**{f"M{j}": r for j, r in enumerate(radii.as_tuple(), start=1)})
    vals = []
    for kk in (k, 2 * k):
        mesh = Mesh(kk)
        M, K = assemble(mesh)
        w = residual_widths(bounds, diagonalize(M, K, mesh), example2(), None, mesh)
        vals.append(float(np.max(w.remainder_part.hi)))
    return vals[0] / vals[1]


def test_residual_width_scaling():
    assert 1.7 <= remainder_ratio(32) <= 2.3
    assert 1.7 <= remainder_ratio(16) <= 2.3
