import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from burgers_trap.bounds import linear_ode_bound, riccati_tanh_bound
from burgers_trap.driver import ReferenceSolver, RunConfig
from burgers_trap.fem import Mesh, assemble
from burgers_trap.forcing import Forcing, example2
from burgers_trap.interval import PI, Interval, IntervalVector
from burgers_trap.local_bounds import (METHODS, LocalInputs, StepBounds, _evaluate, local_H1, local_L2,
                                       refine, step_bounds)
from burgers_trap.radii import ParamGrid, trapping_radii

ZERO = Forcing(1.0, ())
GRID = ParamGrid(resolution=32)


def test_L2_initial_time():
    M1, R1 = local_L2(ZERO, 1.0, 0.0)
    assert R1.contains(1.0)


def test_L2_pure_decay():
    _, R1 = local_L2(ZERO, 1.0, 0.1)
    assert R1.lo <= math.exp(-math.pi ** 2 * 0.1) <= R1.hi


def test_L2_equilibrium_is_trapping():
    f = example2()
    r = f.norm_bound(0) / (PI * PI)
    M1, R1 = local_L2(f, r, 0.05)
    assert R1.hi <= r.hi * (1 + 1e-12) and M1.hi <= r.hi * (1 + 1e-12)


def test_H1_no_sources_decays():
    M2, R2 = local_H1(ZERO, Interval(0, 0), 2.0, 0.01, GRID)
    assert R2.hi <= 2.0 and M2.hi <= 2.0 * (1 + 1e-12)


def _inputs(level):
    f = (Interval(3.0, 3.0), Interval(9.0, 9.0), Interval(30.0, 30.0), Interval(90.0, 90.0))
    M = {1: Interval(0.8, 0.8), 2: Interval(3.0, 3.0), 3: Interval(15.0, 15.0), 4: Interval(90.0, 90.0)}
    return LocalInputs(f, {k: v for k, v in M.items() if k < level})


def test_H2_spot_check_linear_assembly():
    x = _inputs(3)
    a, b = 0.4, 0.7
    # exp_H2_a by hand: rate pi^2 (2-a-b), source (5^4 3^3/2^4) R2^4 R1^2/b^3 + ||f_x||^2/a
    rate = math.pi ** 2 * (2 - a - b)
    src = 5 ** 4 * 27 / 16 * 3.0 ** 4 * 0.8 ** 2 / b ** 3 + 81 / a
    got = _evaluate(METHODS[3][0], x, (a, b), Interval(4.0, 4.0), Interval(0.01, 0.01))
    ref = linear_ode_bound(rate, src, 4.0, 0.01)
    assert got.end.intersects(ref.end)
    assert abs(got.end.mid / ref.end.mid - 1) < 1e-12


def test_H3_spot_check_linear_assembly():
    x = _inputs(4)
    a, b = 0.5, 0.6
    rate = math.pi ** 2 * (2 - a - b)
    src = 7 ** 4 * 27 / 16 * 0.8 ** 2 * 3.0 ** 2 * 15.0 ** 2 / a ** 3 + 900 / b
    got = _evaluate(METHODS[4][1], x, (a, b), Interval(100.0, 100.0), Interval(0.01, 0.01))
    ref = linear_ode_bound(rate, src, 100.0, 0.01)
    assert abs(got.end.mid / ref.end.mid - 1) < 1e-12


def test_H4_spot_check_linear_assembly():
    x = _inputs(5)
    a, b, g = 0.3, 0.5, 0.4
    rate = math.pi ** 2 * (2 - a - b - g)
    src = 90.0 ** 2 / a + 200 * 3.0 * 15.0 * 90.0 ** 2 / b + 27 * 11 ** 4 / 16 * 0.8 ** 2 * 9.0 * 90.0 ** 2 / g ** 3
    got = _evaluate(METHODS[5][0], x, (a, b, g), Interval(1e4, 1e4), Interval(0.01, 0.01))
    ref = linear_ode_bound(rate, src, 1e4, 0.01)
    assert abs(got.end.mid / ref.end.mid - 1) < 1e-12


def test_tanh_equilibrium_constant():
    x = _inputs(5)
    p = (0.3, 0.5, 0.4)
    C = (2 - sum(p)) / 90.0 ** 2
    D = 90.0 ** 2 / p[0] + 200 * 3.0 * 15.0 * 90.0 ** 2 / p[1] + 27 * 11 ** 4 / 16 * 0.8 ** 2 * 9.0 * 90.0 ** 2 / p[2] ** 3
    z_eq = math.sqrt(D / C)
    got = _evaluate(METHODS[5][1], x, p, Interval(z_eq, z_eq), Interval(0.5, 0.5))
    assert abs(got.end.mid / z_eq - 1) < 1e-9
    assert abs(riccati_tanh_bound(C, D, z_eq, 0.5).end.mid / z_eq - 1) < 1e-9


@pytest.fixture(scope="module")
def ex2_radii():
    return trapping_radii(example2(), GRID)


def test_window_dominates_endpoint(ex2_radii):
    sb = step_bounds(example2(), ex2_radii.as_tuple(), (0.1, 0.1 + 1 / 64), 1 / 64, GRID)
    for M, R in zip(sb.M, sb.R):
        assert M.hi >= R.hi


def test_zero_step_contains_inputs(ex2_radii):
    R_in = ex2_radii.as_tuple()
    sb = step_bounds(example2(), R_in, (0.25, 0.25), 0.0, GRID)
    for R, r in zip(sb.R, R_in):
        assert R.hi >= r.hi * (1 - 1e-12)


def test_global_radii_stay_trapped(ex2_radii):
    # the window sup of a trapping radius is not larger than the radius itself (up to method slack)
    sb = step_bounds(example2(), ex2_radii.as_tuple(), (0.0, 1 / 512), 1 / 512, GRID)
    assert sb.R1.hi <= ex2_radii.R1.hi * (1 + 1e-9)


def base_bounds(R3=PI * PI):
    big = Interval(10.0, 10.0)
    return StepBounds(big, big, R3, big, big, big, big, R3, big, big)


def test_refine_example():
    M, K = assemble(Mesh(2))
    out = refine(base_bounds(), IntervalVector.point([0.0]), M, K, Interval(0.5, 0.5))
    assert out.R1.contains(0.25)
    assert out.R2.hi <= 10.0


def test_refine_huge_set_keeps_bounds():
    M, K = assemble(Mesh(2))
    out = refine(base_bounds(), IntervalVector.point([1e6]), M, K, Interval(0.5, 0.5))
    assert out.R1 == Interval(10.0, 10.0) and out.R2 == Interval(10.0, 10.0)


def test_refine_zero_set_zero_bounds():
    M, K = assemble(Mesh(4))
    out = refine(base_bounds(Interval(0, 0)), IntervalVector.point([0.0] * 3), M, K, Interval(0.25, 0.25))
    assert out.R1.hi == 0.0 and out.R2.hi == 0.0


@given(st.lists(st.floats(-3, 3), min_size=7, max_size=7), st.floats(0, 0.5))
def test_refine_idempotent_and_monotone(vals, pad):
    M, K = assemble(Mesh(8))
    box = IntervalVector(np.array(vals) - pad, np.array(vals) + pad)
    b = base_bounds(Interval(20.0, 20.0))
    once = refine(b, box, M, K, Mesh(8).h, window_box=box)
    twice = refine(once, box, M, K, Mesh(8).h, window_box=box)
    assert once == twice
    for new, old in zip(once.M + once.R, b.M + b.R):
        assert new.hi <= old.hi


def fem_norms(alpha, M, K):
    return (math.sqrt(max(alpha @ M @ alpha, 0.0)), math.sqrt(max(alpha @ K @ alpha, 0.0)))


def reference_dominated(steps=64, k=16):
    """Chain step bounds over ``steps`` steps and compare with a fine FEM trajectory."""
    f = example2()
    cfg = RunConfig(f, k=k, steps_per_period=steps, reference_substeps=64)
    solver = ReferenceSolver(cfg)
    a0 = solver.run(np.zeros(k - 1), 0.0, 4).alpha[-1]
    traj = solver.run(a0, 0.0, 1)
    Mm, Km = (m.mid for m in assemble(Mesh(k)))
    radii = trapping_radii(f, GRID)
    n1, n2 = fem_norms(a0, Mm, Km)
    R = [Interval(n1, n1) * 1.02, Interval(n2, n2) * 1.02, *radii.as_tuple()[2:]]
    fine = ReferenceSolver(RunConfig(f, k=k, steps_per_period=steps * 8, reference_substeps=8))
    dense = fine.run(a0, 0.0, 1).alpha
    cache = {}
    for i in range(steps):
        sb = step_bounds(f, R, (i / steps, (i + 1) / steps), 1 / steps, GRID, cache=cache)
        e1, e2 = fem_norms(traj.alpha[i + 1], Mm, Km)
        if e1 > sb.R1.hi or e2 > sb.R2.hi:
            return False
        for row in dense[8 * i: 8 * i + 9]:
            w1, w2 = fem_norms(row, Mm, Km)
            if w1 > sb.M1.hi or w2 > sb.M2.hi:
                return False
        R = sb.R
    return True


def test_local_bounds_dominate_reference_norms():
    assert reference_dominated()
