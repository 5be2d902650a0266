"""Independent oracles used by the tests. None of this is certified."""

import math
from fractions import Fraction

import numpy as np
from scipy.integrate import quad, solve_ivp


def bisect_root(d0, terms, tol=1e-12):
    """Positive root of ``x = d0 + sum c x**p`` by plain bisection."""
    g = lambda x: x - d0 - sum(c * x ** p for c, p in terms)
    hi = max(1.0, 2 * d0)
    while g(hi) <= 0:
        hi *= 2
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def ode_max_and_end(rhs, z0, t):
    """High-accuracy solution of a scalar ODE: (value at t, max over [0, t])."""
    if t == 0:
        return z0, z0
    sol = solve_ivp(lambda s, z: [rhs(z[0])], (0.0, t), [z0], method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    ts = np.linspace(0.0, t, 401)
    zs = sol.sol(ts)[0]
    return float(sol.y[0, -1]), float(np.max(zs))


def hat(x, m, h):
    return np.maximum(0.0, 1.0 - np.abs(x / h - m))


def hat_sine_quad(k_mode, m, h):
    """``int v^m sin(k pi x) dx`` by adaptive quadrature on the hat support."""
    f = lambda x: hat(x, m, h) * math.sin(k_mode * math.pi * x)
    a, b = (m - 1) * h, (m + 1) * h
    return quad(f, a, m * h, epsabs=1e-14)[0] + quad(f, m * h, b, epsabs=1e-14)[0]


def interpolation_errors(l, k):
    """H1_0 and L2 norms of ``u - I_k u`` for ``u = sin(l pi x)``.

    Nodal interpolation is the H1_0 projection for this basis, so this is
    the Galerkin projection error. Integrals are evaluated per element.
    """
    h = 1.0 / k
    e_h1 = 0.0
    e_l2 = 0.0
    w = l * math.pi
    for i in range(k):
        a, b = i * h, (i + 1) * h
        ua, ub = math.sin(w * a), math.sin(w * b)
        slope = (ub - ua) / h
        e_h1 += quad(lambda x: (w * math.cos(w * x) - slope) ** 2, a, b, epsabs=1e-15)[0]
        e_l2 += quad(lambda x: (math.sin(w * x) - ua - slope * (x - a)) ** 2, a, b, epsabs=1e-15)[0]
    return math.sqrt(e_h1), math.sqrt(e_l2)


def rational_inverse(rows):
    """Exact Gauss-Jordan inverse of a square matrix of Fractions."""
    n = len(rows)
    a = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        p = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [r[n:] for r in a]
