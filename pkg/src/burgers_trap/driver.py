"""One forcing period of the rigorous scheme, the periodic-orbit check and the
float reference integrator used only as a test oracle.

Each step computes Sobolev bounds over the step, the residual widths, a
rough enclosure, the inclusion step and endpoint bounds, then tightens the
two lowest norms from the computed coefficient sets.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import interval as iv
from .errors import CertificationError, ConfigError
from .fem import (DiagonalBasis, Mesh, assemble, diagonalize, galerkin_error_bounds,
                  residual_widths)
from .forcing import Forcing, NormMode
from .inclusion import InclusionProblem, LohnerSet, inclusion_step, rough_enclosure
from .interval import Interval, IntervalVector
from .local_bounds import StepBounds, refine, step_bounds
from .radii import ParamGrid, TrappingRadii, trapping_radii

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitialSet:
    """How ``P0`` is chosen, in diagonal coordinates.

    ``reference``: a box around the reference orbit at ``t = 0`` with
    absolute radii ``leading_radius`` and ``tail_radius`` plus
    ``relative`` times the magnitude of each coordinate.
    ``explicit``: the box ``[beta_lo, beta_hi]`` as given.
    """

    kind: str = "reference"
    leading_radius: float = 0.12
    tail_radius: float = 0.005
    relative: float = 0.0
    beta_lo: tuple[float, ...] | None = None
    beta_hi: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("reference", "explicit"):
            raise ConfigError("initial.kind must be 'reference' or 'explicit'")
        if self.kind == "explicit":
            if self.beta_lo is None or self.beta_hi is None or len(self.beta_lo) != len(self.beta_hi):
                raise ConfigError("explicit initial set needs beta_lo and beta_hi of equal length")
        if min(self.leading_radius, self.tail_radius, self.relative) < 0:
            raise ConfigError("initial radii must be nonnegative")


@dataclass(frozen=True)
class RunConfig:
    forcing: Forcing
    k: int = 32
    steps_per_period: int = 512
    leading_count: int = 8
    taylor_order: int = 4
    norm_mode: NormMode = NormMode.TRIANGLE
    grid: ParamGrid = field(default_factory=ParamGrid)
    initial: InitialSet = field(default_factory=InitialSet)
    use_global_radii_init: bool = True
    reoptimize_bounds: bool = True
    refine_bounds: bool = True
    check_radii: bool = False
    warmup_periods: int = 4
    reference_substeps: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "norm_mode", NormMode(self.norm_mode))
        if not isinstance(self.k, int) or self.k < 3:
            raise ConfigError("k must be an integer of at least 3")
        if self.steps_per_period < 1:
            raise ConfigError("steps_per_period must be positive")
        if not 0 < self.leading_count < self.k - 1:
            raise ConfigError("leading_count must lie in 1..k-2")
        if self.taylor_order < 1:
            raise ConfigError("taylor_order must be positive")
        if self.warmup_periods < 0:
            raise ConfigError("warmup_periods must be nonnegative")

    @property
    def step(self) -> Interval:
        return self.forcing.period * Fraction(1, self.steps_per_period)

    def time(self, i: int) -> Interval:
        return self.forcing.period * Fraction(i, self.steps_per_period)


# reference integrator ----------------------------------------------------------------
def _quad_field_float(a: np.ndarray) -> np.ndarray:
    z = np.zeros(a.shape[:-1] + (1,))
    ad = np.concatenate([z, a[..., :-1]], axis=-1)
    au = np.concatenate([a[..., 1:], z], axis=-1)
    return (a * (ad - au) + ad * ad - au * au) / 6.0


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Float trajectory sampled at the step times of one period."""

    times: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


class ReferenceSolver:
    """Classical RK4 for ``M a' = -K a + (h/6) N(a) + F(t)``; never certified."""

    def __init__(self, cfg: RunConfig, B: np.ndarray | None = None, nonlinear: bool = True):
        self.cfg = cfg
        mesh = Mesh(cfg.k)
        M, K = assemble(mesh)
        self.Minv = np.linalg.inv(M.mid)
        self.K = K.mid
        self.B = B
        self.nonlinear = nonlinear
        f = cfg.forcing
        n = mesh.dim
        self.weights = [f.node_weights(t, n, mesh.h).mid for t in f.terms]
        self.terms = f.terms
        self.period = f.period.mid
        lam = np.max(np.abs(np.linalg.eigvals(self.Minv @ self.K)))
        self.lam_max = float(lam)

    def _forcing(self, t: float) -> np.ndarray:
        out = 0.0
        for w, term in zip(self.weights, self.terms):
            s = term.c0.mid + term.c1.mid * math.sin(2 * math.pi * (t + term.phase.mid) / self.period)
            out = out + w * s
        return out

    def rhs(self, t: float, a: np.ndarray) -> np.ndarray:
        r = -(a @ self.K.T) + self._forcing(t)
        if self.nonlinear:
            r = r + _quad_field_float(a)
        return r @ self.Minv.T

    def substeps(self) -> int:
        if self.cfg.reference_substeps:
            return self.cfg.reference_substeps
        dt = self.period / self.cfg.steps_per_period
        # keep |lambda| dt well inside the RK4 stability region
        return max(1, math.ceil(dt * self.lam_max / 1.0))

    def run(self, a0: np.ndarray, t0: float = 0.0, periods: float = 1.0) -> ReferenceTrajectory:
        n_steps = int(round(periods * self.cfg.steps_per_period))
        sub = self.substeps()
        dt = self.period / self.cfg.steps_per_period / sub
        a = np.array(a0, dtype=float)
        times = [t0]
        out = [a.copy()]
        t = t0
        for i in range(n_steps):
            for _ in range(sub):
                k1 = self.rhs(t, a)
                k2 = self.rhs(t + dt / 2, a + dt / 2 * k1)
                k3 = self.rhs(t + dt / 2, a + dt / 2 * k2)
                k4 = self.rhs(t + dt, a + dt * k3)
                a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                t += dt
            t = t0 + (i + 1) * self.period / self.cfg.steps_per_period
            times.append(t)
            out.append(a.copy())
        alpha = np.array(out)
        beta = np.linalg.solve(self.B, alpha.T).T if self.B is not None else alpha
        return ReferenceTrajectory(np.array(times), alpha, beta)


def reference_solve(cfg: RunConfig, alpha0: np.ndarray | None = None, B: np.ndarray | None = None,
                    periods: float = 1.0, warmup: bool = False) -> ReferenceTrajectory:
    """Float trajectory over ``periods`` periods; ``warmup`` first relaxes onto the orbit."""
    solver = ReferenceSolver(cfg, B)
    a0 = np.zeros(cfg.k - 1) if alpha0 is None else np.asarray(alpha0, dtype=float)
    if warmup and cfg.warmup_periods:
        a0 = solver.run(a0, 0.0, cfg.warmup_periods).alpha[-1]
    return solver.run(a0, 0.0, periods)


# set-up ----------------------------------------------------------------------------
@dataclass(frozen=True)
class Setup:
    mesh: Mesh
    M: object
    K: object
    basis: DiagonalBasis
    problem: InclusionProblem
    radii: TrappingRadii
    P0: LohnerSet
    tail0: IntervalVector
    reference_beta0: np.ndarray | None


def _box(lo, hi) -> IntervalVector:
    return IntervalVector._raw(np.asarray(lo, float), np.asarray(hi, float))


def prepare(cfg: RunConfig, radii: TrappingRadii | None = None) -> Setup:
    mesh = Mesh(cfg.k)
    M, K = assemble(mesh)
    basis = diagonalize(M, K, mesh)
    prob = InclusionProblem.build(basis, mesh, cfg.forcing, cfg.leading_count)
    radii = radii or trapping_radii(cfg.forcing, cfg.grid, cfg.norm_mode)
    m = cfg.leading_count
    ref0 = None
    init = cfg.initial
    if init.kind == "explicit":
        if len(init.beta_lo) != mesh.dim:
            raise ConfigError(f"explicit initial set must have {mesh.dim} coordinates")
        box = _box(init.beta_lo, init.beta_hi)
    else:
        ref0 = reference_solve(cfg, B=basis.B, periods=0, warmup=True).beta[0]
        rad = np.abs(ref0) * init.relative
        rad[:m] += init.leading_radius
        rad[m:] += init.tail_radius
        box = _box(np.nextafter(ref0 - rad, -np.inf), np.nextafter(ref0 + rad, np.inf))
    P0 = LohnerSet.from_box(box[:m])
    tail0 = box[m:]
    return Setup(mesh, M, K, basis, prob, radii, P0, tail0, ref0)


# the period loop ---------------------------------------------------------------------
@dataclass(frozen=True)
class StepRecord:
    index: int
    t: Interval
    bounds: StepBounds
    eps_max: float
    eps_remainder_max: float
    leading: IntervalVector
    tail: IntervalVector
    qk_H1: Interval
    qk_L2: Interval


@dataclass(frozen=True)
class IntegrationResult:
    trace: tuple[StepRecord, ...]
    P: LohnerSet
    tail: IntervalVector
    setup: Setup
    failure: tuple[int, str] | None = None
    seconds: float = 0.0


def _clamp(bounds: StepBounds, radii: TrappingRadii) -> StepBounds:
    """Global trapping radii bound every later norm as well."""
    g = radii.as_tuple()
    pick = lambda x, r: r if r.hi < x.hi else x
    kw = {f"M{j + 1}": pick(bounds.M[j], g[j]) for j in range(5)}
    kw.update({f"R{j + 1}": pick(bounds.R[j], g[j]) for j in range(5)})
    return replace(bounds, **kw)


def _concat(a: IntervalVector, b: IntervalVector) -> IntervalVector:
    return IntervalVector._raw(np.concatenate([a.lo, b.lo]), np.concatenate([a.hi, b.hi]))


def integrate_period(cfg: RunConfig, setup: Setup | None = None, progress=None) -> IntegrationResult:
    """Run the rigorous scheme over one period from ``P0``.

    Failures (no rough enclosure, divergent series, ...) stop the loop and
    are reported in ``failure`` together with the step index.
    """
    start = time.perf_counter()
    setup = setup or prepare(cfg)
    f, mesh, basis = cfg.forcing, setup.mesh, setup.basis
    h = mesh.h
    step = cfg.step
    P, tail = setup.P0, setup.tail0
    R_prev = setup.radii.as_tuple()
    cache = None if cfg.reoptimize_bounds else {}
    trace: list[StepRecord] = []
    failure = None
    for i in range(cfg.steps_per_period):
        t0 = cfg.time(i)
        t1 = cfg.time(i + 1)
        window = Interval(t0.lo, t1.hi)
        try:
            sb = step_bounds(f, R_prev, window, step, cfg.grid, cfg.norm_mode, cache)
            if cfg.use_global_radii_init:
                sb = _clamp(sb, setup.radii)
            widths = residual_widths(sb, basis, f, window, mesh, cfg.norm_mode)
            prob = setup.problem.with_eps(widths.eps)
            W = rough_enclosure(prob, P, tail, t0, step)
            if cfg.refine_bounds:
                # a smaller width keeps W valid, so the widths may be recomputed
                sb = refine(sb, None, setup.M, setup.K, h, window_box=iv.matvec(basis.B, W))
                widths = residual_widths(sb, basis, f, window, mesh, cfg.norm_mode)
                prob = prob.with_eps(widths.eps)
            P, tail, info = inclusion_step(prob, P, tail, t0, step, cfg.taylor_order, W)
            if cfg.refine_bounds:
                end_box = iv.matvec(basis.B, _concat(P.hull(), tail))
                sb = refine(sb, end_box, setup.M, setup.K, h)
        except CertificationError as exc:
            failure = (i, f"{type(exc).__name__}: {exc}")
            log.warning("step %d failed: %s", i, failure[1])
            break
        if not (P.hull().is_finite() and tail.is_finite()):
            failure = (i, "non-finite enclosure")
            break
        R_prev = sb.R
        qk_h1, qk_l2 = galerkin_error_bounds(sb.R3, h)
        trace.append(StepRecord(
            index=i + 1, t=t1, bounds=sb, eps_max=widths.max_upper(),
            eps_remainder_max=float(np.max(widths.remainder_part.hi)),
            leading=P.hull(), tail=tail, qk_H1=qk_h1, qk_L2=qk_l2))
        if progress is not None:
            progress(i + 1, cfg.steps_per_period)
    return IntegrationResult(tuple(trace), P, tail, setup, failure, time.perf_counter() - start)


# the periodic check ----------------------------------------------------------------------
@dataclass(frozen=True)
class Certificate:
    verdict: str                      # periodic_verified | not_verified | failed
    radii: TrappingRadii
    trace: tuple[StepRecord, ...]
    P0: IntervalVector
    tail0: IntervalVector
    final_leading: IntervalVector | None
    final_tail: IntervalVector | None
    failure: tuple[int, str] | None = None
    reason: str = ""
    seconds: float = 0.0
    config: dict = field(default_factory=dict)


def verify_periodic(result: IntegrationResult, cfg: RunConfig) -> Certificate:
    """Check ``P^n`` within ``P^0`` (and, with ``check_radii``, the radii too)."""
    setup = result.setup
    P0 = setup.P0.hull()
    common = dict(radii=setup.radii, trace=result.trace, P0=P0, tail0=setup.tail0,
                  seconds=result.seconds, config=config_echo(cfg))
    if result.failure is not None:
        return Certificate("failed", final_leading=None, final_tail=None,
                           failure=result.failure, reason=result.failure[1], **common)
    final = result.P.hull()
    ok_lead = P0.contains(final)
    ok_tail = setup.tail0.contains(result.tail)
    reasons = []
    if not ok_lead:
        reasons.append("leading set leaves P0")
    if not ok_tail:
        reasons.append("tail intervals leave P0")
    ok = ok_lead and ok_tail
    if cfg.check_radii and result.trace:
        last = result.trace[-1].bounds.R
        start = setup.radii.as_tuple()
        if any(a.hi > b.hi for a, b in zip(last, start)):
            ok = False
            reasons.append("final radii exceed the initial radii")
    verdict = "periodic_verified" if ok else "not_verified"
    return Certificate(verdict, final_leading=final, final_tail=result.tail,
                       reason="; ".join(reasons), **common)


def config_echo(cfg: RunConfig) -> dict:
    f = cfg.forcing
    return {
        "k": cfg.k, "steps_per_period": cfg.steps_per_period,
        "leading_count": cfg.leading_count, "taylor_order": cfg.taylor_order,
        "norm_mode": cfg.norm_mode.value, "grid": asdict(cfg.grid),
        "initial": asdict(cfg.initial),
        "use_global_radii_init": cfg.use_global_radii_init,
        "reoptimize_bounds": cfg.reoptimize_bounds, "refine_bounds": cfg.refine_bounds,
        "check_radii": cfg.check_radii, "warmup_periods": cfg.warmup_periods,
        "forcing": {"period": [f.period.lo, f.period.hi], "terms": [
            {"amplitude": [t.amplitude.lo, t.amplitude.hi], "spatial_mode": t.spatial_mode,
             "c0": [t.c0.lo, t.c0.hi], "c1": [t.c1.lo, t.c1.hi], "phase": [t.phase.lo, t.phase.hi]}
            for t in f.terms]},
    }


# containment oracle ---------------------------------------------------------------------
def contained(result: IntegrationResult, beta: np.ndarray) -> int | None:
    """First step index whose sets miss the trajectory ``beta`` (rows at step times)."""
    m = result.setup.P0.dim
    if not (result.setup.P0.hull().contains(beta[0, :m]) and result.setup.tail0.contains(beta[0, m:])):
        return 0
    for rec in result.trace:
        row = beta[rec.index]
        if not (rec.leading.contains(row[:m]) and rec.tail.contains(row[m:])):
            return rec.index
    return None


def sample_initial_points(setup: Setup, count: int, seed: int = 0) -> np.ndarray:
    """Random points of ``P0`` in diagonal coordinates (test helper only)."""
    rng = np.random.default_rng(seed)
    box = _concat(setup.P0.hull(), setup.tail0)
    u = rng.random((count, len(box)))
    return box.lo + u * (box.hi - box.lo)
