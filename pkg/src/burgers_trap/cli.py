"""Command line front end: ``burgers-trap {radii,integrate,verify-periodic,reference}``.

Exit codes: 0 success or verified, 1 not verified, 2 configuration error,
3 numerical failure. Artifacts are written to a temporary file first and
renamed into place, so a failed run never leaves half-written files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .driver import (Certificate, InitialSet, IntegrationResult, RunConfig, config_echo,
                     integrate_period, prepare, reference_solve, verify_periodic)
from .errors import CertificationError, ConfigError
from .forcing import Forcing, NormMode, example1, example2, forcing_from_records
from .interval import Interval
from .radii import ParamGrid, TrappingRadii, trapping_radii

log = logging.getLogger("burgers_trap")

EXIT_OK, EXIT_NOT_VERIFIED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

PRESETS = {"example1": example1, "example2": example2}

_TOP_KEYS = {
    "forcing", "k", "steps_per_period", "leading_count", "taylor_order", "norm_mode",
    "grid", "initial", "use_global_radii_init", "reoptimize_bounds", "refine_bounds",
    "check_radii", "warmup_periods", "reference_substeps", "threads", "output",
}
_INT_KEYS = ("k", "steps_per_period", "leading_count", "taylor_order", "warmup_periods")
_BOOL_KEYS = ("use_global_radii_init", "reoptimize_bounds", "refine_bounds", "check_radii")
_GRID_KEYS = {"resolution", "sweeps", "polish"}
_INITIAL_KEYS = {"kind", "leading_radius", "tail_radius", "relative", "beta_lo", "beta_hi"}
_OUTPUT_KEYS = {"dir", "figures"}
_FORCING_KEYS = {"period", "terms"}
_TERM_KEYS = {"amplitude", "spatial_mode", "c0", "c1", "phase"}


@dataclass(frozen=True)
class CliConfig:
    run: RunConfig
    out_dir: Path
    figures: bool = True
    threads: int = 1


# config parsing ------------------------------------------------------------------
def _reject_unknown(section: str, data: dict, allowed: set):
    if not isinstance(data, dict):
        raise ConfigError(f"{section} must be an object")
    extra = sorted(set(data) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(extra)}")


def _int(name, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{name} must be an integer")
    return v


def _bool(name, v) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"{name} must be true or false")
    return v


def _number(name, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{name} must be a finite number")
    return float(v)


def _interval_value(name, v):
    """A number or a ``[lo, hi]`` pair."""
    if isinstance(v, list):
        if len(v) != 2:
            raise ConfigError(f"{name} must be a number or a [lo, hi] pair")
        lo, hi = _number(name, v[0]), _number(name, v[1])
        if lo > hi:
            raise ConfigError(f"{name} has lo > hi")
        return Interval(lo, hi)
    return _number(name, v)


def _forcing(data) -> Forcing:
    if isinstance(data, str):
        if data not in PRESETS:
            raise ConfigError(f"unknown forcing preset {data!r}; known: {', '.join(PRESETS)}")
        return PRESETS[data]()
    _reject_unknown("forcing", data, _FORCING_KEYS)
    if "terms" not in data or not isinstance(data["terms"], list):
        raise ConfigError("forcing.terms must be a list")
    records = []
    for i, term in enumerate(data["terms"]):
        _reject_unknown(f"forcing.terms[{i}]", term, _TERM_KEYS)
        if "amplitude" not in term or "spatial_mode" not in term:
            raise ConfigError(f"forcing.terms[{i}] needs amplitude and spatial_mode")
        rec = {k: _interval_value(f"forcing.terms[{i}].{k}", v)
               for k, v in term.items() if k != "spatial_mode"}
        rec["spatial_mode"] = _int(f"forcing.terms[{i}].spatial_mode", term["spatial_mode"])
        records.append(rec)
    period = _interval_value("forcing.period", data.get("period", 1.0))
    try:
        return forcing_from_records(period, records)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid forcing: {exc}") from exc


def parse_config(data: dict, norm_mode: str | None = None, threads: int | None = None,
                 out_dir: str | None = None) -> CliConfig:
    """Validate a decoded config document; raises ConfigError before any computation."""
    _reject_unknown("config", data, _TOP_KEYS)
    if "forcing" not in data:
        raise ConfigError("config needs a forcing entry")
    kw = {"forcing": _forcing(data["forcing"])}
    for key in _INT_KEYS:
        if key in data:
            kw[key] = _int(key, data[key])
    for key in _BOOL_KEYS:
        if key in data:
            kw[key] = _bool(key, data[key])
    if data.get("reference_substeps") is not None:
        kw["reference_substeps"] = _int("reference_substeps", data["reference_substeps"])
    mode = norm_mode or data.get("norm_mode", "triangle")
    try:
        kw["norm_mode"] = NormMode(mode)
    except ValueError as exc:
        raise ConfigError(f"norm_mode must be 'triangle' or 'orthogonal', got {mode!r}") from exc
    if "grid" in data:
        g = data["grid"]
        _reject_unknown("grid", g, _GRID_KEYS)
        gkw = {k: _int(f"grid.{k}", g[k]) for k in ("resolution", "sweeps") if k in g}
        if "polish" in g:
            gkw["polish"] = _bool("grid.polish", g["polish"])
        try:
            kw["grid"] = ParamGrid(**gkw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "initial" in data:
        ini = data["initial"]
        _reject_unknown("initial", ini, _INITIAL_KEYS)
        ikw = {}
        if "kind" in ini:
            ikw["kind"] = ini["kind"]
        for k in ("leading_radius", "tail_radius", "relative"):
            if k in ini:
                ikw[k] = _number(f"initial.{k}", ini[k])
        for k in ("beta_lo", "beta_hi"):
            if k in ini:
                if not isinstance(ini[k], list):
                    raise ConfigError(f"initial.{k} must be a list of numbers")
                ikw[k] = tuple(_number(f"initial.{k}", v) for v in ini[k])
        kw["initial"] = InitialSet(**ikw)
    output = data.get("output", {})
    _reject_unknown("output", output, _OUTPUT_KEYS)
    figures = _bool("output.figures", output.get("figures", True))
    n_threads = threads if threads is not None else _int("threads", data.get("threads", 1))
    if n_threads < 1:
        raise ConfigError("threads must be at least 1")
    target = out_dir or output.get("dir", "out")
    if not isinstance(target, str):
        raise ConfigError("output.dir must be a string")
    try:
        run = RunConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return CliConfig(run, Path(target), figures, n_threads)


def load_config(path, **overrides) -> CliConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(data, **overrides)


# serialization ---------------------------------------------------------------------
def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def interval_doc(x: Interval) -> dict:
    """Decimal endpoints (round-trip repr) plus their exact hex form."""
    return {"lo": _num(x.lo), "hi": _num(x.hi), "hex": [float(x.lo).hex(), float(x.hi).hex()]}


def _box_doc(v) -> dict:
    return {"lo": [_num(a) for a in v.lo], "hi": [_num(b) for b in v.hi]}


def radii_doc(radii: TrappingRadii, mode: NormMode) -> dict:
    doc = {"norm_mode": NormMode(mode).value, "radii": {}, "methods": {}}
    S = {2: radii.S2, 3: radii.S3, 4: radii.S4, 5: radii.S5}
    for j, R in enumerate(radii.as_tuple(), start=1):
        entry = {"value": interval_doc(R), "method": radii.method_used.get(f"R{j}")}
        if j in S:
            entry["S"] = interval_doc(S[j])
        doc["radii"][f"R{j}"] = entry
    for level, results in radii.methods.items():
        doc["methods"][level] = [
            {"name": r.name, "radius": interval_doc(r.radius), "params": [float(p) for p in r.params],
             "certified": bool(r.certified)} for r in results]
    doc["all_certified"] = radii.all_certified()
    return doc


def _step_doc(rec) -> dict:
    b = rec.bounds
    return {
        "index": rec.index, "t": interval_doc(rec.t),
        "M": [interval_doc(m) for m in b.M], "R": [interval_doc(r) for r in b.R],
        "eps_max": _num(rec.eps_max), "eps_remainder_max": _num(rec.eps_remainder_max),
        "leading": _box_doc(rec.leading), "tail": _box_doc(rec.tail),
        "qk_H1": interval_doc(rec.qk_H1), "qk_L2": interval_doc(rec.qk_L2),
    }


def certificate_doc(cert: Certificate, threads: int) -> dict:
    return {
        "verdict": cert.verdict,
        "reason": cert.reason,
        "failure": None if cert.failure is None else {"step": cert.failure[0], "reason": cert.failure[1]},
        "radii": radii_doc(cert.radii, NormMode(cert.config["norm_mode"]))["radii"],
        "P0": {"leading": _box_doc(cert.P0), "tail": _box_doc(cert.tail0)},
        "final": None if cert.final_leading is None else {
            "leading": _box_doc(cert.final_leading), "tail": _box_doc(cert.final_tail)},
        "seconds": cert.seconds,
        "threads": threads,
        "config": cert.config,
        "steps": [_step_doc(rec) for rec in cert.trace],
    }


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not trace:
        w.writerow(["step"])
        return buf.getvalue()
    m = len(trace[0].leading)
    head = ["step", "t_lo", "t_hi"]
    head += [f"M{j}" for j in range(1, 6)] + [f"R{j}" for j in range(1, 6)]
    for j in range(1, m + 1):
        head += [f"beta{j}_lo", f"beta{j}_hi"]
    head += ["tail_width_max", "eps_max", "eps_remainder_max"]
    w.writerow(head)
    for rec in trace:
        row = [rec.index, repr(rec.t.lo), repr(rec.t.hi)]
        row += [repr(x.hi) for x in rec.bounds.M] + [repr(x.hi) for x in rec.bounds.R]
        for lo, hi in zip(rec.leading.lo, rec.leading.hi):
            row += [repr(float(lo)), repr(float(hi))]
        tail_w = float(np.max(rec.tail.width)) if len(rec.tail) else 0.0
        row += [repr(tail_w), repr(float(rec.eps_max)), repr(float(rec.eps_remainder_max))]
        w.writerow(row)
    return buf.getvalue()


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _figures(cfg: CliConfig, result: IntegrationResult):
    if not cfg.figures or not result.trace:
        return []
    from . import plotting

    return [plotting.plot_beta_intervals(result.trace, cfg.out_dir / "beta_intervals.png",
                                         P0=result.setup.P0.hull()),
            plotting.plot_widths(result.trace, cfg.out_dir / "widths.png")]


# commands --------------------------------------------------------------------------
def _progress(i: int, n: int):
    if i % max(1, n // 16) == 0 or i == n:
        log.info("step %d/%d", i, n)


def cmd_radii(cfg: CliConfig) -> int:
    run = cfg.run
    radii = trapping_radii(run.forcing, run.grid, run.norm_mode)
    write_atomic(cfg.out_dir / "radii.json", _json(radii_doc(radii, run.norm_mode)))
    for j, R in enumerate(radii.as_tuple(), start=1):
        print(f"R{j} = [{R.lo!r}, {R.hi!r}]  ({radii.method_used.get(f'R{j}')})")
    return EXIT_OK


def cmd_integrate(cfg: CliConfig) -> int:
    result = integrate_period(cfg.run, prepare(cfg.run), progress=_progress)
    write_atomic(cfg.out_dir / "trace.csv", trace_csv(result.trace))
    summary = {
        "completed_steps": len(result.trace),
        "failure": None if result.failure is None else {"step": result.failure[0], "reason": result.failure[1]},
        "final": {"leading": _box_doc(result.P.hull()), "tail": _box_doc(result.tail)},
        "seconds": result.seconds, "threads": cfg.threads, "config": config_echo(cfg.run),
    }
    write_atomic(cfg.out_dir / "integration.json", _json(summary))
    _figures(cfg, result)
    if result.failure is not None:
        print(f"failed at step {result.failure[0]}: {result.failure[1]}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"completed {len(result.trace)} steps in {result.seconds:.1f} s")
    return EXIT_OK


def cmd_verify(cfg: CliConfig) -> int:
    result = integrate_period(cfg.run, prepare(cfg.run), progress=_progress)
    cert = verify_periodic(result, cfg.run)
    write_atomic(cfg.out_dir / "trace.csv", trace_csv(result.trace))
    write_atomic(cfg.out_dir / "certificate.json", _json(certificate_doc(cert, cfg.threads)))
    _figures(cfg, result)
    print(f"verdict: {cert.verdict}" + (f" ({cert.reason})" if cert.reason else ""))
    return {"periodic_verified": EXIT_OK, "not_verified": EXIT_NOT_VERIFIED}.get(cert.verdict, EXIT_NUMERICAL)


def cmd_reference(cfg: CliConfig) -> int:
    setup = prepare(cfg.run, radii=_no_radii())
    traj = reference_solve(cfg.run, alpha0=setup.basis.B @ setup.reference_beta0, B=setup.basis.B) \
        if setup.reference_beta0 is not None else reference_solve(cfg.run, B=setup.basis.B, warmup=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = traj.beta.shape[1]
    w.writerow(["t"] + [f"beta{j}" for j in range(1, n + 1)])
    for t, row in zip(traj.times, traj.beta):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
    write_atomic(cfg.out_dir / "reference.csv", buf.getvalue())
    print(f"reference trajectory: {len(traj.times)} samples, {n} coordinates (not certified)")
    return EXIT_OK


def _no_radii() -> TrappingRadii:
    # the reference run needs no certified radii
    z = Interval(0.0, 0.0)
    return TrappingRadii(z, z, z, z, z)


COMMANDS = {"radii": cmd_radii, "integrate": cmd_integrate,
            "verify-periodic": cmd_verify, "reference": cmd_reference}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="burgers-trap", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--threads", type=int, help="parallelism degree (overrides threads)")
    p.add_argument("--norm-mode", choices=[m.value for m in NormMode])
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, norm_mode=args.norm_mode, threads=args.threads, out_dir=args.out)
        if args.no_figures:
            cfg = CliConfig(cfg.run, cfg.out_dir, False, cfg.threads)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
