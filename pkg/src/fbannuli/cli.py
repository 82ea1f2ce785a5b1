"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical failure.
Settings come from built-in defaults, then a TOML file (``--config`` or
the ``FBANNULI_CONFIG`` environment variable), then command-line flags.
``solve-annulus`` and ``capillary`` accept several periods or ``d`` values;
these run as independent jobs on a process pool and the exit code is the
worst job code.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import config as _config
from .errors import DomainError, NoSignChange, NumericalFailure
from .flow import coth_root, solve_r_sharp, solve_r_star, trace_orbit_gamma0
from .params import derive_spectral
from .period import per, per_contour, trace_level
from .pipeline import (build_capillary, build_strip, height, necksize, solve_free_boundary)
from .serialize import (csv_text, dumps_json, export_mesh, load_chart, save_chart, write_csv,
                        write_json)
from .surface import build_data
from .verify import DEFAULT_TOLERANCES, MIN_NU, MIN_NV, verify_chart

ENV_CONFIG = "FBANNULI_CONFIG"


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    precision: float = 1e-12
    pole_guard: float = 1e-6
    drift_budget: float = 1e-10
    ode_tol: float = 1e-13
    nu: int = 129
    nv_per_period: int = 512
    d_min: float = -8.0
    out_dir: str = "out"
    sig_digits: int = 12
    probe_stride: tuple = (2, 4)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def validate(self):
        for name in ("precision", "pole_guard", "drift_budget", "ode_tol"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if any(not v > 0 for v in self.tolerances.values()):
            raise UsageError("tolerances must be positive")
        if self.nu < MIN_NU or self.nv_per_period < MIN_NV - 1:
            raise UsageError(f"grid must be at least {MIN_NU} x {MIN_NV}")
        if self.d_min >= 0:
            raise UsageError("d_min must be negative")
        return self

    def apply(self):
        s = _config.get_settings().replace(
            precision=self.precision, pole_guard=self.pole_guard,
            drift_budget=self.drift_budget, ode_tol=self.ode_tol,
            nu=self.nu, nv_per_period=self.nv_per_period)
        _config.set_settings(s)

    @classmethod
    def load(cls, path=None):
        cfg = cls()
        path = path or os.environ.get(ENV_CONFIG)
        if path:
            try:
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as exc:
                raise UsageError(f"cannot read config {path}: {exc}") from exc
            names = {f.name for f in dataclasses.fields(cls)}
            for key, value in data.items():
                if key not in names:
                    raise UsageError(f"unknown config key {key!r}")
                if key == "tolerances":
                    cfg.tolerances.update(value)
                elif key == "probe_stride":
                    cfg.probe_stride = tuple(value)
                else:
                    setattr(cfg, key, type(getattr(cfg, key))(value))
        return cfg


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _fraction(text):
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text}") from exc
    return f


def _out(args, cfg):
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(text):
    sys.stdout.write(text)


def cmd_constants(args, cfg):
    rs, rst = solve_r_sharp(), solve_r_star()
    out = {
        "r_sharp": {"value": rs, "note": "critical point of the degenerate profile on the diagonal"},
        "r_star": {"value": rst, "note": "zero of the diagonal height limit, on the "
                                          "F(x) = H(x)H(-x) branch"},
        "per_r_star": {"value": per(rst, rst), "note": "1/sqrt(1 - r*^3)"},
        "x0": {"value": coth_root(), "note": "root of coth x = x"},
    }
    _emit(dumps_json(out, cfg.sig_digits))


def cmd_per(args, cfg):
    val = per(args.r1, args.r2)
    res = {"r1": args.r1, "r2": args.r2, "per": val}
    if args.contour:
        res["per_contour"] = per_contour(build_data(derive_spectral(args.r1, args.r2)))
    _emit(dumps_json(res, 15))


def cmd_trace_level(args, cfg):
    curve = trace_level(float(args.c), args.d_min if args.d_min is not None else cfg.d_min)
    text = csv_text(["c", "r1", "r2", "residual"], curve.rows(), cfg.sig_digits)
    if args.out:
        write_csv(args.out, ["c", "r1", "r2", "residual"], curve.rows(), cfg.sig_digits)
    else:
        _emit(text)


def cmd_phase_portrait(args, cfg):
    orbit = trace_orbit_gamma0(derive_spectral(args.r1, args.r2), n_samples=args.samples)
    rows = [(u, lam, s, t, tag) for u, lam, s, t, tag in
            zip(orbit.u, orbit.lam, orbit.s, orbit.t, orbit.phase_tags)]
    header = ["u", "lambda", "s", "t", "phase"]
    if args.out:
        write_csv(args.out, header, rows, cfg.sig_digits)
    else:
        _emit(csv_text(header, rows, cfg.sig_digits))


def cmd_height(args, cfg):
    s = height(args.r1, args.r2)
    _emit(dumps_json(dataclasses.asdict(s), cfg.sig_digits))


def _finish(sol, args, cfg, expect):
    out = _out(args, cfg)
    report = sol.summary()
    if not args.no_verify:
        rep = verify_chart(sol.chart, expect, cfg.tolerances, cfg.probe_stride)
        report["verification"] = rep.to_dict()
        report["symmetry"] = rep.symmetry_group
    save_chart(out / "chart.npz", sol.chart)
    n_v, n_f = export_mesh(sol.chart, args.format, out / f"annulus.{args.format}")
    report["mesh"] = {"file": f"annulus.{args.format}", "vertices": n_v, "faces": n_f}
    write_json(out / "report.json", report, cfg.sig_digits)
    _emit(dumps_json({k: report[k] for k in ("kind", "period", "r1", "r2", "tau_or_ustar")
                      + (("symmetry",) if "symmetry" in report else ())}, cfg.sig_digits))


def _run_job(argv):
    """Run one sweep job in a worker; returns ``(code, stdout, stderr)``."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run_cli(argv)
    return code, out.getvalue(), err.getvalue()


def _sweep(args, cfg, command, values, flag, label):
    """Fan independent jobs out over a process pool, one output directory each."""
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    base = _out(args, cfg)
    prefix = []
    if args.config:
        prefix += ["--config", args.config]
    prefix += ["--nu", str(cfg.nu), "--nv-per-period", str(cfg.nv_per_period)]
    shared = ["--format", args.format] + (["--no-verify"] if args.no_verify else [])
    shared += getattr(args, "extra", [])
    jobs = {}
    for v in values:
        name = label(v)
        jobs[name] = prefix + [command, flag, str(v), "--out", str(base / name)] + shared
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = dict(zip(jobs, pool.map(_run_job, jobs.values())))
    summary = {}
    for name, (code, _, err) in results.items():
        summary[name] = {"exit": code, "dir": name}
        if code:
            summary[name]["error"] = err.strip().splitlines()[0] if err.strip() else ""
    write_json(base / "sweep.json", summary, cfg.sig_digits)
    _emit(dumps_json(summary, cfg.sig_digits))
    return max(code for code, _, _ in results.values())


def cmd_solve_annulus(args, cfg):
    if len(args.period) > 1:
        args.extra = [] if args.d_min is None else ["--d-min", str(args.d_min)]
        return _sweep(args, cfg, "solve-annulus", args.period, "--period",
                      lambda f: f"period_{f.numerator}-{f.denominator}")
    frac = args.period[0]
    try:
        sol = solve_free_boundary(frac.numerator, frac.denominator,
                                  d_min=args.d_min if args.d_min is not None else cfg.d_min)
    except NoSignChange as exc:
        sys.stderr.write(f"{exc}\n")
        sys.stderr.write(csv_text(["d", "sign_beta_ustar"], exc.profile, cfg.sig_digits))
        raise
    _finish(sol, args, cfg, {"m": frac.numerator, "n": frac.denominator,
                             "angle": math.pi / 2, "kind": "free_boundary"})


def cmd_capillary(args, cfg):
    if len(args.d) > 1:
        args.extra = ["--n", str(args.n)]
        return _sweep(args, cfg, "capillary", args.d, "--d", lambda d: f"d_{d:g}")
    sol = build_capillary(args.n, args.d[0])
    sol.report["necksize_limit"] = necksize(args.n)
    _finish(sol, args, cfg, {"m": 1, "n": args.n, "angle": sol.boundary_angle,
                             "kind": "capillary", "winding": 1})


def cmd_strip(args, cfg):
    chart = build_strip(args.r1, args.r2, args.periods, u_max=args.u_max)
    out = _out(args, cfg)
    save_chart(out / "chart.npz", chart)
    n_v, n_f = export_mesh(chart, args.format, out / f"strip.{args.format}")
    info = {"r1": args.r1, "r2": args.r2, "periods": args.periods, "compact": False,
            "per": per(min(args.r1, args.r2), max(args.r1, args.r2)),
            "vertices": n_v, "faces": n_f}
    write_json(out / "report.json", info, cfg.sig_digits)
    _emit(dumps_json(info, cfg.sig_digits))


def cmd_verify(args, cfg):
    chart = load_chart(args.chart)
    expect = {"m": args.m, "n": args.n}
    if args.angle is not None:
        expect["angle"] = args.angle
    rep = verify_chart(chart, expect, cfg.tolerances, cfg.probe_stride,
                       run_probe=not args.no_probe)
    text = dumps_json(rep.to_dict(), cfg.sig_digits)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    _emit(text)


def cmd_export_mesh(args, cfg):
    chart = load_chart(args.chart)
    n_v, n_f = export_mesh(chart, args.format, args.out, binary=not args.ascii)
    _emit(dumps_json({"file": str(args.out), "vertices": n_v, "faces": n_f}))


def build_parser():
    p = _Parser(prog="fbannuli", description="Free-boundary and capillary minimal annuli.")
    p.add_argument("--config", help=f"TOML config (default: ${ENV_CONFIG})")
    p.add_argument("--nu", type=int)
    p.add_argument("--nv-per-period", type=int)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sub.add_parser("constants", help="critical values on the diagonal")
    q = sub.add_parser("per", help="period map")
    q.add_argument("--r1", type=float, required=True)
    q.add_argument("--r2", type=float, required=True)
    q.add_argument("--contour", action="store_true", help="also evaluate the contour oracle")
    q = sub.add_parser("trace-level", help="level curve Per = c as CSV")
    q.add_argument("--c", type=_fraction, required=True)
    q.add_argument("--d-min", type=float)
    q.add_argument("--out")
    q = sub.add_parser("phase-portrait", help="the orbit Gamma0 in (s, t) as CSV")
    q.add_argument("--r1", type=float, required=True)
    q.add_argument("--r2", type=float, required=True)
    q.add_argument("--samples", type=int, default=2000)
    q.add_argument("--out")
    q = sub.add_parser("height", help="height map")
    q.add_argument("--r1", type=float, required=True)
    q.add_argument("--r2", type=float, required=True)
    for name, hlp in (("solve-annulus", "free-boundary annulus of a rational period"),
                      ("capillary", "member of the capillary family")):
        q = sub.add_parser(name, help=hlp)
        if name == "solve-annulus":
            q.add_argument("--period", type=_fraction, nargs="+", required=True,
                           help="one period, or several to run as a sweep")
            q.add_argument("--d-min", type=float)
        else:
            q.add_argument("--n", type=int, required=True)
            q.add_argument("--d", type=float, nargs="+", required=True,
                           help="one value, or several to run as a sweep")
        q.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweeps")
        q.add_argument("--out")
        q.add_argument("--format", choices=("obj", "ply"), default="ply")
        q.add_argument("--no-verify", action="store_true")
    q = sub.add_parser("strip", help="multi-period chart without quotient")
    q.add_argument("--r1", type=float, required=True)
    q.add_argument("--r2", type=float, required=True)
    q.add_argument("--periods", type=int, default=3)
    q.add_argument("--u-max", type=float)
    q.add_argument("--no-quotient", action="store_true", default=True)
    q.add_argument("--out")
    q.add_argument("--format", choices=("obj", "ply"), default="ply")
    q = sub.add_parser("verify", help="certify a saved chart")
    q.add_argument("--chart", required=True)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--n", type=int, default=1)
    q.add_argument("--angle", type=float)
    q.add_argument("--no-probe", action="store_true")
    q.add_argument("--out")
    q = sub.add_parser("export-mesh", help="convert a saved chart to OBJ or PLY")
    q.add_argument("--chart", required=True)
    q.add_argument("--format", choices=("obj", "ply"), default="ply")
    q.add_argument("--ascii", action="store_true")
    q.add_argument("--out", required=True)
    return p


COMMANDS = {
    "constants": cmd_constants, "per": cmd_per, "trace-level": cmd_trace_level,
    "phase-portrait": cmd_phase_portrait, "height": cmd_height,
    "solve-annulus": cmd_solve_annulus, "capillary": cmd_capillary, "strip": cmd_strip,
    "verify": cmd_verify, "export-mesh": cmd_export_mesh,
}


def run_cli(argv=None):
    """Run one subcommand; returns the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    saved = _config.get_settings()
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        cfg = JobConfig.load(args.config)
        if args.nu is not None:
            cfg.nu = args.nu
        if args.nv_per_period is not None:
            cfg.nv_per_period = args.nv_per_period
        cfg.validate().apply()
        return COMMANDS[args.command](args, cfg) or 0
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 2
    except NumericalFailure as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return 3
    finally:
        _config.set_settings(saved)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
