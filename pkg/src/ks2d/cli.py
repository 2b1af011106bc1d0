"""Command-line front end.

Exit codes: 0 every verified bound holds, 1 runtime or numerical failure,
2 rejected input (bad config, failed hypothesis, uncertified domain).
Errors go to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, resolve_domain, resolve_init, resolved_dict
from .direct import DirectRun, DirectSolver, cross_validate, direct_bound_checks, write_run_csv
from .io import write_field
from .mild import MODE_NAMES, HypothesisError, check_hypotheses, run_scheme
from .spectral import assemble, sup_wiener_norm, wiener_norm_array
from .toy import (
    Forcing,
    ToyState,
    ToySystem,
    default_horizon,
    integrate,
    level_set_sweep,
    verify_prop31,
    verify_prop32,
    write_trajectory_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_REJECT = 0, 1, 2


class Rejected(Exception):
    def __init__(self, message: str, details=None):
        super().__init__(message)
        self.details = details


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(o):
    # JSON has no inf / nan
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(_clean(obj), indent=2, default=_json_default)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    return text


class Context:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.domain, self.ledger = resolve_domain(cfg)
        self.config = resolved_dict(cfg, self.domain, self.ledger)
        self.out = Path(cfg.out_dir)

    def write(self, name: str, payload: dict) -> Path:
        path = self.out / name
        dump_json({"config": self.config, **payload}, path)
        return path

    def require_certified(self):
        led = self.ledger
        if not led.certified:
            raise Rejected("domain is not certified: need eps_star > 0 and eps < eps_star",
                           {"eps": led.eps, "eps_star": led.eps_star, "failing": list(led.failing)})


# --------------------------------------------------------------------------
# commands


def cmd_constants(ctx: Context) -> int:
    led = ctx.ledger
    payload = {"ledger": led.to_dict()}
    ctx.write("constants.json", payload)
    print(dump_json(payload["ledger"]))
    return EXIT_OK if led.eps_star > 0 else EXIT_FAIL


def cmd_check(ctx: Context) -> int:
    init = resolve_init(ctx.cfg, ctx.domain, ctx.ledger)
    checks = check_hypotheses(init, ctx.ledger)
    payload = {"hypotheses": [c.to_dict() for c in checks], "all_hold": all(c.holds for c in checks)}
    ctx.write("check.json", payload)
    for c in checks:
        print(f"{'PASS' if c.holds else 'FAIL'}  {c.name}  value={c.value:.6e}  "
              f"bound={c.bound:.6e}  margin={c.margin:.3e}")
    return EXIT_OK if payload["all_hold"] else EXIT_REJECT


def _toy_system(ctx: Context, axis: int) -> tuple[ToySystem, ToyState]:
    opt = ctx.cfg.toy
    base = ToySystem.from_ledger(ctx.ledger, axis)
    if opt.forcing == "zero" or opt.preset == "zero":
        forcing = Forcing.zero()
    elif opt.forcing == "extreme":
        forcing = base.extreme(*opt.signs)
    else:
        q = base.forcing_bound
        forcing = Forcing.sinusoid(opt.signs[0] * q, opt.omega, opt.signs[1] * q)
    sys_ = base.with_forcing(forcing)
    if opt.preset == "zero":
        a0 = b0 = 0.0
    else:
        b0 = opt.b0 * sys_.M2 * sys_.eps / 2
        a0 = math.sqrt(max(sys_.M1 * sys_.eps / 4 - b0 * b0, 0.0))
    return sys_, ToyState(0.0, a0, b0, sys_.L, sys_.eps)


def cmd_toy(ctx: Context) -> int:
    opt = ctx.cfg.toy
    if not ctx.ledger.eps > 0:
        raise Rejected("the toy model needs a growing mode (eps > 0)", {"eps": ctx.ledger.eps})
    results, ok = {}, True
    for axis in opt.axes:
        sys_, s0 = _toy_system(ctx, axis)
        T = opt.T if opt.T is not None else default_horizon(sys_)
        traj = integrate(s0, sys_, T, opt.dt, max_records=opt.max_records)
        reports = verify_prop31(traj) + verify_prop32(traj)
        sweep = level_set_sweep(sys_, opt.sweep_points)
        axis_ok = all(r.holds for r in reports) and sweep.all_negative
        ok &= axis_ok
        csv_path = write_trajectory_csv(traj, ctx.out / f"toy_axis{axis}.csv", ctx.config)
        results[f"axis{axis}"] = {
            "forcing": sys_.forcing.describe(),
            "initial": {"a": s0.a, "b": s0.b},
            "horizon": T, "dt": traj.dt,
            "reports": [r.to_dict() for r in reports],
            "sweep": {"n_points": sweep.n_points, "max_Gdot": sweep.max_Gdot,
                      "n_nonnegative": sweep.n_nonnegative},
            "all_hold": axis_ok,
            "csv": str(csv_path),
        }
        print(f"axis {axis}: {'PASS' if axis_ok else 'FAIL'}  T={T:.4g}  "
              + "  ".join(f"{r.name}={'ok' if r.holds else 'VIOLATED'}" for r in reports)
              + f"  sweep max Gt={sweep.max_Gdot:.3e}")
    ctx.write("toy_report.json", {"axes": results, "all_hold": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _write_series(path: Path, config: dict, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(_clean(config), sort_keys=True, default=_json_default) + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" for x in row])
    return path


def _scheme(ctx: Context):
    ctx.require_certified()
    init = resolve_init(ctx.cfg, ctx.domain, ctx.ledger)
    try:
        return init, run_scheme(init, ctx.ledger, ctx.cfg.scheme())
    except HypothesisError as exc:
        raise Rejected("initial data violate the hypotheses",
                       [c.to_dict() for c in exc.results]) from None


def cmd_iterate(ctx: Context) -> int:
    init, res = _scheme(ctx)
    fin = res.final
    rho = ctx.cfg.rho
    wn = wiener_norm_array(fin.w, rho, 1)
    _write_series(ctx.out / "iterate_final.csv", ctx.config,
                  ["t", *MODE_NAMES, "wnorm_rho1"],
                  (np.r_[t, a, n] for t, a, n in zip(fin.times, fin.amps, wn)))
    write_field(fin.snapshot(len(fin.times) - 1, ctx.domain).w, ctx.out / "w_final.csv",
                metadata={"t": float(fin.times[-1]), "config": _clean(ctx.config)})
    ctx.write("iterate_report.json", res.to_dict())
    for r in res.reports:
        print(f"iterate {r.n:2d}: {'ok' if r.all_hold else 'VIOLATED ' + ','.join(r.violations)}  "
              f"cauchy_rel={r.cauchy_rel:.3e}  |w|_B1={r.w_norm_B1:.3e}")
    print(f"converged={res.converged}  all bounds hold={res.all_bounds_hold}")
    if not res.converged:
        return EXIT_FAIL
    return EXIT_OK if res.all_bounds_hold else EXIT_FAIL


def cmd_solve(ctx: Context) -> int:
    cfg, opt = ctx.cfg, ctx.cfg.solve
    init = resolve_init(cfg, ctx.domain, ctx.ledger)
    solver = DirectSolver(ctx.domain, cfg.dt_direct, nonlinear=opt.nonlinear, cfl=opt.cfl)
    run = solver.run(assemble(init), cfg.T, record_every=opt.record_every)
    write_run_csv(run, ctx.out / "solve.csv", cfg.rho, ctx.config)
    payload = {"psi_bar_increases": run.mean_violations,
               "final_wnorm_rho0": sup_wiener_norm(run.coeffs[-1:], cfg.rho, 0)}
    ok = run.mean_violations == 0
    if ctx.ledger.certified:
        # bounds are stated for the iteration's sign convention
        mirrored = DirectRun(run.domain, run.times, -run.coeffs, run.psi_bar, run.dissipated)
        checks = direct_bound_checks(mirrored, ctx.ledger, cfg.rho)
        payload["bounds"] = [c.to_dict() for c in checks]
        ok &= all(c.holds for c in checks)
    payload["all_hold"] = ok
    ctx.write("solve_report.json", payload)
    print(f"steps={len(run.times) - 1}  psi_bar increases={run.mean_violations}  "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_xval(ctx: Context) -> int:
    init, res = _scheme(ctx)
    cfg = ctx.cfg
    xv = cross_validate(init, ctx.ledger, cfg.scheme(), cfg.dt_direct, mild=res)
    _write_series(ctx.out / "xval.csv", ctx.config, ["t", "dist_B0", "dist_l1"],
                  zip(xv.times, xv.dist_B0, xv.dist_l1))
    ok = (res.converged and res.all_bounds_hold and xv.max_dist_B0 < cfg.xval_tol
          and xv.mean_violations == 0 and all(c.holds for c in xv.direct_checks))
    payload = {**xv.to_dict(), "tolerance": cfg.xval_tol, "all_hold": ok}
    ctx.write("xval_report.json", payload)
    print(f"max B0 distance={xv.max_dist_B0:.3e} (tol {cfg.xval_tol:.1e})  "
          f"relative={xv.rel_dist_B0:.3e}  {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "constants": (cmd_constants, "constant ledger and eps_star"),
    "check": (cmd_check, "check the initial-data hypotheses"),
    "toy": (cmd_toy, "two-mode model: trajectories and level-set sweep"),
    "iterate": (cmd_iterate, "run the iteration scheme and check every bound"),
    "solve": (cmd_solve, "direct exponential-integrator solve"),
    "xval": (cmd_xval, "iteration scheme against the direct solver"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ks2d", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-c", "--config", help="YAML config file")
        sp.add_argument("--eps-scale", type=float, help="eps as a fraction of eps_star")
        sp.add_argument("--T", type=float, help="time horizon")
        sp.add_argument("--N", type=int, help="truncation order")
        sp.add_argument("--rho", type=float, help="analyticity radius of the norms")
        sp.add_argument("--out-dir", help="output directory")
    return p


def _error(kind: str, message: str, details=None, code: int = EXIT_FAIL) -> int:
    err = {"error": kind, "message": message, "exit_code": code}
    if details is not None:
        err["details"] = details
    print(json.dumps(_clean(err), default=_json_default), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"eps_scale": args.eps_scale, "T": args.T, "N": args.N,
                 "rho": args.rho, "out_dir": args.out_dir}
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config, overrides)
        ctx = Context(cfg)
        code = COMMANDS[args.command][0](ctx)
    except (ConfigError, FileNotFoundError) as exc:
        return _error(type(exc).__name__, str(exc), code=EXIT_REJECT)
    except Rejected as exc:
        return _error("Rejected", str(exc), exc.details, code=EXIT_REJECT)
    except Exception as exc:  # numerical failures and anything unexpected
        details = {"t": exc.t} if hasattr(exc, "t") else None
        return _error(type(exc).__name__, str(exc), details, code=EXIT_FAIL)
    print(f"[{args.command}] exit {code} in {time.perf_counter() - t0:.2f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
