"""Command line front end.

Exit codes: 0 success, 1 usage or config error, 2 numerical
non-convergence, 3 verification mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import io
from ._contour import ContourError
from .charfn import RootCountMismatch
from .config import ConfigError, RunConfig, load_config
from .dde import HistoryRangeError, distance_series, eigen_perturbation
from .floquet import EigenError, twisted_monodromy
from .flow import IntegrationError, ShootingError, find_discrete_wave
from .hayes import emit_region_chart, factor_point, gain_interval_combined, gain_path
from .pipeline import VERIFY_TOL, analyze, oracle_summary, perturbation_run, roots_table

log = logging.getLogger("eqpyragas")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_MISMATCH = 0, 1, 2, 3


class VerificationMismatch(RuntimeError):
    pass


def _out(args, cfg: RunConfig = None) -> str:
    d = args.out or (cfg.out_dir if cfg else ".")
    return io.ensure_dir(d)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "system", None):
        cfg.system, cfg.plugin = args.system, None
    return cfg


def _wave(args):
    if not args.wave:
        raise ConfigError("--wave is required")
    doc = io.read_wave_doc(args.wave)
    return io.load_wave(args.wave), doc["system"]["name"]


def cmd_find_orbit(args) -> int:
    cfg = _config(args)
    spec = cfg.build_system()
    wave = find_discrete_wave(spec.field, spec.h, spec.theta_guess, spec.x_guess, n=spec.n, m=spec.m,
                              tol=cfg.tol_shoot, integ_tol=cfg.tol_integ)
    out = _out(args, cfg)
    params = dict(spec.field.params) if cfg.plugin is None else dict(cfg.params)
    io.save_wave(wave, os.path.join(out, "wave.json"), cfg.system, params, cfg.plugin)
    ts = np.linspace(0.0, wave.period, 1001)
    xs = wave(ts)
    io.write_csv(os.path.join(out, "trajectory.csv"),
                 ["t"] + [f"x{i + 1}" for i in range(wave.dim)],
                 ([t, *x] for t, x in zip(ts, xs)))
    print(json.dumps({"x0": wave.x0.tolist(), "period": wave.period, "theta_h": wave.theta_h,
                      "iterations": wave.iterations, "residual": wave.shooting_residual}))
    return EXIT_OK


def cmd_analyze(args) -> int:
    wave, name = _wave(args)
    gains = args.gain or (load_config(args.config).gains if args.config else None)
    tm = twisted_monodromy(wave)
    report = analyze(wave, name, gains, args.grid_m, tm)
    out = _out(args)
    io.dump_json(report, os.path.join(out, "report.json"))
    io.write_csv(os.path.join(out, "spectrum.csv"), ["re", "im", "abs"], report["spectrum"])
    b_roots = report["gain_verdicts"][0]["b"] if report["gain_verdicts"] else 0.0
    io.write_csv(os.path.join(out, "roots.csv"), ["re", "im", "mult", "residual"],
                 roots_table(tm.spectrum, wave.theta_h, b_roots))
    gi = report["gain_interval"]
    print(f"status: {report['status']}  interval: ({gi['lo']}, {gi['hi']})")
    for r in report["reasons"]:
        print(f"reason: {r}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    wave, _ = _wave(args)
    if args.gain is None or len(args.gain) != 1:
        raise ConfigError("simulate needs exactly one --gain")
    b = args.gain[0]
    tm = twisted_monodromy(wave)
    if args.direction == "random":
        v = np.random.default_rng(args.seed).standard_normal(wave.dim)
        direction = args.amplitude * v / np.linalg.norm(v)
    else:
        direction = eigen_perturbation(tm, int(args.direction), args.amplitude)
    run = perturbation_run(wave, b, direction, args.periods, args.grid_m or 200)
    sim = run["sim"]
    dist = distance_series(sim.x, wave)
    out = _out(args)
    io.write_csv(os.path.join(out, "simulation.csv"),
                 ["t"] + [f"x{i + 1}" for i in range(wave.dim)] + ["control_norm", "dist_to_orbit"],
                 ([t, *x, c, d] for t, x, c, d in zip(sim.t, sim.x, sim.control_norm, dist)))
    summary = {
        "b": b,
        "periods": args.periods,
        "amplitude": args.amplitude,
        "direction": np.asarray(direction).tolist(),
        "dist_start": float(run["distances"][0]),
        "dist_end": float(run["distances"][-1]),
        "decay_factor": run["decay_factor"],
        "per_period_factors": run["per_period_factors"],
        "max_control_norm": run["max_control_norm"],
    }
    io.dump_json(summary, os.path.join(out, "simulation_summary.json"))
    print(f"decay factor over {args.periods} periods: {summary['decay_factor']:.6g}")
    return EXIT_OK


def cmd_region(args) -> int:
    out = _out(args)
    io.write_csv(os.path.join(out, "region.csv"), ["curve_id", "omega", "alpha", "beta"], emit_region_chart())
    if args.wave:
        wave, _ = _wave(args)
        tm = twisted_monodromy(wave)
        gi = gain_interval_combined(tm.spectrum, wave.theta_h)
        if gi.binding is None:
            print("no real unstable eigenvalue in the window; gain path skipped")
            return EXIT_OK
        mu = gi.binding.real
        lo = gi.lo if math.isfinite(gi.lo) else -1.0
        grid = np.linspace(2 * lo, 0.0, 401)
        ends = np.array([gi.lo, gi.hi])
        grid = grid[np.min(np.abs(grid[:, None] - ends[None, :]), axis=1) > 1e-9]
        gains = np.sort(np.concatenate([grid, ends]))[::-1]
        rows = gain_path(mu, wave.theta_h, gains)
        io.write_csv(os.path.join(out, "gain_path.csv"),
                     ["b", "b_star", "alpha", "beta", "region", "crossing"],
                     ([r["b"], r["b"] * wave.theta_h, r["alpha"], r["beta"], r["region"], int(r["crossing"])]
                      for r in rows))
        a, be, _ = factor_point(mu, gi.hi * wave.theta_h)
        print(f"gain path written; R crossing at b* = {gi.hi * wave.theta_h:.12g} ({a:.6g}, {be:.6g})")
    return EXIT_OK


def cmd_verify(args) -> int:
    wave, _ = _wave(args)
    tm = twisted_monodromy(wave)
    eigs = tm.spectrum
    if args.eigs:
        with open(args.eigs) as fh:
            eigs = np.array([complex(*e) if isinstance(e, list) else complex(e) for e in json.load(fh)])
    gains = args.gain or [0.0]
    summ = oracle_summary(wave, eigs, gains, args.grid_m or 200)
    out = _out(args)
    io.write_csv(os.path.join(out, "verify.csv"), ["b", "max_rel_error", "passed"],
                 ([r["b"], r["max_rel_error"], int(r["passed"])] for r in summ["rows"]))
    io.dump_json(summ, os.path.join(out, "verify.json"))
    for r in summ["rows"]:
        print(f"b={r['b']:+.6g}  max rel error {r['max_rel_error']:.3e}  {'PASS' if r['passed'] else 'FAIL'}")
    if not summ["passed"]:
        raise VerificationMismatch(f"oracle and charfn disagree beyond {VERIFY_TOL}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--wave", metavar="PATH")
    common.add_argument("--gain", type=float, action="append", metavar="FLOAT")
    common.add_argument("--grid-m", type=int, metavar="INT")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--seed", type=int, default=0, metavar="INT")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="eqpyragas", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    fo = sub.add_parser("find-orbit", parents=[common], help="locate a discrete wave")
    fo.add_argument("--system", help="builtin system name (overrides the config)")
    fo.set_defaults(func=cmd_find_orbit)
    sub.add_parser("analyze", parents=[common], help="spectrum, hypotheses, gain interval").set_defaults(
        func=cmd_analyze)
    si = sub.add_parser("simulate", parents=[common], help="controlled simulation of a perturbed wave")
    si.add_argument("--direction", default="0",
                    help="eigenvector index of Y_h, or 'random' (seeded by --seed)")
    si.add_argument("--amplitude", type=float, default=1e-3)
    si.add_argument("--periods", type=int, default=20)
    si.set_defaults(func=cmd_simulate)
    sub.add_parser("region", parents=[common], help="stability chart and gain path").set_defaults(
        func=cmd_region)
    ve = sub.add_parser("verify", parents=[common], help="discretized operator vs characteristic roots")
    ve.add_argument("--eigs", metavar="PATH", help="JSON list of eigenvalues replacing the spectrum of Y_h")
    ve.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, io.WaveFileError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShootingError, IntegrationError, EigenError, ContourError, RootCountMismatch,
            HistoryRangeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except VerificationMismatch as exc:
        print(f"verification mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
