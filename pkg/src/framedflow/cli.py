"""Command-line runner: ``framedflow run | oracle | verify | surf-export``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

import argparse
import json
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import curve_core, diagnostics, flow_engine, oracles, surface_builder, theta_laws
from .config import load_config
from .errors import ConfigError, FramedFlowError, NumericError, OracleError
from .verification import SUITES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4


def version_string():
    """Package version plus ``git describe`` of the source tree when available."""
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def tolerances():
    """Every threshold used in module decisions, for the manifest."""
    return {
        "curve_core.MIN_NODES": curve_core.MIN_NODES,
        "curve_core.FRENET_TOL_FACTOR (kappa < factor / L)": curve_core.FRENET_TOL_FACTOR,
        "theta_laws.POLE_TOL_FACTOR (kappa_min = psi2_min = factor / L)":
            theta_laws.POLE_TOL_FACTOR,
        "diagnostics.EMBED_TOL_FACTOR (embed_tol = factor * L / N)": diagnostics.EMBED_TOL_FACTOR,
        "flow_engine.FLAT_TOL": flow_engine.FLAT_TOL,
        "flow_engine.PINCH_TOL": flow_engine.PINCH_TOL,
        "flow_engine.EXTENT_FACTOR": flow_engine.EXTENT_FACTOR,
        "flow_engine.FIT_WINDOW": flow_engine.FIT_WINDOW,
        "flow_engine.BLOWUP_R2": flow_engine.BLOWUP_R2,
        "flow_engine.TYPE_I_SLOPE": flow_engine.TYPE_I_SLOPE,
        "oracles.RTOL": oracles.RTOL,
        "oracles.ATOL": oracles.ATOL,
        "oracles.POLE_TOL": oracles.POLE_TOL,
    }


def _default_k_one(law, curve):
    # a theta bound is known a priori when theta is frozen or obeys a
    # maximum principle; then K_I = cos(sup |theta|)
    if law.kind == theta_laws.ZERO or (law.kind == theta_laws.DIFFUSIVE and law.f4 == 0
                                       and not any(law.beta)):
        sup = float(np.max(np.abs(curve.angles)))
        if sup < np.pi / 2:
            return float(np.cos(sup))
    return None


def _write_outputs(out, cfg, result, law, curve0, seed, error=None):
    os.makedirs(out, exist_ok=True)
    mon = cfg.values["monitors"]
    k_one = mon["k_one"] if mon["k_one"] is not None else _default_k_one(law, curve0)
    records = []
    if result is not None and result.slices:
        records = diagnostics.records_for_run(
            result, H=law.H if law.kind == theta_laws.CMC else None, K_I=k_one,
            knotted=mon["knotted"], flux_directions=mon["flux_directions"],
            with_writhe=cfg.get("output", "writhe"))
        diagnostics.write_csv(records, os.path.join(out, "diagnostics.csv"))
        with open(os.path.join(out, "report.txt"), "w") as fh:
            fh.write(result.report.as_text())
            fh.write(f"stop_reason={result.stop_reason}\nsteps={result.steps}\n"
                     f"t_final={result.t!r}\n")
        curve_core.write_curve(os.path.join(out, "final_curve.txt"), result.curve)
        surface_builder.save_surface(result.surface, os.path.join(out, "surface.npz"))
        if len(result.surface) >= 2:
            if cfg.get("output", "export_surface"):
                surface_builder.export_obj(result.surface, os.path.join(out, "surface.obj"))
            if cfg.get("output", "export_fields"):
                surface_builder.export_fields_csv(result.surface, os.path.join(out, "fields.csv"))
    manifest = {
        "version": version_string(),
        "config_path": os.path.abspath(cfg.path),
        "config": cfg.resolved(),
        "seed": seed,
        "k_one_used": k_one,
        "tolerances": tolerances(),
        "run_monitors": result.monitors if result is not None else {},
        "stop_reason": result.stop_reason if result is not None else None,
        "steps": result.steps if result is not None else 0,
        "error": error,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return records


def run_one(path, out=None, seed=0):
    """Execute one configuration; returns ``(exit_code, message)``."""
    try:
        cfg = load_config(path)
        curve0 = cfg.curve()
        law = cfg.law()
        flow = cfg.flow()
    except ConfigError as e:
        return EXIT_CONFIG, f"config error: {e}"
    out = out or cfg.output_dir
    try:
        result = flow_engine.run(curve0, law, flow)
    except NumericError as e:
        _write_outputs(out, cfg, e.result, law, curve0, seed, error=str(e))
        return EXIT_NUMERIC, f"numeric failure: {type(e).__name__}: {e}"
    except FramedFlowError as e:
        return EXIT_NUMERIC, f"failure: {type(e).__name__}: {e}"
    _write_outputs(out, cfg, result, law, curve0, seed)
    rep = result.report
    return EXIT_OK, (f"{path}: stop={result.stop_reason} t={result.t:.6g} kind={rep.kind} "
                     f"Theta={rep.Theta:.4f} type={rep.blowup_type} t_detect={rep.t_detect:.6g}"
                     f" -> {out}")


def _run_job(args):
    return run_one(*args)


def cmd_run(ns):
    configs = ns.config
    if len(configs) == 1:
        jobs = [(configs[0], ns.out, ns.seed)]
    else:
        base = ns.out or os.environ.get("OUTPUT_DIR") or "out"
        jobs = [(c, os.path.join(base, os.path.splitext(os.path.basename(c))[0]), ns.seed)
                for c in configs]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [run_one(*j) for j in jobs]
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max(code for code, _ in results)


ORACLES = ("cone", "pinch", "infinite-pinch", "helical-cmc", "helical-cgc")


def build_oracle(ns):
    if ns.name == "cone":
        return oracles.cone_trajectory(ns.rho0, ns.phi, n=ns.n)
    if ns.name == "pinch":
        return oracles.pinch_oracle(ns.rho0, ns.phi)
    if ns.name == "infinite-pinch":
        return oracles.infinite_pinch_oracle(ns.rho0, n=ns.n)
    if ns.name == "helical-cmc":
        return oracles.helical_cmc_oracle(ns.theta0, ns.rho0, ns.w, ns.h, t_end=ns.t_end)
    return oracles.helical_cgc_oracle(ns.theta0, ns.rho0, ns.w, ns.k, t_end=ns.t_end)


def cmd_oracle(ns):
    try:
        traj = build_oracle(ns)
    except OracleError as e:
        print(f"oracle error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    path = ns.out or "-"
    oracles.write_trajectory_csv(traj, sys.stdout if path == "-" else path)
    for k, v in traj.info.items():
        print(f"# {k} = {v}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(ns):
    names = list(SUITES) if ns.suite == "all" else [ns.suite]
    failed = 0
    for name in names:
        print(f"== {name}")
        print(f"{'check':<48s} {'residual':>11s} {'tolerance':>11s}  status")
        try:
            checks = SUITES[name](seed=ns.seed)
        except NumericError as e:
            print(f"numeric failure: {type(e).__name__}: {e}")
            failed += 1
            continue
        for c in checks:
            print(c.row())
        failed += sum(not c.passed for c in checks)
    print(f"{failed} failing check(s)")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_surf_export(ns):
    src = os.path.join(ns.run_dir, "surface.npz")
    if not os.path.exists(src):
        print(f"config error: no stored surface at {src}", file=sys.stderr)
        return EXIT_CONFIG
    surf = surface_builder.load_surface(src)
    try:
        surface_builder.export_obj(surf, ns.obj or os.path.join(ns.run_dir, "surface.obj"))
        surface_builder.export_fields_csv(surf, ns.fields or os.path.join(ns.run_dir, "fields.csv"))
    except FramedFlowError as e:
        print(f"export failed: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="framedflow", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one or more configuration files")
    r.add_argument("config", nargs="+")
    r.add_argument("--out", help="output directory (overrides [output] dir and OUTPUT_DIR)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="write an oracle trajectory as CSV")
    o.add_argument("name", choices=ORACLES)
    o.add_argument("--rho0", type=float, default=1.0)
    o.add_argument("--phi", type=float, default=np.pi / 3)
    o.add_argument("--theta0", type=float, default=0.0)
    o.add_argument("--w", type=float, default=0.0)
    o.add_argument("--h", type=float, default=0.0, help="target mean curvature (trace)")
    o.add_argument("--k", type=float, default=0.0, help="target Gaussian curvature")
    o.add_argument("--t-end", type=float, default=1.0)
    o.add_argument("--n", type=int, default=201, help="samples for closed-form oracles")
    o.add_argument("--out", help="CSV path, '-' for stdout (default)")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=tuple(SUITES) + ("all",))
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("surf-export", help="re-export a stored run's surface")
    s.add_argument("run_dir")
    s.add_argument("--obj")
    s.add_argument("--fields")
    s.set_defaults(func=cmd_surf_export)
    return p


def main(argv=None):
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
