"""auxgrip command line: generate, indent, metrics, torque, ingest, study."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .errors import AuxgripError
from .fem import SolveSettings

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _add_run_flags(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int, help="recorded in the report; used by randomized utilities")
    p.add_argument("-o", "--output-dir", help="output directory")
    p.add_argument("--inclinations", type=_floats, help="comma separated degrees, e.g. 0,30,45,60")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--youngs-modulus", type=float, help="MPa")
    p.add_argument("--poisson-ratio", type=float)
    p.add_argument("--radius", type=float, help="indenter radius, mm")
    p.add_argument("--travel", type=float, help="total indenter travel, mm")
    p.add_argument("--n-steps", type=int)
    p.add_argument("--penalty-factor", type=float)
    p.add_argument("--residual-tol", type=float)
    p.add_argument("--max-substeps", type=int)
    p.add_argument("--smoothing-window", type=int)
    p.add_argument("--radius-method", choices=("fit", "apex"))
    p.add_argument("--no-fixtures", action="store_true", help="skip the shipped experiment fixtures")
    p.add_argument("--jobs", type=int, help="parallel worker processes")


def build_config(args):
    from .frame import Material
    from .study import RunConfig

    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            d = json.load(fh)
    else:
        d = {}
    cfg = RunConfig.from_dict(d)
    lat = cfg.lattice
    if args.rows is not None:
        lat = dataclasses.replace(lat, rows=args.rows)
    if args.cols is not None:
        lat = dataclasses.replace(lat, cols=args.cols)
    if args.youngs_modulus is not None or args.poisson_ratio is not None:
        m = lat.material
        lat = dataclasses.replace(lat, material=Material(
            args.youngs_modulus if args.youngs_modulus is not None else m[0],
            args.poisson_ratio if args.poisson_ratio is not None else m[1]))
    solve = cfg.solve
    if args.residual_tol is not None:
        solve = dataclasses.replace(solve, residual_tol=args.residual_tol)
    if args.max_substeps is not None:
        solve = dataclasses.replace(solve, max_substeps=args.max_substeps)
    overrides = {
        "lattice": lat, "solve": SolveSettings(**dataclasses.asdict(solve)),
        "inclinations": args.inclinations, "output_dir": args.output_dir,
        "indenter_radius": args.radius, "total_travel": args.travel, "n_steps": args.n_steps,
        "penalty_factor": args.penalty_factor, "smoothing_window": args.smoothing_window,
        "radius_method": args.radius_method, "jobs": args.jobs, "seed": args.seed,
    }
    cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    if args.no_fixtures:
        cfg = dataclasses.replace(cfg, include_fixtures=False)
    return cfg.validate()


def cmd_generate(args):
    from .lattice import build_lattice

    cfg = build_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    for inc in cfg.inclinations:
        model = build_lattice(cfg.lattice.with_inclination(inc))
        path = os.path.join(cfg.output_dir, f"model_aux_{inc:g}.txt")
        model.write_text(path)
        print(f"{path}: {model.n_nodes} nodes, {len(model.elements)} elements, ports {list(model.port_nodes)}")
    return EXIT_OK


def cmd_indent(args):
    from .contact import Indenter, default_penalty, simulate_indentation
    from .lattice import build_lattice

    cfg = build_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    for inc in cfg.inclinations:
        model = build_lattice(cfg.lattice.with_inclination(inc))
        ind = Indenter.touching(model, cfg.indenter_radius, cfg.total_travel)
        h = simulate_indentation(model, ind, cfg.solve, cfg.n_steps,
                                 penalty=default_penalty(model, cfg.penalty_factor))
        base = os.path.join(cfg.output_dir, f"aux_{inc:g}")
        h.to_csv(base + "_indentation.csv")
        h.face_to_csv(-1, base + "_face.csv")
        last = h.steps[-1]
        print(f"Aux({inc:g}): travel {last.travel:.3f} mm, contact {last.contact_force_resultant:.4f} N, "
              f"ports " + " ".join(f"{p:.4f}" for p in last.port_reactions))
        for w in h.warnings:
            print(f"  warning: {w}")
    return EXIT_OK


def cmd_metrics(args):
    from .metrics import (
        conformity_radius, curvature_profile, curvature_ratio, force_stats, read_force_csv,
        read_profile_csv, write_curvature_csv,
    )

    if not args.profiles and not args.force:
        print("metrics: give at least one profile CSV or --force CSV", file=sys.stderr)
        return EXIT_USAGE
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
    for path in args.profiles:
        prof = read_profile_csv(path)
        cp = curvature_profile(prof, args.smoothing_window)
        r2 = conformity_radius(prof, args.radius_method)
        print(f"{path}: average curvature {cp.average_curvature:.6g} 1/mm, R2 {r2:.6g} mm, "
              f"R1/R2 {curvature_ratio(args.r1, r2):.4f}")
        if args.output_dir:
            stem = os.path.splitext(os.path.basename(path))[0]
            write_curvature_csv(os.path.join(args.output_dir, f"{stem}_curvature.csv"), cp)
    if args.force:
        t, f = read_force_csv(args.force)
        s = force_stats(t, f)
        print(f"{args.force}: mean {s.mean:.4f} N, sd {s.sd:.4f} N, peak {s.peak:.4f} N at {s.t_peak:g}")
    return EXIT_OK


def cmd_torque(args):
    from .mechanism import MechanismGeometry, MechanismState, load_geometry, torque_sweep

    geom = load_geometry(args.geometry) if args.geometry else MechanismGeometry()
    state = MechanismState(args.phi, args.xi, args.eta, args.mu, args.zeta, args.theta)
    curve = torque_sweep(state, geom, args.grasp)
    if args.out:
        curve.to_csv(args.out)
    print("grasp_N,tau_Nmm,tau_total_Nmm")
    for g, t, tt in curve.rows():
        print(f"{g:g},{t:.6g},{tt:.6g}")
    return EXIT_OK


def cmd_ingest(args):
    from .sensors import FsrCalibration, fit_series, format_summary, load_series, write_summary_csv
    from .svg import write_plot

    if not args.files:
        print("ingest: at least one measurement CSV is required", file=sys.stderr)
        return EXIT_USAGE
    cal = FsrCalibration.load(args.calibration) if args.calibration else None
    out = args.output_dir
    if out:
        os.makedirs(out, exist_ok=True)
    fits = []
    for path in args.files:
        stem = os.path.splitext(os.path.basename(path))[0]
        # ingestion errors already carry the path and line, fit errors the channel label
        series = load_series(path, args.schema, calibration=cal, label=stem)
        res = fit_series(series, args.degree, args.level)
        fits += list(res.values())
        if out:
            for ch, fr in res.items():
                fr.to_csv(os.path.join(out, f"{stem}_{ch}_fit.csv"))
                write_plot(os.path.join(out, f"{stem}_{ch}_bands.svg"), [
                    (fr.x, fr.y, "data", "points"), (fr.x, fr.fitted, "fit"),
                    (fr.x, fr.conf_lo, "confidence", "dash"), (fr.x, fr.conf_hi, "", "dash"),
                    (fr.x, fr.pred_lo, "prediction", "dash"), (fr.x, fr.pred_hi, "", "dash"),
                ], title=fr.label, xlabel="time (s)", ylabel="force (N)")
    if out:
        write_summary_csv(os.path.join(out, "fit_summary.csv"), fits)
    print(format_summary(fits))
    return EXIT_OK


def cmd_study(args):
    from .study import run_study

    cfg = build_config(args)
    report = run_study(cfg)
    print(report.to_text(), end="")
    print(f"report: {os.path.join(cfg.output_dir, 'report.json')}")
    if not report.ok:
        print("study finished with failures: " + ", ".join(report.manifest["failures"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="auxgrip", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write lattice finger models")
    _add_run_flags(g)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("indent", help="simulate rigid-circle indentation")
    _add_run_flags(i)
    i.set_defaults(func=cmd_indent)

    m = sub.add_parser("metrics", help="curvature and force statistics from CSV files")
    m.add_argument("profiles", nargs="*", help="x_mm,y_mm profile CSVs")
    m.add_argument("--force", help="two-column time,force CSV")
    m.add_argument("--r1", type=float, default=26.5, help="object radius, mm")
    m.add_argument("--smoothing-window", type=int, default=7)
    m.add_argument("--radius-method", choices=("fit", "apex"), default="fit")
    m.add_argument("-o", "--output-dir")
    m.add_argument("--seed", type=int)
    m.set_defaults(func=cmd_metrics)

    t = sub.add_parser("torque", help="motor torque over a grasping-force grid")
    t.add_argument("--geometry", help="mechanism geometry JSON")
    for name, default in (("phi", 90.0), ("xi", 90.0), ("eta", 0.0), ("mu", 90.0), ("zeta", 0.0), ("theta", 0.0)):
        t.add_argument(f"--{name}", type=float, default=default, help=f"degrees (default {default:g})")
    t.add_argument("--grasp", type=_floats, default=(0.2, 0.4, 0.6, 0.8), help="N, comma separated")
    t.add_argument("--out", help="torque CSV path")
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_torque)

    n = sub.add_parser("ingest", help="strain to force conversion and regression bands")
    n.add_argument("files", nargs="*")
    n.add_argument("--schema", choices=("default", "raw"), default="default")
    n.add_argument("--calibration", help="FSR calibration JSON for the raw schema")
    n.add_argument("--degree", type=int, default=9)
    n.add_argument("--level", type=float, default=0.95)
    n.add_argument("-o", "--output-dir")
    n.add_argument("--seed", type=int)
    n.set_defaults(func=cmd_ingest)

    s = sub.add_parser("study", help="full comparison across inclinations")
    _add_run_flags(s)
    s.set_defaults(func=cmd_study)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None:
        np.random.seed(args.seed)
    try:
        return args.func(args)
    except (AuxgripError, ValueError, OSError) as exc:
        print(f"auxgrip {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
