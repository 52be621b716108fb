"""End-to-end comparison study across unit-cell inclinations."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .contact import Indenter, default_penalty, simulate_indentation
from .errors import AuxgripError, InputError
from .fem import SolveSettings
from .frame import Material
from .lattice import LatticeSpec, build_lattice
from .mechanism import (
    MechanismGeometry, LinearSchedule, default_port_normals, schedule_from_dict, torque_curve,
)
from .metrics import (
    ContactProfile, conformity_radius, curvature_profile, curvature_ratio, extract_centerline,
    force_stats, read_profile_csv, write_centerline_csv, write_curvature_csv, write_profile_csv,
)
from .sensors import fit_series, load_series, write_summary_csv
from .svg import write_plot

SCHEMA = "auxgrip.report/1"
GRASP_GRID = (0.2, 0.4, 0.6, 0.8)
PAPER_SAMPLES = (0, 30, 45, 60)
SIG_DIGITS = 10


@dataclass
class RunConfig:
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    indenter_radius: float = 26.5
    total_travel: float = 2.5
    n_steps: int = 10
    penalty_factor: float = 100.0
    solve: SolveSettings = field(default_factory=SolveSettings)
    geometry: MechanismGeometry = field(default_factory=MechanismGeometry)
    schedule: dict = field(default_factory=lambda: {"kind": "linear"})
    inclinations: tuple = PAPER_SAMPLES
    output_dir: str = "auxgrip_out"
    smoothing_window: int = 7
    radius_method: str = "fit"
    include_fixtures: bool = True
    jobs: int = 1
    seed: int = 0

    def validate(self):
        self.lattice.validate()
        if not self.inclinations:
            raise InputError("at least one inclination is required")
        for inc in self.inclinations:
            self.lattice.with_inclination(inc).validate()
        Indenter(self.indenter_radius, (0.0, 0.0), (0.0, -1.0), self.total_travel)
        if self.n_steps < 1:
            raise InputError("n_steps must be >= 1")
        if self.penalty_factor <= 0:
            raise InputError("penalty_factor must be positive")
        if self.radius_method not in ("fit", "apex"):
            raise InputError("radius_method must be 'fit' or 'apex'")
        if self.jobs < 1:
            raise InputError("jobs must be >= 1")
        schedule_from_dict(self.schedule, self.geometry)
        return self

    def to_dict(self):
        return {
            "lattice": self.lattice.to_dict(),
            "indenter": {"radius": self.indenter_radius, "total_travel": self.total_travel,
                         "n_steps": self.n_steps, "penalty_factor": self.penalty_factor},
            "solve": dataclasses.asdict(self.solve),
            "mechanism": {"geometry": self.geometry.to_dict(), "schedule": self.schedule},
            "metrics": {"smoothing_window": self.smoothing_window, "radius_method": self.radius_method},
            "inclinations": [float(i) for i in self.inclinations],
            "include_fixtures": self.include_fixtures,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d, output_dir=None):
        d = dict(d)
        known = {"lattice", "material", "indenter", "solve", "mechanism", "metrics",
                 "inclinations", "output_dir", "include_fixtures", "jobs", "seed"}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config sections {sorted(unknown)}")
        lat = LatticeSpec.from_dict(d.get("lattice", {}))
        if "material" in d:
            lat = dataclasses.replace(lat, material=Material(**d["material"]))
        ind = d.get("indenter", {})
        mech = d.get("mechanism", {})
        met = d.get("metrics", {})
        cfg = cls(
            lattice=lat,
            indenter_radius=float(ind.get("radius", 26.5)),
            total_travel=float(ind.get("total_travel", 2.5)),
            n_steps=int(ind.get("n_steps", 10)),
            penalty_factor=float(ind.get("penalty_factor", 100.0)),
            solve=SolveSettings(**d.get("solve", {})),
            geometry=MechanismGeometry.from_dict(mech.get("geometry", {})),
            schedule=dict(mech.get("schedule", {"kind": "linear"})),
            inclinations=tuple(float(i) for i in d.get("inclinations", PAPER_SAMPLES)),
            output_dir=output_dir or d.get("output_dir", "auxgrip_out"),
            smoothing_window=int(met.get("smoothing_window", 7)),
            radius_method=met.get("radius_method", "fit"),
            include_fixtures=bool(d.get("include_fixtures", True)),
            jobs=int(d.get("jobs", 1)),
            seed=int(d.get("seed", 0)),
        )
        return cfg.validate()


def load_config(path, output_dir=None):
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_dict(json.load(fh), output_dir)


def _clean(v):
    """JSON-safe value with floats rounded to SIG_DIGITS significant digits (nan -> None)."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):
            return None
        return float(f"{v:.{SIG_DIGITS}g}")
    return v


def _tag(inc):
    return f"{inc:g}".replace(".", "p").replace("-", "m")


def contact_zone(profile, forces, pad=1, minimum=7):
    """Face samples in contact, widened by ``pad`` nodes and to at least ``minimum`` samples."""
    on = np.flatnonzero(forces > 0)
    n = len(profile.x)
    if on.size == 0:
        centre = n // 2
        lo, hi = centre, centre
    else:
        lo, hi = on[0] - pad, on[-1] + pad
    while hi - lo + 1 < minimum:
        lo, hi = lo - 1, hi + 1
    lo, hi = max(lo, 0), min(hi, n - 1)
    if hi - lo + 1 < minimum:
        lo, hi = (0, minimum - 1) if lo == 0 else (n - minimum, n - 1)
    return ContactProfile(profile.x[lo:hi + 1], profile.y[lo:hi + 1], profile.source)


def _signed_peak(a):
    a = np.asarray(a, dtype=float)
    return float(a[np.argmax(np.abs(a))]) if a.size else float("nan")


def _simulate_one(cfg, inc, out_dir):
    """Run the pipeline for one inclination; returns (row, files, stage status)."""
    files = []
    stages = {}
    sub = os.path.join(out_dir, f"aux_{_tag(inc)}")
    os.makedirs(sub, exist_ok=True)

    def path(name):
        p = os.path.join(sub, name)
        files.append(p)
        return p

    row = {"inclination": float(inc), "status": "ok"}
    stage = "generate"
    try:
        model = build_lattice(cfg.lattice.with_inclination(inc))
        model.write_text(path("model.txt"))
        row["n_nodes"], row["n_elements"] = model.n_nodes, len(model.elements)
        stages["generate"] = "ok"

        stage = "simulate"
        indenter = Indenter.touching(model, cfg.indenter_radius, cfg.total_travel)
        history = simulate_indentation(
            model, indenter, cfg.solve, cfg.n_steps,
            penalty=default_penalty(model, cfg.penalty_factor),
        )
        history.to_csv(path("indentation.csv"))
        history.face_to_csv(-1, path("face_final.csv"))
        stages["simulate"] = "ok"

        stage = "metrics"
        final = history.steps[-1]
        cp = curvature_profile(final.deformed_face, cfg.smoothing_window)
        write_curvature_csv(path("curvature.csv"), cp)
        zone = contact_zone(final.deformed_face, final.contact_point_forces)
        write_profile_csv(path("face_contact_zone.csv"), zone)
        r2 = conformity_radius(zone, cfg.radius_method)
        travel = history.travel
        fstats = force_stats(travel, history.contact_resultants)
        interior = model.interior_nodes
        ly = cfg.lattice.cell.periods[1]
        cl = extract_centerline(
            model.nodes[interior], final.displacements[interior, 1], 0.0, 0.5 * ly,
            stations=2 * cfg.lattice.cols,
        )
        write_centerline_csv(path("centerline.csv"), cl)
        ports = history.port_reaction_table
        row.update({
            "average_curvature_per_mm": cp.average_curvature,
            "R2_fit_radius_mm": r2,
            "curvature_ratio": curvature_ratio(cfg.indenter_radius, r2),
            "contact_force": {"mean_N": fstats.mean, "sd_N": fstats.sd, "peak_N": fstats.peak,
                              "travel_at_peak_mm": fstats.t_peak},
            "peak_port_reactions_N": {f"P{i + 1}": _signed_peak(ports[:, i]) for i in range(3)},
            "max_penetration_mm": max(s.max_penetration for s in history.steps),
            "max_balance_error_N": max(float(np.abs(s.balance()).max()) for s in history.steps),
            "min_contact_point_force_N": min(float(s.contact_point_forces.min()) for s in history.steps),
            "final_contact_force_N": final.contact_force_resultant,
            "centerline": {"peak_eyy": _signed_peak(cl.eyy), "peak_v_mm": _signed_peak(cl.v)},
            "warnings": list(history.warnings),
        })
        stages["metrics"] = "ok"

        stage = "torque"
        schedule = schedule_from_dict(cfg.schedule, cfg.geometry)
        tc = torque_curve(history, cfg.geometry, schedule)
        tc.to_csv(path("torque.csv"))
        grid = tc.at_grasp(np.array(GRASP_GRID))
        row["torque"] = {
            "grasp_N": list(GRASP_GRID),
            "tau_Nmm": grid.tolist(),
            "demand_Nmm": np.abs(grid).tolist(),
            "final_tau_Nmm": float(tc.tau[-1]),
            "final_grasp_N": float(tc.grasp[-1]),
        }
        stages["torque"] = "ok"

        stage = "plots"
        write_plot(path("force_travel.svg"),
                   [(travel, history.contact_resultants, "contact")]
                   + [(travel, ports[:, i], f"P{i + 1}") for i in range(3)],
                   title=f"Aux({inc:g}) forces", xlabel="indenter travel (mm)", ylabel="force (N)")
        write_plot(path("curvature.svg"), [(cp.x, cp.k, "k(x)")],
                   title=f"Aux({inc:g}) face curvature", xlabel="x (mm)", ylabel="k (1/mm)")
        write_plot(path("torque_grasp.svg"), [(tc.grasp, np.abs(tc.tau), "|tau|")],
                   title=f"Aux({inc:g}) torque demand", xlabel="grasping force (N)",
                   ylabel="torque (N mm)")
        stages["plots"] = "ok"
    except (AuxgripError, ValueError, ArithmeticError) as exc:
        stages[stage] = "failed"
        row["status"] = "failed"
        row["failed_stage"] = stage
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["traceback_tail"] = traceback.format_exc().strip().splitlines()[-1]
    return row, files, stages


def _job(args):
    return _simulate_one(*args)


def _data_path(name):
    return str(resources.files("auxgrip").joinpath("data", name))


def measured_rows(cfg, out_dir):
    """Replay the shipped experiment fixtures through the measured-data path."""
    files = []
    sub = os.path.join(out_dir, "measured")
    os.makedirs(sub, exist_ok=True)
    with open(_data_path("curvature_ratio_pairs.json"), encoding="utf-8") as fh:
        pairs = json.load(fh)
    with open(_data_path("paper_values.json"), encoding="utf-8") as fh:
        paper = json.load(fh)
    rows, fits = [], []
    for inc in PAPER_SAMPLES:
        key = str(inc)
        series = load_series(_data_path(f"aux_{inc}.csv"), label=key)
        f = fit_series(series)
        fits += list(f.values())
        for ch, fr in f.items():
            p = os.path.join(sub, f"fit_aux_{inc}_{ch}.csv")
            fr.to_csv(p)
            files.append(p)
        prof = read_profile_csv(_data_path(f"profile_aux_{inc}.csv"))
        cp = curvature_profile(prof, cfg.smoothing_window)
        a = np.loadtxt(_data_path(f"centerline_aux_{inc}.csv"), delimiter=",", skiprows=1)
        cl = extract_centerline(a[:, :2], a[:, 2], 0.0, 2.0)
        fs = force_stats(series.t, series.contact)
        normals = default_port_normals(theta_2=cfg.geometry.theta_2)
        tc = torque_curve(series.port_reaction_series(port_normals=normals), cfg.geometry,
                          schedule_from_dict(cfg.schedule, cfg.geometry))
        p = os.path.join(sub, f"torque_aux_{inc}.csv")
        tc.to_csv(p)
        files.append(p)
        pr = pairs[key]
        rows.append({
            "inclination": float(inc),
            "average_curvature": cp.average_curvature,
            "R1_mm": pr["R1_mm"], "R2_mm": pr["R2_mm"],
            "curvature_ratio": curvature_ratio(pr["R1_mm"], pr["R2_mm"]),
            "contact_force": {"mean_N": fs.mean, "sd_N": fs.sd, "peak_N": fs.peak, "t_peak_s": fs.t_peak},
            "peak_port_reactions_N": {f"P{i + 1}": float(series.forces[:, i].max()) for i in range(3)},
            "centerline": {"peak_eyy": float(cl.eyy.max()), "peak_v_mm": float(cl.v.max())},
            "fit_stats": {ch: fr.summary_row() for ch, fr in f.items()},
            "paper_torque_points_Nmm": paper["torque_points_Nmm"][key],
        })
    p = os.path.join(sub, "fit_summary.csv")
    write_summary_csv(p, fits)
    files.append(p)
    p = os.path.join(sub, "average_curvature.svg")
    write_plot(p, [([r["inclination"] for r in rows], [r["average_curvature"] for r in rows],
                    "fixture", "points")],
               title="Measured average curvature", xlabel="inclination (deg)", ylabel="k avg")
    files.append(p)
    return rows, files


RANK_METRICS = {
    "average_curvature_per_mm": lambda r: r.get("average_curvature_per_mm"),
    "curvature_ratio": lambda r: r.get("curvature_ratio"),
    "R2_fit_radius_mm": lambda r: r.get("R2_fit_radius_mm"),
    "peak_contact_force_N": lambda r: r.get("contact_force", {}).get("peak_N"),
    "final_torque_demand_Nmm": lambda r: abs(r["torque"]["final_tau_Nmm"]) if "torque" in r else None,
}
MEASURED_RANK_METRICS = {
    "average_curvature": lambda r: r["average_curvature"],
    "curvature_ratio": lambda r: r["curvature_ratio"],
    "peak_contact_force_N": lambda r: r["contact_force"]["peak_N"],
}


def rank(rows, metrics):
    """Inclinations ordered by increasing metric value (rows lacking the metric are left out)."""
    out = {}
    for name, get in metrics.items():
        vals = [(get(r), r["inclination"]) for r in rows if r.get("status", "ok") == "ok"]
        vals = [(v, inc) for v, inc in vals if v is not None and np.isfinite(v)]
        out[name] = [inc for _, inc in sorted(vals, key=lambda t: (t[0], t[1]))]
    return out


@dataclass
class ComparisonReport:
    rows: list
    rankings: dict
    measured: list
    measured_rankings: dict
    manifest: dict
    config: dict

    @property
    def ok(self):
        return all(r["status"] == "ok" for r in self.rows) and not self.manifest.get("failures")

    def to_dict(self):
        return _clean({
            "schema": SCHEMA,
            "config": self.config,
            "rows": self.rows,
            "rankings": self.rankings,
            "measured": self.measured,
            "measured_rankings": self.measured_rankings,
            "ok": self.ok,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self):
        lines = ["Auxetic finger comparison", "=" * 25, ""]
        hdr = f"{'incl':>6} {'k_avg 1/mm':>11} {'R2 mm':>9} {'R1/R2':>7} {'F peak N':>9} {'|tau| Nmm':>10}  status"
        lines += ["Simulated indentation", hdr]
        for r in self.rows:
            if r["status"] != "ok":
                lines.append(f"{r['inclination']:>6g} {'-':>11} {'-':>9} {'-':>7} {'-':>9} {'-':>10}  "
                             f"FAILED at {r['failed_stage']}: {r['error']}")
                continue
            lines.append(
                f"{r['inclination']:>6g} {r['average_curvature_per_mm']:>11.5f} {r['R2_fit_radius_mm']:>9.2f} "
                f"{r['curvature_ratio']:>7.3f} {r['contact_force']['peak_N']:>9.3f} "
                f"{abs(r['torque']['final_tau_Nmm']):>10.2f}  ok"
            )
        lines += ["", "Rank order (ascending)"]
        lines += [f"  {k}: {' < '.join(f'{v:g}' for v in vs)}" for k, vs in sorted(self.rankings.items())]
        if self.measured:
            lines += ["", "Shipped experiment fixtures",
                      f"{'incl':>6} {'k_avg':>7} {'R1/R2':>6} {'F mean':>7} {'F sd':>6} {'F peak':>7}"]
            for r in self.measured:
                c = r["contact_force"]
                lines.append(f"{r['inclination']:>6g} {r['average_curvature']:>7.3f} {r['curvature_ratio']:>6.2f} "
                             f"{c['mean_N']:>7.2f} {c['sd_N']:>6.2f} {c['peak_N']:>7.2f}")
            lines += [f"  {k}: {' < '.join(f'{v:g}' for v in vs)}"
                      for k, vs in sorted(self.measured_rankings.items())]
        return "\n".join(lines) + "\n"


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_study(cfg):
    """generate -> simulate -> metrics -> torque for each inclination, then the report.

    Writes per-inclination CSV/SVG artefacts, ``report.json`` (machine
    readable, deterministic), ``report.txt`` and ``manifest.json`` (every file
    with its sha256 plus per-stage status) under ``cfg.output_dir``.
    """
    cfg.validate()
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    jobs = [(cfg, inc, out) for inc in cfg.inclinations]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    rows, files, stages = [], [], {}
    for (row, fl, st), inc in zip(results, cfg.inclinations):
        rows.append(row)
        files += fl
        stages[f"{inc:g}"] = st
    measured, m_rank = [], {}
    failures = [f"{r['inclination']:g}:{r['failed_stage']}" for r in rows if r["status"] != "ok"]
    if cfg.include_fixtures:
        try:
            measured, mf = measured_rows(cfg, out)
            files += mf
            m_rank = rank(measured, MEASURED_RANK_METRICS)
            stages["measured"] = {"ingest": "ok"}
        except (AuxgripError, ValueError, OSError) as exc:
            stages["measured"] = {"ingest": "failed", "error": str(exc)}
            failures.append("measured:ingest")
    report = ComparisonReport(rows, rank(rows, RANK_METRICS), measured, m_rank, {}, cfg.to_dict())
    report.manifest = {"failures": failures}
    for name, text in (("report.json", report.to_json()), ("report.txt", report.to_text())):
        p = os.path.join(out, name)
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(text)
        files.append(p)
    manifest = {
        "schema": "auxgrip.manifest/1",
        "stages": stages,
        "failures": failures,
        "files": {os.path.relpath(p, out): _sha256(p) for p in sorted(set(files)) if os.path.exists(p)},
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    report.manifest = manifest
    return report
