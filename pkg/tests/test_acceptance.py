"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
line; the lines are also collected into the pytest terminal summary.
"""
import json
import math
import time
from importlib import resources

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from test_fem import elliptic_tip, random_frame, tip_load_bc

from auxgrip.contact import Indenter, default_penalty, simulate_indentation
from auxgrip.errors import SingularityError
from auxgrip.fem import CorotationalFrame, cantilever, solve_linear, solve_nonlinear
from auxgrip.frame import Material, rectangular_section
from auxgrip.lattice import (
    LatticeSpec, UnitCellSpec, build_lattice, build_patch, effective_poisson_ratio,
    gibson_ashby_poisson,
)
from auxgrip.mechanism import MechanismGeometry, MechanismState, required_torque
from auxgrip.metrics import (
    ContactProfile, curvature_profile, curvature_ratio, force_stats, read_force_csv,
)
from auxgrip.sensors import fit_series, fit_with_bands, load_series, strain_to_force
from auxgrip.study import RunConfig, run_study


def data(name):
    return resources.files("auxgrip").joinpath("data", name)


def verdict(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@pytest.fixture(scope="module")
def default_study(tmp_path_factory):
    out = tmp_path_factory.mktemp("study_a")
    t0 = time.perf_counter()
    report = run_study(RunConfig(output_dir=str(out)))
    return report, out, time.perf_counter() - t0


def test_criterion_1_curvature_oracle():
    t0 = time.perf_counter()
    worst_k = worst_avg = 0.0
    for r in (10.0, 26.5, 100.0):
        half = min(10.0, 0.5 * r)
        x = np.linspace(-half, half, int(round(2 * half / 0.1)) + 1)
        cp = curvature_profile(ContactProfile(x, np.sqrt(r * r - x * x)))
        worst_k = max(worst_k, np.abs(cp.k * r - 1).max())
        worst_avg = max(worst_avg, abs(cp.average_curvature * r - 1))
    dt = time.perf_counter() - t0
    verdict(1, worst_k < 1e-3 and worst_avg < 1e-3 and dt < 1.0,
            f"max rel err k {worst_k:.2e}, average {worst_avg:.2e}, {dt:.3f} s")


def test_criterion_2_linear_cantilever():
    t0 = time.perf_counter()
    sec, mat, length = rectangular_section(10.4, 1.57), Material(3300.0, 0.35), 8.0
    worst = 0.0
    for n_el in (8, 12, 16):
        h = solve_linear(cantilever(length, n_el, sec, mat), tip_load_bc(n_el, 1.0))
        exact = length**3 / (3 * mat.youngs_modulus * sec.second_moment)
        worst = max(worst, abs(h.final.displacements[-1, 1] / exact - 1))
    dt = time.perf_counter() - t0
    verdict(2, worst < 5e-3 and dt < 1.0, f"max rel err {worst:.2e}, {dt:.3f} s")


def test_criterion_3_nonlinear_cantilever():
    # thin strip so the extensible beam approaches the inextensible elastica
    t0 = time.perf_counter()
    sec, mat, length, n_el = rectangular_section(10.4, 0.2), Material(3300.0, 0.35), 8.0, 16
    EI = mat.youngs_modulus * sec.second_moment
    worst = 0.0
    for alpha in (1.0, 2.0, 5.0):
        h = solve_nonlinear(cantilever(length, n_el, sec, mat), tip_load_bc(n_el, alpha * EI / length**2))
        ux, uy = h.final.displacements[-1, :2]
        xr, yr = elliptic_tip(alpha)
        worst = max(worst, abs(uy / length / yr - 1), abs((length + ux) / length / xr - 1))
    dt = time.perf_counter() - t0
    verdict(3, worst < 0.01 and dt < 10.0, f"max rel err {worst:.2e}, {dt:.2f} s")


def test_criterion_4_tangent_consistency():
    rng = np.random.default_rng(2024)
    worst, max_dofs = 0.0, 0
    for _ in range(20):
        model = random_frame(rng)
        frame = CorotationalFrame(model)
        n = model.n_dofs
        max_dofs = max(max_dofs, n)
        u = np.zeros(n)
        u[0::3] = rng.normal(0, 0.5, model.n_nodes)
        u[1::3] = rng.normal(0, 0.5, model.n_nodes)
        u[2::3] = rng.normal(0, 0.4, model.n_nodes)
        K = frame.tangent(u)[1].toarray()
        Kfd = np.empty_like(K)
        for j in range(n):
            step = 1e-6 if j % 3 < 2 else 1e-7
            e = np.zeros(n)
            e[j] = step
            Kfd[:, j] = (frame.tangent(u + e)[0] - frame.tangent(u - e)[0]) / (2 * step)
        worst = max(worst, np.linalg.norm(K - Kfd) / np.linalg.norm(K))
    verdict(4, worst <= 1e-5 and max_dofs <= 12, f"worst rel err {worst:.2e} over 20 frames")


def test_criterion_5_sign_law():
    nu_re = effective_poisson_ratio(build_patch(UnitCellSpec(), 6, 6))
    nu_conv = effective_poisson_ratio(build_patch(UnitCellSpec(reentrant_angle=30.0), 6, 6))
    hexa = UnitCellSpec(strut_length_h=8.0, strut_length_d=8.0, reentrant_angle=30.0)
    oracle = gibson_ashby_poisson(hexa)
    nu_hex = effective_poisson_ratio(build_patch(hexa, 6, 6))
    rel = abs(nu_hex - oracle) / abs(oracle)
    verdict(5, nu_re < 0 < nu_conv and rel <= 0.10,
            f"re-entrant {nu_re:.3f}, +30 deg {nu_conv:.3f}, hexagon {nu_hex:.3f} vs {oracle:.3f}")


def test_criterion_6_contact_equilibrium(default_study):
    report, _, runtime = default_study
    rows = report.rows
    ok_rows = all(r["status"] == "ok" for r in rows) and len(rows) == 4
    balance = max(r["max_balance_error_N"] for r in rows) if ok_rows else math.inf
    compression = min(r["min_contact_point_force_N"] for r in rows) if ok_rows else -math.inf
    cfg = RunConfig()
    shifts = []
    for r in rows:
        model = build_lattice(cfg.lattice.with_inclination(r["inclination"]))
        h2 = simulate_indentation(
            model, Indenter.touching(model, cfg.indenter_radius, cfg.total_travel), cfg.solve,
            cfg.n_steps, penalty=2 * default_penalty(model, cfg.penalty_factor),
        )
        f1, f2 = r["final_contact_force_N"], h2.steps[-1].contact_force_resultant
        shifts.append(abs(f2 - f1) / f1)
    verdict(6, ok_rows and balance <= 1e-4 and compression >= 0 and max(shifts) < 0.01
            and runtime < 300,
            f"balance {balance:.1e} N, min nodal force {compression:.2e} N, "
            f"penalty shift {max(shifts):.2e}, study {runtime:.1f} s")


def test_criterion_7_strain_conversion():
    p = strain_to_force(100.0)
    eps = np.array([1.0, 100.0, 1234.5, -40.0])
    lin = np.abs(strain_to_force(3 * eps) / (3 * strain_to_force(eps)) - 1).max()
    verdict(7, abs(p - 0.3701) <= 1e-4 and lin <= 1e-12, f"P(100 ue) = {p:.6f} N, linearity {lin:.1e}")


def test_criterion_8_torque():
    g = MechanismGeometry()
    check = MechanismState(phi=90.0, xi=90.0, eta=0.0, mu=90.0, zeta=0.0, theta=0.0)
    tau = required_torque(check, g, 1.0)
    zero = required_torque(MechanismState(0.0, 60.0, -100.0, 45.0), g, 2.0)
    rng = np.random.default_rng(8)
    lin = 0.0
    for _ in range(50):
        s = MechanismState(*rng.uniform(0, 90, 2), rng.uniform(-120, -90), rng.uniform(0, 90))
        f = rng.uniform(0.1, 10)
        t1, t2 = required_torque(s, g, f), required_torque(s, g, 3 * f)
        lin = max(lin, abs(t2 - 3 * t1) / abs(t2))
    try:
        required_torque(MechanismState(45.0, 40.0, -40.0, 45.0), g, 1.0)
        guarded = False
    except SingularityError:
        guarded = True
    verdict(8, abs(tau - 47.57) <= 0.01 and zero == 0.0 and lin <= 1e-12 and guarded,
            f"tau = {tau:.4f} N mm, tau(phi=0) = {zero}, linearity {lin:.1e}, guard {guarded}")


def test_criterion_9_statistics_replay():
    gen = json.loads(data("fixture_stats.json").read_text())
    mismatches = []
    for inc in (0, 30, 45, 60):
        for ch, f in fit_series(load_series(data(f"aux_{inc}.csv"), label=str(inc))).items():
            ref = gen[f"{ch}({inc})"]
            if (f.n_points, f.dof) != (44, 34):
                mismatches.append(f"{ch}({inc}) N/DF")
            for key, got in (("RSS", f.rss), ("R2", f.r2), ("AdjR2", f.adj_r2)):
                if round(got, 3) != round(ref[key], 3):
                    mismatches.append(f"{ch}({inc}) {key}")
    rng = np.random.default_rng(99)
    broken = 0
    for _ in range(100):
        n = int(rng.integers(12, 60))
        x = np.sort(rng.uniform(0, 5, n)) + np.arange(n) * 1e-3
        y = np.polyval(rng.normal(0, 1, 4), x) + rng.normal(0, rng.uniform(0.01, 3), n)
        f = fit_with_bands(x, y, degree=int(rng.integers(1, 6)))
        ok = (f.adj_r2 < f.r2 <= 1.0 and np.all(f.conf_lo <= f.fitted) and np.all(f.fitted <= f.conf_hi)
              and np.all(f.pred_lo < f.conf_lo) and np.all(f.pred_hi > f.conf_hi))
        broken += not ok
    verdict(9, not mismatches and broken == 0,
            f"12 channel fits replayed, mismatches {mismatches or 'none'}, {broken}/100 invariant breaks")


def test_criterion_10_metric_fixtures():
    s = force_stats(*read_force_csv(data("contact_force_aux_0.csv")))
    pairs = json.loads(data("curvature_ratio_pairs.json").read_text())
    ratios = {k: round(curvature_ratio(v["R1_mm"], v["R2_mm"]), 2) for k, v in pairs.items()}
    ok = (abs(s.mean - 8.51) <= 0.05 and abs(s.sd - 1.31) <= 0.05 and abs(s.peak - 9.59) <= 0.01
          and ratios == {"45": 0.61, "60": 0.53, "0": 0.51, "30": 0.48})
    verdict(10, ok, f"mean {s.mean:.3f}, sd {s.sd:.3f}, peak {s.peak:.3f} N, ratios {ratios}")


def test_criterion_11_determinism(default_study, tmp_path):
    _, first, _ = default_study
    run_study(RunConfig(output_dir=str(tmp_path)))
    a = (first / "report.json").read_bytes()
    b = (tmp_path / "report.json").read_bytes()
    verdict(11, a == b, f"report.json {len(a)} bytes, identical {a == b}")
