"""Regenerate the shipped data fixtures in src/auxgrip/data.

The published figures cannot be digitised here, so each fixture is
synthesised to reproduce the reported summary numbers exactly:

* per-sample gauge files (44 samples, t = 0..4.3 s): for each port channel
  a smooth force trend plus a residual orthogonal to the degree-9 design,
  scaled so the fit has the tabulated RSS and R^2; the channel is offset so
  its maximum is the tabulated peak, then stored as microstrain;
* the Aux(0) contact-force series with the reported mean, SD and peak time;
* face profiles whose mean curvature equals the reported averages;
* centreline displacement fields with the reported peak strain/displacement;
* (R1, R2) pairs giving the reported curvature ratios.

Run from the repository root: ``python3 tools/make_fixtures.py``.
"""
import json
import math
import os
import sys

import numpy as np
from scipy.optimize import brentq

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from auxgrip.sensors import BeamGaugeParams, force_to_strain, write_series  # noqa: E402

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "auxgrip", "data")
SAMPLES = (0, 30, 45, 60)
N_POINTS, DEGREE = 44, 9
T = np.round(np.arange(N_POINTS) * 0.1, 10)

# Table 4: (RSS, R2, AdjR2) per (port, inclination)
STATS = {
    (1, 0): (0.20861, 0.98901, 0.9861), (2, 0): (0.26973, 0.95084, 0.93782),
    (3, 0): (0.01024, 0.99784, 0.99727), (1, 30): (0.52171, 0.82380, 0.77716),
    (2, 30): (1.25887, 0.93373, 0.91619), (3, 30): (1.18413, 0.96866, 0.95960),
    (1, 45): (0.04107, 0.99031, 0.98775), (2, 45): (0.04982, 0.98487, 0.98087),
    (3, 45): (0.05660, 0.96263, 0.95273), (1, 60): (0.06151, 0.26652, 0.07236),
    (2, 60): (0.00542, 0.73863, 0.66944), (3, 60): (0.13837, 0.29330, 0.10623),
}
# Table 3: peak port forces and contact force
PEAKS = {
    0: (0.86, 1.25, 2.35, 9.65), 30: (0.93, 2.08, 3.46, 5.60),
    45: (1.25, 1.05, 0.79, 4.51), 60: (0.26, 0.09, 0.46, 3.41),
}
CONTACT_STATS_0 = {"mean": 8.51, "sd": 1.31, "peak": 9.59, "t_peak": 1.6}
AVG_CURVATURE = {0: 1.013, 30: 1.034, 45: 1.36, 60: 1.267}
CURVATURE_RATIO = {0: 0.51, 30: 0.48, 45: 0.61, 60: 0.53}
CENTERLINE = {0: (0.09, 5.29), 30: (0.02, 2.28), 45: (0.11, 12.50), 60: (0.03, 8.49)}
TORQUE_POINTS = {
    0: [[0.2, 22.62], [0.8, 87.2]],
    30: [[0.2, 17.17], [0.4, 30.75], [0.8, 35.7]],
    45: [[0.2, 10.47], [0.8, 34.8]],
    60: [[0.2, 6.73], [0.6, 3.36], [0.8, 5.58]],
}
R1 = 26.5


def design_q():
    s = 2 * T / T[-1] - 1
    Q, _ = np.linalg.qr(np.vander(s, DEGREE + 1, increasing=True))
    return Q


def channel(rng, rss, r2, peak, Q):
    """Samples whose degree-9 OLS fit has exactly this RSS and R^2, maximum = peak."""
    rise = 0.4 + 0.4 * rng.random()
    wobble = 0.1 + 0.2 * rng.random()
    trend = 1 - np.exp(-T / rise) + wobble * np.sin(1.7 * T + rng.random())
    fit = Q @ (Q.T @ trend)
    fit -= fit.mean()
    noise = rng.standard_normal(N_POINTS)
    noise -= Q @ (Q.T @ noise)  # orthogonal to every design column (incl. intercept)
    noise *= math.sqrt(rss) / np.linalg.norm(noise)
    tss = rss / (1 - r2)
    fit *= math.sqrt(tss - rss) / np.linalg.norm(fit)
    y = fit + noise
    return y + (peak - y.max())


def contact_series(mean, sd, peak, t_peak):
    """Rise-and-hold force with a single overshoot at ``t_peak``."""
    i_peak = int(round(t_peak / 0.1))
    z_target = (peak - mean) / sd

    def shape(a):
        return (1 - np.exp(-T / 0.25)) + a * np.exp(-(((T - t_peak) / 0.25) ** 2))

    def excess(a):
        b = shape(a)
        z = (b - b.mean()) / b.std(ddof=1)
        return z[i_peak] - z_target

    a = brentq(excess, 0.0, 5.0)
    b = shape(a)
    z = (b - b.mean()) / b.std(ddof=1)
    assert int(np.argmax(z)) == i_peak
    return mean + sd * z


def scaled_contact(peak, rng):
    b = (1 - np.exp(-T / (0.3 + 0.3 * rng.random()))) * (1 + 0.05 * np.sin(2.1 * T))
    return peak * b / b.max()


def parabola_profile(target, n=201):
    """y = a x^2 on [-0.5, 0.5] whose sampled curvature k = 2a/(1+4a^2x^2)^1.5 averages to target.

    The sampled mean is increasing in ``a`` and bounded by 2 on a unit-wide
    window, so every reported average (all below 1.4) has a unique root.
    """
    x = np.linspace(-0.5, 0.5, n)

    def mean_k(a):
        return float(np.mean(2 * a / (1 + 4 * a * a * x * x) ** 1.5))

    a = brentq(lambda a: mean_k(a) - target, 1e-6, 1e3, xtol=1e-15, rtol=1e-15)
    return x, a * x * x, a


def centerline_field(eyy_peak, v_peak, line_y=0.0):
    xs = np.linspace(-30.0, 30.0, 61)
    ys = line_y + np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    bump = np.exp(-((X / 12.0) ** 2))
    uy = v_peak * bump + eyy_peak * bump * (Y - line_y)
    return X.ravel(), Y.ravel(), uy.ravel()


def write_csv(path, header, cols):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def main():
    os.makedirs(DATA, exist_ok=True)
    rng = np.random.default_rng(20240917)
    Q = design_q()
    params = BeamGaugeParams()
    generated = {}
    contact0 = contact_series(**CONTACT_STATS_0)
    for inc in SAMPLES:
        forces = np.column_stack([
            channel(rng, STATS[(p, inc)][0], STATS[(p, inc)][1], PEAKS[inc][p - 1], Q)
            for p in (1, 2, 3)
        ])
        fsr = contact0 if inc == 0 else scaled_contact(PEAKS[inc][3], rng)
        write_series(os.path.join(DATA, f"aux_{inc}.csv"), T, force_to_strain(forces, params), fsr)
        for p in (1, 2, 3):
            rss, r2, _ = STATS[(p, inc)]
            generated[f"P{p}({inc})"] = {
                "N": N_POINTS, "DF": N_POINTS - DEGREE - 1, "RSS": rss, "R2": r2,
                "AdjR2": 1 - (1 - r2) * (N_POINTS - 1) / (N_POINTS - DEGREE - 1),
                "peak": PEAKS[inc][p - 1],
            }
    with open(os.path.join(DATA, "fixture_stats.json"), "w", encoding="utf-8") as fh:
        json.dump(generated, fh, indent=2, sort_keys=True)

    # raw-volts variant of Aux(0) with a linear-ish calibration table
    cal = {"volts": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0], "newtons": [0.0, 1.5, 3.5, 6.0, 9.0, 12.5]}
    with open(os.path.join(DATA, "fsr_calibration.json"), "w", encoding="utf-8") as fh:
        json.dump(cal, fh, indent=2)
    volts = np.interp(contact0, cal["newtons"], cal["volts"])
    strain0 = np.loadtxt(os.path.join(DATA, "aux_0.csv"), delimiter=",", skiprows=1)[:, 1:4]
    write_series(os.path.join(DATA, "aux_0_raw.csv"), T, strain0, volts, schema="raw")

    write_csv(os.path.join(DATA, "contact_force_aux_0.csv"), ["t_s", "f_N"], [T, contact0])

    profiles = {}
    for inc in SAMPLES:
        x, y, a = parabola_profile(AVG_CURVATURE[inc])
        write_csv(os.path.join(DATA, f"profile_aux_{inc}.csv"), ["x_mm", "y_mm"], [x, y])
        profiles[str(inc)] = {"a": a, "average_curvature": AVG_CURVATURE[inc]}
        X, Y, U = centerline_field(*CENTERLINE[inc])
        write_csv(os.path.join(DATA, f"centerline_aux_{inc}.csv"), ["x_mm", "y_mm", "uy_mm"], [X, Y, U])

    pairs = {str(inc): {"R1_mm": R1, "R2_mm": R1 / CURVATURE_RATIO[inc],
                        "ratio": CURVATURE_RATIO[inc]} for inc in SAMPLES}
    with open(os.path.join(DATA, "curvature_ratio_pairs.json"), "w", encoding="utf-8") as fh:
        json.dump(pairs, fh, indent=2, sort_keys=True)

    values = {
        "table3_peaks_N": {str(k): dict(zip(["P1", "P2", "P3", "Pc"], v)) for k, v in PEAKS.items()},
        "contact_force_aux_0": dict(CONTACT_STATS_0, peak_table3=9.65),
        "table4": {f"P{p}({inc})": dict(zip(["RSS", "R2", "AdjR2"], STATS[(p, inc)]))
                   for (p, inc) in STATS},
        "table4_N": N_POINTS,
        "table4_DF": N_POINTS - DEGREE - 1,
        "bar_graph_R2_P1_0": 0.94084,
        "average_curvature": {str(k): v for k, v in AVG_CURVATURE.items()},
        "curvature_ratio": {str(k): v for k, v in CURVATURE_RATIO.items()},
        "centerline_peaks": {str(k): {"eyy": v[0], "v_mm": v[1]} for k, v in CENTERLINE.items()},
        "torque_points_Nmm": {str(k): v for k, v in TORQUE_POINTS.items()},
        "strain_100ue_N": 0.3701,
        "torque_check_Nmm": 47.57,
        "indenter_radius_mm": R1,
    }
    with open(os.path.join(DATA, "paper_values.json"), "w", encoding="utf-8") as fh:
        json.dump(values, fh, indent=2, sort_keys=True)
    with open(os.path.join(DATA, "profile_params.json"), "w", encoding="utf-8") as fh:
        json.dump(profiles, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
