"""Experiment data reduction: strain-gauge beams, FSR channel, polynomial fits with bands."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import FitError, IngestionError, InputError

GAUGE_FACTOR_CERT = 2.10
GAUGE_FACTOR_TOL = 0.01  # relative
STRAIN_COLUMNS = ("eps1_ue", "eps2_ue", "eps3_ue")
SCHEMAS = {
    "default": ("t_s",) + STRAIN_COLUMNS + ("fsr_N",),
    "raw": ("t_s",) + STRAIN_COLUMNS + ("fsr_V",),
}


@dataclass(frozen=True)
class BeamGaugeParams:
    gauge_factor: float = 2.1
    youngs_modulus: float = 3.30e9  # Pa
    width: float = 10.4  # mm
    height: float = 1.57  # mm
    length: float = 8.0  # mm
    mode: str = "paper"  # "paper": P = G*E*eps*b*h^2/(6L); "bridge": eps = reading / G

    def __post_init__(self):
        for name in ("gauge_factor", "youngs_modulus", "width", "height", "length"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"{name} must be positive")
        if self.mode not in ("paper", "bridge"):
            raise InputError("mode must be 'paper' or 'bridge'")
        if abs(self.gauge_factor - GAUGE_FACTOR_CERT) > GAUGE_FACTOR_TOL * GAUGE_FACTOR_CERT:
            warnings.warn(
                f"gauge factor {self.gauge_factor} is outside the certificate value "
                f"{GAUGE_FACTOR_CERT} +/- {GAUGE_FACTOR_TOL:.0%}",
                UserWarning, stacklevel=3,
            )

    @property
    def newtons_per_microstrain(self):
        b, h, L = self.width * 1e-3, self.height * 1e-3, self.length * 1e-3
        k = self.youngs_modulus * b * h**2 / (6.0 * L) * 1e-6
        return k * self.gauge_factor if self.mode == "paper" else k / self.gauge_factor


def strain_to_force(eps_microstrain, params=None):
    """Tip force (N) of a cantilever gauge beam from its surface strain reading (microstrain)."""
    params = params or BeamGaugeParams()
    eps = np.asarray(eps_microstrain, dtype=float)
    out = eps * params.newtons_per_microstrain
    return float(out) if out.ndim == 0 else out


def force_to_strain(force, params=None):
    """Inverse of :func:`strain_to_force`."""
    params = params or BeamGaugeParams()
    out = np.asarray(force, dtype=float) / params.newtons_per_microstrain
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FsrCalibration:
    """Piecewise-linear volts -> newtons table; no extrapolation."""

    volts: tuple
    newtons: tuple

    def __post_init__(self):
        v = np.asarray(self.volts, dtype=float)
        if len(v) < 2 or len(v) != len(self.newtons) or np.any(np.diff(v) <= 0):
            raise InputError("calibration needs >= 2 points with strictly increasing volts")

    def __call__(self, volts, row_offset=2):
        v = np.asarray(volts, dtype=float)
        lo, hi = self.volts[0], self.volts[-1]
        bad = np.flatnonzero((v < lo) | (v > hi))
        if bad.size:
            raise IngestionError(
                f"FSR reading {v[bad[0]]} V outside calibration range [{lo}, {hi}] V",
                row=int(bad[0]) + row_offset,
            )
        return np.interp(v, self.volts, self.newtons)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(tuple(d["volts"]), tuple(d["newtons"]))


@dataclass
class MeasurementSeries:
    t: np.ndarray
    strain: np.ndarray  # (n, 3) microstrain
    contact: np.ndarray  # FSR force, N
    label: str = ""
    contact_raw_volts: np.ndarray | None = None
    forces: np.ndarray | None = None  # (n, 3) port forces, N, when converted
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def channel(self, name):
        """``P1``..``P3`` (converted forces), ``eps1``..``eps3`` or ``contact``."""
        if name in ("P1", "P2", "P3"):
            if self.forces is None:
                raise InputError("series was loaded without strain conversion")
            return self.forces[:, int(name[1]) - 1]
        if name in ("eps1", "eps2", "eps3"):
            return self.strain[:, int(name[3]) - 1]
        if name == "contact":
            return self.contact
        raise InputError(f"unknown channel {name!r}")

    def port_reaction_series(self, port_positions=None, port_normals=None):
        from .mechanism import PortReactions

        if self.forces is None:
            raise InputError("series was loaded without strain conversion")
        return [PortReactions(*row, port_positions=port_positions, port_normals=port_normals)
                for row in self.forces]


def load_series(source, schema="default", params=None, convert=True, calibration=None,
                label=None):
    """Read an experiment CSV.

    ``source`` is a path or a text stream. Schema ``default`` expects
    ``t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N``; ``raw`` expects ``fsr_V`` and a
    :class:`FsrCalibration`. Errors name the 1-based file line.
    """
    if schema not in SCHEMAS:
        raise InputError(f"unknown schema {schema!r}; expected one of {sorted(SCHEMAS)}")
    cols = SCHEMAS[schema]
    if schema == "raw" and calibration is None:
        raise InputError("the raw schema needs an FSR calibration table")
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
        name = str(source)
    else:
        text = source.read()
        name = getattr(source, "name", "<stream>")
    lines = [ln for ln in text.splitlines()]
    if not any(ln.strip() for ln in lines):
        raise IngestionError(f"{name}: empty file")
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    missing = [c for c in cols if c not in header]
    if missing:
        raise IngestionError(f"{name}: missing column(s) {missing}", row=1)
    idx = [header.index(c) for c in cols]
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        if len(rec) != len(header):
            raise IngestionError(f"{name}: expected {len(header)} fields, got {len(rec)}", row=lineno)
        try:
            vals = [float(rec[i]) for i in idx]
        except ValueError:
            raise IngestionError(f"{name}: unparseable value in {rec!r}", row=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise IngestionError(f"{name}: non-finite value", row=lineno)
        if rows and vals[0] < rows[-1][1][0]:
            raise IngestionError(f"{name}: time decreases ({vals[0]} < {rows[-1][1][0]})", row=lineno)
        rows.append((lineno, vals))
    if not rows:
        raise IngestionError(f"{name}: no data rows")
    a = np.array([v for _, v in rows])
    t, strain, fsr = a[:, 0], a[:, 1:4], a[:, 4]
    volts = None
    if schema == "raw":
        volts = fsr
        try:
            fsr = calibration(volts)
        except IngestionError as exc:
            line = rows[exc.row - 2][0] if exc.row is not None else None
            raise IngestionError(f"{name}: {str(exc).split(': ', 1)[-1]}", row=line) from None
    forces = strain_to_force(strain, params) if convert else None
    return MeasurementSeries(t, strain, fsr, label or "", volts, forces, {"path": name, "schema": schema})


def write_series(path, t, strain, fsr, schema="default"):
    cols = SCHEMAS[schema]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i in range(len(t)):
            w.writerow([repr(float(t[i]))] + [repr(float(v)) for v in strain[i]] + [repr(float(fsr[i]))])


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray  # ascending powers of x
    degree: int
    n_points: int
    dof: int
    rss: float
    r2: float
    adj_r2: float
    level: float
    x: np.ndarray
    y: np.ndarray
    fitted: np.ndarray
    conf_lo: np.ndarray
    conf_hi: np.ndarray
    pred_lo: np.ndarray
    pred_hi: np.ndarray
    label: str = ""

    @property
    def residuals(self):
        return self.y - self.fitted

    def summary_row(self):
        return {"force": self.label, "N": self.n_points, "DF": self.dof, "RSS": self.rss,
                "R2": self.r2, "AdjR2": self.adj_r2}

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "fit", "conf_lo", "conf_hi", "pred_lo", "pred_hi"])
            for row in zip(self.x, self.y, self.fitted, self.conf_lo, self.conf_hi,
                           self.pred_lo, self.pred_hi):
                w.writerow([repr(float(v)) for v in row])


class _PolyDesign:
    """Vandermonde on x mapped to [-1, 1] with its thin QR factorisation."""

    def __init__(self, x, degree):
        self.lo, self.hi = float(x.min()), float(x.max())
        self.degree = degree
        self.Q, self.R = np.linalg.qr(self.matrix(x))

    def scaled(self, x):
        if self.hi == self.lo:
            return np.zeros_like(x)
        return (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)

    def matrix(self, x):
        return np.vander(self.scaled(np.asarray(x, dtype=float)), self.degree + 1, increasing=True)


def _ascending_coefficients(beta, lo, hi):
    """Convert coefficients in the scaled variable to powers of the raw x."""
    if hi == lo:
        return beta.copy()
    p = np.polynomial.Polynomial(beta)
    # s = a*x + c
    a = 2.0 / (hi - lo)
    c = -(lo + hi) / (hi - lo)
    out = p(np.polynomial.Polynomial([c, a])).coef
    # composition drops trailing zero coefficients
    return np.pad(out, (0, len(beta) - len(out)))


def fit_with_bands(x, y, degree=9, level=0.95, label=""):
    """Ordinary least-squares polynomial fit with pointwise confidence and prediction bands."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = len(x)
    tag = f"{label}: " if label else ""
    if len(y) != n:
        raise FitError(f"{tag}x and y lengths differ")
    if degree < 0 or int(degree) != degree:
        raise FitError(f"{tag}degree must be a non-negative integer")
    degree = int(degree)
    if not 0 < level < 1:
        raise FitError(f"{tag}level must be in (0, 1)")
    if n <= degree + 1:
        raise FitError(f"{tag}need more than degree + 1 = {degree + 1} points, got {n}")
    if len(np.unique(x)) < degree + 1:
        raise FitError(f"{tag}rank-deficient design: {len(np.unique(x))} distinct x for degree {degree}")
    design = _PolyDesign(x, degree)
    Q, R = design.Q, design.R
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-12 * diag.max():
        raise FitError(f"{tag}rank-deficient design matrix")
    beta = np.linalg.solve(R, Q.T @ y)
    fitted = Q @ (Q.T @ y)
    resid = y - fitted
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    dof = n - (degree + 1)
    if tss == 0:
        r2 = 1.0
    else:
        r2 = 1.0 - rss / tss
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - degree - 1)
    s = math.sqrt(rss / dof)
    tq = float(stats.t.ppf(0.5 + level / 2.0, dof))
    lev = np.sqrt((Q**2).sum(axis=1))  # sqrt(x0' (X'X)^-1 x0) at the data points
    half_c = tq * s * lev
    half_p = tq * s * np.sqrt(1.0 + lev**2)
    coef = _ascending_coefficients(beta, design.lo, design.hi)
    return FitResult(coef, degree, n, dof, rss, r2, adj, level, x, y, fitted,
                     fitted - half_c, fitted + half_c, fitted - half_p, fitted + half_p, label)


def band_at(fit, x0):
    """Fit value and (conf_lo, conf_hi, pred_lo, pred_hi) at new abscissae."""
    design = _PolyDesign(fit.x, fit.degree)
    X0 = design.matrix(np.atleast_1d(np.asarray(x0, dtype=float)))
    # rows of X0 R^-1 give the leverage in the orthonormal basis
    W = np.linalg.solve(design.R.T, X0.T).T
    lev = np.sqrt((W**2).sum(axis=1))
    yhat = W @ (design.Q.T @ fit.y)
    s = math.sqrt(fit.rss / fit.dof)
    tq = float(stats.t.ppf(0.5 + fit.level / 2.0, fit.dof))
    hc, hp = tq * s * lev, tq * s * np.sqrt(1 + lev**2)
    return yhat, np.column_stack([yhat - hc, yhat + hc, yhat - hp, yhat + hp])


def fit_series(series, degree=9, level=0.95, channels=("P1", "P2", "P3")):
    """Fit each named channel of a series against time."""
    out = {}
    for ch in channels:
        label = f"{ch}({series.label})" if series.label else ch
        out[ch] = fit_with_bands(series.t, series.channel(ch), degree, level, label)
    return out


def write_summary_csv(path, fits):
    """Table of N, DF, RSS, R2 and adjusted R2 per fitted channel."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["force", "N", "DF", "RSS", "R2", "AdjR2"])
        for f in fits:
            w.writerow([f.label, f.n_points, f.dof, f"{f.rss:.5f}", f"{f.r2:.5f}", f"{f.adj_r2:.5f}"])


def format_summary(fits):
    lines = [f"{'Force':<12} {'N':>4} {'DF':>4} {'RSS':>10} {'R2':>9} {'AdjR2':>9}"]
    for f in fits:
        lines.append(f"{f.label:<12} {f.n_points:>4} {f.dof:>4} {f.rss:>10.5f} {f.r2:>9.5f} {f.adj_r2:>9.5f}")
    return "\n".join(lines)
