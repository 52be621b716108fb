"""Shape and force metrics for deformed contact faces.

Profiles are sampled curves ``y = f(x)`` with strictly increasing x, taken
either from a simulation (the deformed skin) or from measurements.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import FitError, InputError

MIN_PROFILE_SAMPLES = 7


@dataclass(frozen=True)
class ContactProfile:
    x: np.ndarray
    y: np.ndarray
    source: str = "simulated"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape != y.shape:
            raise InputError("x and y must have the same length")
        if len(x) < MIN_PROFILE_SAMPLES:
            raise InputError(f"a profile needs at least {MIN_PROFILE_SAMPLES} samples, got {len(x)}")
        if np.any(np.diff(x) <= 0):
            raise InputError("profile x must be strictly increasing")
        if self.source not in ("simulated", "measured"):
            raise InputError("source must be 'simulated' or 'measured'")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points, source="simulated"):
        p = np.asarray(points, dtype=float)
        return cls(p[:, 0], p[:, 1], source)

    @property
    def samples(self):
        return np.column_stack([self.x, self.y])


@dataclass(frozen=True)
class CurvatureProfile:
    x: np.ndarray
    k: np.ndarray
    average_curvature: float
    smoothing_window: int
    slope: np.ndarray | None = None

    @property
    def samples(self):
        return np.column_stack([self.x, self.k])


@dataclass(frozen=True)
class CenterlineProfile:
    x: np.ndarray
    eyy: np.ndarray
    v: np.ndarray

    @property
    def samples(self):
        return np.column_stack([self.x, self.eyy, self.v])


@dataclass(frozen=True)
class ForceStats:
    mean: float
    sd: float
    peak: float
    t_peak: float


def local_derivatives(x, y, window=7, edge_degree=4):
    """First and second derivatives by sliding least-squares polynomials.

    Points with a full centred window use a local quadratic. Points within
    half a window of either end reuse the first/last ``window`` samples (a
    one-sided window) with a polynomial of ``edge_degree``, since an
    off-centre quadratic is only first-order accurate in y''.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    half = window // 2
    starts = np.clip(np.arange(n) - half, 0, n - window)
    idx = starts[:, None] + np.arange(window)[None, :]
    scale = (x[-1] - x[0]) / (n - 1)
    # offsets from the window middle keep the local Vandermonde well conditioned
    mid = x[idx[:, half]]
    dx = (x[idx] - mid[:, None]) / scale
    at = (x - mid) / scale
    yw = y[idx]
    d1 = np.empty(n)
    d2 = np.empty(n)
    centred = starts == np.arange(n) - half
    for mask, deg in ((centred, 2), (~centred, edge_degree)):
        if not mask.any():
            continue
        p = np.arange(deg + 1)
        V = dx[mask][:, :, None] ** p[None, None, :]
        Q, R = np.linalg.qr(V)
        coef = np.linalg.solve(R, np.einsum("nki,nk->ni", Q, yw[mask])[..., None])[..., 0]
        t = at[mask][:, None]
        d1[mask] = (coef[:, 1:] * p[1:] * t ** (p[1:] - 1)).sum(axis=1) / scale
        d2[mask] = (coef[:, 2:] * p[2:] * (p[2:] - 1) * t ** (p[2:] - 2)).sum(axis=1) / scale**2
    return d1, d2


def curvature_profile(profile, smoothing_window=7, edge_degree=4):
    """Pointwise curvature ``k = |y''| / (1 + y'^2)^(3/2)`` and its mean."""
    w = int(smoothing_window)
    if w % 2 == 0 or w < 5:
        raise InputError("smoothing_window must be odd and >= 5")
    if w > len(profile.x):
        raise InputError("smoothing_window exceeds the number of samples")
    if edge_degree < 2 or edge_degree >= w:
        raise InputError("edge_degree must be in [2, window)")
    d1, d2 = local_derivatives(profile.x, profile.y, w, edge_degree)
    k = np.abs(d2) / (1.0 + d1**2) ** 1.5
    return CurvatureProfile(profile.x.copy(), k, float(k.mean()), w, d1)


def _as_points(profile):
    if isinstance(profile, ContactProfile):
        return profile.samples
    return np.asarray(profile, dtype=float).reshape(-1, 2)


def fit_circle_params(profile, refine_steps=1):
    """Kasa algebraic fit refined by Gauss-Newton on geometric distances.

    Returns ``(xc, yc, radius)``.
    """
    p = _as_points(profile)
    if len(p) < 3:
        raise InputError("circle fit needs at least 3 points")
    mu = p.mean(axis=0)
    q = p - mu
    scale = np.sqrt((q**2).sum(axis=1).mean())
    if scale == 0:
        raise FitError("all points coincide")
    q = q / scale
    sv = np.linalg.svd(q, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise FitError("points are collinear: circle radius is infinite")
    A = np.column_stack([q, np.ones(len(q))])
    b = -(q**2).sum(axis=1)
    (D, E, F), *_ = np.linalg.lstsq(A, b, rcond=None)
    c = np.array([-D / 2, -E / 2])
    r2 = c @ c - F
    if r2 <= 0:
        raise FitError("algebraic circle fit failed")
    r = np.sqrt(r2)
    for _ in range(refine_steps):
        diff = q - c
        dist = np.linalg.norm(diff, axis=1)
        res = dist - r
        J = np.column_stack([-diff / dist[:, None], -np.ones(len(q))])
        step, *_ = np.linalg.lstsq(J, -res, rcond=None)
        c = c + step[:2]
        r = r + step[2]
    if not np.isfinite(r) or r <= 0 or r > 1e8:
        raise FitError("degenerate circle fit (radius not finite)")
    xc, yc = c * scale + mu
    return float(xc), float(yc), float(r * scale)


def fit_circle(profile, refine_steps=1):
    """Radius of the best-fit circle through the profile samples."""
    return fit_circle_params(profile, refine_steps)[2]


def apex_radius(profile, smoothing_window=7):
    """Local radius 1/k at the apex (sample farthest from the end-to-end chord)."""
    cp = curvature_profile(profile, smoothing_window)
    x, y = profile.x, profile.y
    chord = y[0] + (y[-1] - y[0]) * (x - x[0]) / (x[-1] - x[0])
    i = int(np.argmax(np.abs(y - chord)))
    if cp.k[i] <= 0:
        raise FitError("zero curvature at the apex")
    return 1.0 / cp.k[i]


def conformity_radius(profile, method="fit"):
    """R2 of the deformed face: whole-face circle fit (default) or apex radius."""
    if method == "fit":
        return fit_circle(profile)
    if method == "apex":
        return apex_radius(profile)
    raise InputError(f"unknown radius method {method!r}")


def curvature_ratio(r1, r2):
    """Object radius over fitted face radius; 1 means perfect conformity."""
    if r1 <= 0 or r2 <= 0:
        raise InputError("radii must be positive")
    return r1 / r2


def extract_centerline(coords, uy, line_y, band, stations=None):
    """Vertical strain and displacement along a horizontal line.

    Nodes with ``|y - line_y| <= band`` are grouped into x stations (unique x
    values, or ``stations`` equal-width bins). At each station ``uy`` is
    regressed linearly on ``y``; the slope is ``e_yy`` and the value at
    ``line_y`` is ``v``. Stations without two distinct y values are skipped.
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    uy = np.asarray(uy, dtype=float).ravel()
    if band < 0:
        raise InputError("band must be non-negative")
    sel = np.abs(coords[:, 1] - line_y) <= band
    if sel.sum() < 2:
        raise InputError(f"fewer than 2 nodes within {band} mm of y = {line_y}")
    x, y, u = coords[sel, 0], coords[sel, 1], uy[sel]
    if stations is None:
        keys = np.round(x, 9)
        uniq, label = np.unique(keys, return_inverse=True)
    else:
        edges = np.linspace(x.min(), x.max(), int(stations) + 1)
        label = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, int(stations) - 1)
        uniq = np.arange(int(stations))
    xs, es, vs = [], [], []
    for k in range(len(uniq)):
        m = label == k
        if m.sum() < 2 or np.ptp(y[m]) == 0:
            continue
        slope, intercept = np.polyfit(y[m] - line_y, u[m], 1)
        xs.append(x[m].mean())
        es.append(slope)
        vs.append(intercept)
    if not xs:
        raise InputError("no station has two distinct y values inside the band")
    order = np.argsort(xs)
    return CenterlineProfile(np.array(xs)[order], np.array(es)[order], np.array(vs)[order])


def force_stats(t, f=None):
    """Mean, sample SD (N-1), peak and time of peak of a force series."""
    if f is None:
        arr = np.asarray(t, dtype=float).reshape(-1, 2)
        t, f = arr[:, 0], arr[:, 1]
    t = np.asarray(t, dtype=float).ravel()
    f = np.asarray(f, dtype=float).ravel()
    if len(f) < 2 or len(t) != len(f):
        raise InputError("force_stats needs at least 2 (t, f) samples")
    i = int(np.argmax(f))
    return ForceStats(float(f.mean()), float(f.std(ddof=1)), float(f[i]), float(t[i]))


def _read_columns(path, names):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [n for n in names if n not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path}: missing columns {missing}")
        rows = [[float(r[n]) for n in names] for r in reader]
    return np.array(rows, dtype=float).reshape(-1, len(names))


def _write_columns(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def read_profile_csv(path, source="measured"):
    a = _read_columns(path, ["x_mm", "y_mm"])
    return ContactProfile(a[:, 0], a[:, 1], source)


def write_profile_csv(path, profile):
    _write_columns(path, ["x_mm", "y_mm"], [profile.x, profile.y])


def write_curvature_csv(path, cp):
    _write_columns(path, ["x_mm", "k_per_mm"], [cp.x, cp.k])


def write_centerline_csv(path, cl):
    _write_columns(path, ["x_mm", "eyy", "v_mm"], [cl.x, cl.eyy, cl.v])


def read_force_csv(path):
    a = _read_columns(path, ["t_s", "f_N"])
    return a[:, 0], a[:, 1]


def write_force_csv(path, t, f):
    _write_columns(path, ["t_s", "f_N"], [t, f])
