"""Statics of the rigid-link finger: port reactions to fingertip force to servo torque."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InputError, ScheduleError, SingularityError

SINGULAR_TOL = 1e-6  # rad, distance of (eta + xi) from a multiple of pi
THETA_2 = 30.0  # deg, angle between neighbouring port normals
N_FINGERS = 6


@dataclass(frozen=True)
class MechanismGeometry:
    L_EG: float = 42.72
    R: float = 30.0
    L_OC: float = 128.50
    L_DE: float = 59.78
    L_FE: float = 42.73
    L_FP: float = 110.48
    L_CD: float = 40.09
    L_FH: float = 43.08
    lam: float = 42.0  # stored, not used by the torque relation
    nu: float = 14.0  # stored, not used by the torque relation
    phi_range: tuple = (0.0, 90.0)
    xi_range: tuple = (0.0, 90.0)
    mu_range: tuple = (0.0, 90.0)
    eta_range: tuple = (-120.0, -90.0)
    theta_2: float = THETA_2

    def __post_init__(self):
        for name in ("L_EG", "R", "L_OC", "L_DE", "L_FE", "L_FP", "L_CD", "L_FH"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name, outer in (("phi_range", (0, 90)), ("xi_range", (0, 90)), ("mu_range", (0, 90)),
                            ("eta_range", (-120, -90))):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (float(lo), float(hi)))
            if not (outer[0] <= lo <= hi <= outer[1]):
                raise InputError(f"{name} {lo, hi} must lie within {outer}")

    def contains(self, state):
        """True if every scheduled angle is inside its range."""
        return all(
            lo - 1e-9 <= getattr(state, a) <= hi + 1e-9
            for a, (lo, hi) in (("phi", self.phi_range), ("xi", self.xi_range),
                                ("mu", self.mu_range), ("eta", self.eta_range))
        )

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        for k in ("phi_range", "xi_range", "mu_range", "eta_range"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown mechanism fields {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def load_geometry(path):
    with open(path, encoding="utf-8") as fh:
        return MechanismGeometry.from_dict(json.load(fh))


@dataclass(frozen=True)
class MechanismState:
    """Link angles in degrees. ``theta`` is the tip-force angle from the fingertip normal."""

    phi: float
    xi: float
    eta: float
    mu: float
    zeta: float = 0.0
    theta: float = 0.0

    def with_theta(self, theta):
        return replace(self, theta=float(theta))


@dataclass(frozen=True)
class PortReactions:
    p1: float
    p2: float
    p3: float
    port_positions: np.ndarray = None
    port_normals: np.ndarray = None

    def __post_init__(self):
        p = np.array([self.p1, self.p2, self.p3], dtype=float)
        if not np.all(np.isfinite(p)):
            raise InputError("port reactions must be finite")
        pos = np.zeros((3, 2)) if self.port_positions is None else \
            np.asarray(self.port_positions, dtype=float).reshape(3, 2)
        nrm = default_port_normals() if self.port_normals is None else \
            np.asarray(self.port_normals, dtype=float).reshape(3, 2)
        if np.any(np.abs(np.linalg.norm(nrm, axis=1) - 1.0) > 1e-9):
            raise InputError("port normals must be unit vectors")
        object.__setattr__(self, "port_positions", pos)
        object.__setattr__(self, "port_normals", nrm)

    @property
    def forces(self):
        return np.array([self.p1, self.p2, self.p3])

    def scaled(self, factor):
        return PortReactions(*(factor * self.forces), port_positions=self.port_positions,
                             port_normals=self.port_normals)


def default_port_normals(tip_normal=(0.0, 1.0), theta_2=THETA_2):
    """Port normals for measured data: the tip normal turned by +theta_2, 0, -theta_2."""
    n = np.asarray(tip_normal, dtype=float)
    n = n / np.linalg.norm(n)
    out = []
    for a in (theta_2, 0.0, -theta_2):
        c, s = math.cos(math.radians(a)), math.sin(math.radians(a))
        out.append([c * n[0] - s * n[1], s * n[0] + c * n[1]])
    return np.array(out)


@dataclass(frozen=True)
class TipForce:
    F_k: float
    theta: float  # degrees, nan when undefined
    moment: float  # unbalanced moment about the tip point, N*mm
    theta_defined: bool = True

    def __iter__(self):
        return iter((self.F_k, self.theta))


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def equivalent_tip_force(reactions, tip_point=(0.0, 0.0), tip_normal=(0.0, 1.0)):
    """Resultant of the three port forces, with its angle from the tip normal.

    Each port force acts along its port normal. The moment of the three forces
    about ``tip_point`` is not zero in general; it is returned as a diagnostic.
    """
    vecs = reactions.forces[:, None] * reactions.port_normals
    total = vecs.sum(axis=0)
    F = float(np.linalg.norm(total))
    arm = reactions.port_positions - np.asarray(tip_point, dtype=float)
    moment = float(_cross(arm, vecs).sum())
    if F <= 1e-15 * max(1.0, np.abs(reactions.forces).max()):
        return TipForce(0.0 if F == 0 else F, float("nan"), moment, False)
    n = np.asarray(tip_normal, dtype=float)
    n = n / np.linalg.norm(n)
    theta = math.degrees(math.atan2(_cross(n, total), n @ total))
    return TipForce(F, theta, moment, True)


def required_torque(state, geometry, F_k):
    """Servo torque in N*mm for fingertip force ``F_k`` (N) in configuration ``state``."""
    s_ex = math.sin(math.radians(state.eta + state.xi))
    if abs(s_ex) < SINGULAR_TOL:
        raise SingularityError(
            f"sin(eta + xi) = 0 at eta = {state.eta} deg, xi = {state.xi} deg: "
            "the force-torque relation is singular"
        )
    phi, mu, th, ze = (math.radians(v) for v in (state.phi, state.mu, state.theta, state.zeta))
    g = geometry
    lever = g.L_FP * math.sin(mu - th) * math.cos(ze) / (g.L_FE * s_ex) - math.cos(th)
    return F_k * g.R * math.sin(phi) * lever


class LinearSchedule:
    """Crank angle mapped linearly onto each link-angle range.

    Default: phi, xi, mu from 0 to 90 deg and eta from -90 to -120 deg as the
    crank turns through 0..90 deg, which keeps eta + xi within [-90, -30] deg.
    """

    def __init__(self, geometry=None, crank_span=(0.0, 90.0), eta_reversed=True, zeta=0.0):
        g = geometry or MechanismGeometry()
        self.geometry = g
        self.span = (float(crank_span[0]), float(crank_span[1]))
        if not self.span[1] > self.span[0]:
            raise InputError("crank span must be increasing")
        eta = g.eta_range[::-1] if eta_reversed else g.eta_range
        self._ends = {"phi": g.phi_range, "xi": g.xi_range, "mu": g.mu_range, "eta": eta}
        self.zeta = float(zeta)

    def __call__(self, crank):
        lo, hi = self.span
        if not lo - 1e-9 <= crank <= hi + 1e-9:
            raise ScheduleError(f"crank angle {crank} outside schedule span {self.span}")
        s = (crank - lo) / (hi - lo)
        vals = {k: a + s * (b - a) for k, (a, b) in self._ends.items()}
        return MechanismState(zeta=self.zeta, **vals)

    def to_dict(self):
        return {"kind": "linear", "crank_span": list(self.span), "zeta": self.zeta,
                "eta_reversed": self._ends["eta"][0] > self._ends["eta"][1]}


class TableSchedule:
    """Tabulated crank angle -> (phi, xi, eta, mu[, zeta]) with linear interpolation.

    Rows must be strictly increasing in crank angle and spaced no wider than
    ``max_gap`` degrees; anything outside the table is a ScheduleError.
    """

    def __init__(self, rows, max_gap=None):
        a = np.asarray(rows, dtype=float)
        if a.ndim != 2 or a.shape[1] not in (5, 6) or len(a) < 2:
            raise InputError("table rows must be (crank, phi, xi, eta, mu[, zeta]), at least 2")
        if np.any(np.diff(a[:, 0]) <= 0):
            raise InputError("crank angles must be strictly increasing")
        if a.shape[1] == 5:
            a = np.column_stack([a, np.zeros(len(a))])
        self.table = a
        self.max_gap = max_gap
        self.span = (float(a[0, 0]), float(a[-1, 0]))

    def __call__(self, crank):
        c = self.table[:, 0]
        if not c[0] - 1e-9 <= crank <= c[-1] + 1e-9:
            raise ScheduleError(f"crank angle {crank} outside table span {self.span}")
        i = int(np.clip(np.searchsorted(c, crank) - 1, 0, len(c) - 2))
        if self.max_gap is not None and c[i + 1] - c[i] > self.max_gap:
            raise ScheduleError(
                f"schedule gap between {c[i]} and {c[i + 1]} deg exceeds {self.max_gap} deg"
            )
        vals = [np.interp(crank, c, self.table[:, j]) for j in range(1, 6)]
        return MechanismState(phi=vals[0], xi=vals[1], eta=vals[2], mu=vals[3], zeta=vals[4])

    def to_dict(self):
        return {"kind": "table", "rows": self.table.tolist(), "max_gap": self.max_gap}


def schedule_from_dict(d, geometry=None):
    kind = d.get("kind", "linear")
    if kind == "linear":
        return LinearSchedule(geometry, tuple(d.get("crank_span", (0.0, 90.0))),
                              d.get("eta_reversed", True), d.get("zeta", 0.0))
    if kind == "table":
        return TableSchedule(d["rows"], d.get("max_gap"))
    raise InputError(f"unknown schedule kind {kind!r}")


@dataclass
class TorqueCurve:
    crank: np.ndarray
    grasp: np.ndarray  # F_k, N
    theta: np.ndarray  # deg
    tau: np.ndarray  # single finger, N*mm
    moment: np.ndarray = field(default=None)

    @property
    def tau_total(self):
        return N_FINGERS * self.tau

    def rows(self):
        return list(zip(self.grasp.tolist(), self.tau.tolist(), self.tau_total.tolist()))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["grasp_N", "tau_Nmm", "tau_total_Nmm"])
            for g, t, tt in self.rows():
                w.writerow([repr(g), repr(t), repr(tt)])

    def at_grasp(self, grid):
        """Torque interpolated on a grasping-force grid (nan outside the curve's range)."""
        order = np.argsort(self.grasp, kind="stable")
        g, t = self.grasp[order], self.tau[order]
        out = np.interp(grid, g, t, left=np.nan, right=np.nan)
        return np.asarray(out, dtype=float)


def torque_curve(series, geometry=None, schedule=None, crank_angles=None,
                 tip_point=None, tip_normal=None):
    """Torque along a reaction history.

    ``series`` is an IndentationHistory or a sequence of PortReactions. Step
    ``i`` of ``n`` is assigned crank angle ``crank_angles[i]`` (default: evenly
    spaced over the schedule span). Each step uses the schedule's state with
    ``theta`` replaced by the angle of the equivalent tip force; steps with no
    force give zero torque.
    """
    geometry = geometry or MechanismGeometry()
    schedule = schedule or LinearSchedule(geometry)
    if hasattr(series, "port_reaction_series"):
        tp = series.tip_point if tip_point is None else tip_point
        tn = series.tip_normal if tip_normal is None else tip_normal
        series = series.port_reaction_series()
    else:
        tp = (0.0, 0.0) if tip_point is None else tip_point
        tn = (0.0, 1.0) if tip_normal is None else tip_normal
    n = len(series)
    if n == 0:
        raise InputError("empty reaction series")
    if crank_angles is None:
        crank_angles = np.linspace(schedule.span[0], schedule.span[1], n) if n > 1 \
            else np.array([schedule.span[1]])
    crank_angles = np.asarray(crank_angles, dtype=float)
    if len(crank_angles) != n:
        raise InputError("one crank angle per step is required")
    grasp, theta, tau, moment = (np.zeros(n) for _ in range(4))
    for i, (r, c) in enumerate(zip(series, crank_angles)):
        tip = equivalent_tip_force(r, tp, tn)
        state = schedule(c)
        grasp[i], moment[i] = tip.F_k, tip.moment
        if not tip.theta_defined:
            theta[i] = np.nan
            continue
        theta[i] = tip.theta
        tau[i] = required_torque(state.with_theta(tip.theta), geometry, tip.F_k)
    return TorqueCurve(crank_angles, grasp, theta, tau, moment)


def torque_sweep(state, geometry=None, grasp=(0.2, 0.4, 0.6, 0.8)):
    """Torque at a fixed configuration over a grasping-force grid."""
    geometry = geometry or MechanismGeometry()
    g = np.asarray(grasp, dtype=float)
    unit = required_torque(state, geometry, 1.0)
    return TorqueCurve(np.full(len(g), np.nan), g, np.full(len(g), state.theta), unit * g)
