"""Displacement-driven indentation of a finger face by a rigid circle."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ContactChatterError, ConvergenceError, InputError
from .fem import CorotationalFrame, SolveSettings, dof_index, newton_solve
from .metrics import ContactProfile

PENETRATION_WARN_FRACTION = 0.10


@dataclass(frozen=True)
class Indenter:
    radius: float = 26.5
    center_start: tuple = (0.0, 0.0)
    travel_direction: tuple = (0.0, -1.0)
    total_travel: float = 2.5

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("indenter radius must be positive")
        if self.total_travel < 0:
            raise InputError("total_travel must be non-negative")
        if abs(math.hypot(*self.travel_direction) - 1.0) > 1e-12:
            raise InputError("travel_direction must be a unit vector")

    @classmethod
    def touching(cls, model, radius=26.5, total_travel=2.5):
        """Circle tangent to the face at the node nearest the fingertip point, moving along -tip_normal."""
        n = np.asarray(model.tip_normal, dtype=float)
        n = n / np.linalg.norm(n)
        face = model.nodes[list(model.front_face_nodes)]
        tip = np.asarray(model.tip_point, dtype=float)
        contact = face[np.argmin(np.linalg.norm(face - tip, axis=1))]
        centre = contact + radius * n
        return cls(radius, (float(centre[0]), float(centre[1])), (float(-n[0]), float(-n[1])),
                   total_travel)

    def centre_at(self, travel):
        return np.asarray(self.center_start) + travel * np.asarray(self.travel_direction)


@dataclass
class IndentationStep:
    travel: float
    contact_force: np.ndarray  # vector sum of nodal contact forces on the finger, N
    contact_point_forces: np.ndarray  # normal force per face node, N (>= 0)
    port_reactions: np.ndarray  # (P1, P2, P3) along the port normals, N
    port_reaction_vectors: np.ndarray  # (3, 2), N
    other_reactions: np.ndarray  # vector sum of non-port support reactions, N
    deformed_face: ContactProfile
    displacements: np.ndarray
    max_penetration: float
    substeps: int = 0

    @property
    def contact_force_resultant(self):
        return float(np.linalg.norm(self.contact_force))

    @property
    def indenter_force(self):
        """Force exerted on the indenter (equal and opposite to the finger's)."""
        return -self.contact_force

    def balance(self):
        """contact + port reactions + other reactions, per direction (should vanish)."""
        return self.contact_force + self.port_reaction_vectors.sum(axis=0) + self.other_reactions


@dataclass
class IndentationHistory:
    steps: list
    indenter: Indenter
    penalty: float
    port_nodes: tuple
    port_normals: np.ndarray
    port_positions: np.ndarray
    tip_point: tuple
    tip_normal: tuple
    warnings: list = field(default_factory=list)

    @property
    def travel(self):
        return np.array([s.travel for s in self.steps])

    @property
    def contact_resultants(self):
        return np.array([s.contact_force_resultant for s in self.steps])

    @property
    def port_reaction_table(self):
        return np.array([s.port_reactions for s in self.steps])

    def port_reaction_series(self):
        from .mechanism import PortReactions

        return [
            PortReactions(*s.port_reactions, port_positions=self.port_positions,
                          port_normals=self.port_normals)
            for s in self.steps
        ]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["travel_mm", "F_contact_N", "P1_N", "P2_N", "P3_N"])
            for s in self.steps:
                w.writerow([repr(float(s.travel)), repr(s.contact_force_resultant)]
                           + [repr(float(p)) for p in s.port_reactions])

    def face_to_csv(self, step_index, path):
        from .metrics import write_profile_csv

        write_profile_csv(path, self.steps[step_index].deformed_face)


def default_penalty(model, factor=100.0):
    """``factor * E * A_min / L_min`` over the front-face elements."""
    face = set(model.front_face_nodes)
    mask = np.array([a in face and b in face for a, b, _ in model.elements])
    if not mask.any():
        mask = np.ones(len(model.elements), dtype=bool)
    areas = [model.sections[s].area for s in model.elements[mask, 2]]
    return factor * model.material.youngs_modulus * min(areas) / model.element_lengths()[mask].min()


class _PenaltyContact:
    """Frictionless node-to-rigid-circle penalty contact on the face nodes.

    The force on a node is ``penalty * overlap`` along the circle's outward
    normal. During one Newton solve the set of contacting nodes is frozen, so
    the residual is smooth; :func:`simulate_indentation` then updates the set
    and re-solves until it stops changing.
    """

    def __init__(self, model, radius, penalty):
        self.face = np.array(model.front_face_nodes, dtype=int)
        self.X = model.nodes[self.face]
        self.R = radius
        self.kp = penalty
        self.n_dofs = model.n_dofs

    def gaps(self, u, centre):
        """Offsets from the centre, distances and overlaps ``R - dist`` of all face nodes."""
        x = self.X + u.reshape(-1, 3)[self.face, :2]
        r = x - centre
        dist = np.linalg.norm(r, axis=1)
        return r, dist, self.R - dist

    def nodal(self, u, centre, active=None):
        """Normal force magnitudes (compression only), unit normals, active flags."""
        r, dist, g = self.gaps(u, centre)
        if active is None:
            active = g > 0
        return np.where(active, self.kp * np.maximum(g, 0.0), 0.0), r / dist[:, None], active

    def callback(self, centre, active):
        idx = np.flatnonzero(active)
        nodes = self.face[idx]
        d = np.column_stack([3 * nodes, 3 * nodes + 1])
        rows = np.repeat(d, 2, axis=1).ravel()
        cols = np.tile(d, (1, 2)).ravel()
        eye = np.eye(2)[None]

        def extra(u):
            f = np.zeros(self.n_dofs)
            if idx.size == 0:
                return f, None
            r, dist, g = self.gaps(u, centre)
            r, dist, g = r[idx], dist[idx], g[idx]
            nvec = r / dist[:, None]
            fx = self.kp * g[:, None] * nvec
            f[d[:, 0]] = fx[:, 0]
            f[d[:, 1]] = fx[:, 1]
            nn = nvec[:, :, None] * nvec[:, None, :]
            blocks = self.kp * (-nn + (g / dist)[:, None, None] * (eye - nn))
            K = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(self.n_dofs,) * 2).tocsr()
            return f, K
        return extra


def _solve_contact_state(frame, contact, u, free, centre, active, settings, max_active_iters):
    """Newton solves with a frozen contact set until the set is consistent.

    The set is first updated as a block (every violating node at once). If
    that revisits an earlier set, updates switch to one node at a time, always
    the lowest-index violator, which cannot cycle on a stable structure.
    Returns ``(u, iters, res, ref, reactions, active)``; raises
    ContactChatterError (step index filled in by the caller) if the set still
    cycles or does not settle.
    """
    seen = {active.tobytes()}
    single = False
    total = 0
    loads = np.zeros(frame.n_dofs)
    passes = max_active_iters + 4 * len(contact.face)
    for _ in range(passes):
        trial, iters, res, ref, reac = newton_solve(
            frame, u, free, loads, settings, contact.callback(centre, active)
        )
        total += iters
        g = contact.gaps(trial, centre)[2]
        # an active node may keep a tensile force at the level of the Newton
        # residual; releasing it would only make it re-penetrate by ~1e-6 mm
        slack = 10.0 * settings.residual_tol * ref / contact.kp
        new = (g > 0) | (active & (g > -slack))
        if np.array_equal(new, active):
            return trial, total, res, ref, reac, active
        if single:
            flip = np.flatnonzero(new != active)[0]
            new = active.copy()
            new[flip] = not new[flip]
        key = new.tobytes()
        if key in seen:
            if single:
                raise ContactChatterError("contact active set cycles", -1, residual_norm=res)
            single = True
            seen = {active.tobytes()}
            flip = np.flatnonzero(new != active)[0]
            new = active.copy()
            new[flip] = not new[flip]
            key = new.tobytes()
        seen.add(key)
        active = new
        u = trial
    raise ContactChatterError(
        f"contact active set did not settle in {passes} passes", -1
    )


def simulate_indentation(model, indenter, settings=None, n_steps=10, penalty=None,
                         port_dofs=("ux", "uy"), extra_fixed=(), max_active_iters=25):
    """Push ``indenter`` into the front face in ``n_steps`` equal travel increments.

    Ports are supports (pins by default). Each travel increment is split into
    at least ``ceil(min_substeps / n_steps)`` sub-increments, halved on
    failure and regrown after easy ones; the whole run accepts at most
    ``max(max_substeps, n_steps * sub-increments)`` of them.
    """
    settings = settings or SolveSettings()
    if n_steps < 1:
        raise InputError("n_steps must be >= 1")
    if not model.front_face_nodes or not model.port_nodes:
        raise InputError("model needs front-face nodes and port nodes")
    model.validate()
    kp = default_penalty(model) if penalty is None else float(penalty)
    if kp <= 0:
        raise InputError("penalty must be positive")
    contact = _PenaltyContact(model, indenter.radius, kp)
    _, _, g0 = contact.gaps(np.zeros(model.n_dofs), indenter.centre_at(0.0))
    if g0.max() > 1e-9 * indenter.radius:
        raise InputError("indenter initially penetrates the front face")

    frame = CorotationalFrame(model)
    cons = sorted({dof_index(n, d) for n in model.port_nodes for d in port_dofs}
                  | {dof_index(n, d) for n, d in extra_fixed})
    cons = np.array(cons, dtype=int)
    free = np.ones(model.n_dofs, dtype=bool)
    free[cons] = False
    port_set = {dof_index(n, d) for n in model.port_nodes for d in ("ux", "uy")}
    normals = np.asarray(model.port_normals, dtype=float) if model.port_normals is not None else \
        np.tile(np.asarray(model.tip_normal, dtype=float), (len(model.port_nodes), 1))

    per_step = max(1, math.ceil(settings.min_substeps / n_steps))
    budget = max(settings.max_substeps, n_steps * per_step)
    total = indenter.total_travel
    base = total / (n_steps * per_step) if total > 0 else 0.0
    u = np.zeros(model.n_dofs)
    rate = np.zeros(model.n_dofs)  # du / d(travel) of the last accepted increment
    reac = np.zeros(len(cons))
    active = np.zeros(len(contact.face), dtype=bool)
    history = IndentationHistory(
        [], indenter, kp, model.port_nodes, normals, model.nodes[list(model.port_nodes)].copy(),
        model.tip_point, model.tip_normal,
    )

    def record(travel, u, reac, sub):
        centre = indenter.centre_at(travel)
        mag, nvec, _ = contact.nodal(u, centre, active)
        fvec = (mag[:, None] * nvec).sum(axis=0)
        R = np.zeros(model.n_dofs)
        R[cons] = reac
        port_vecs = np.array([[R[3 * p], R[3 * p + 1]] for p in model.port_nodes])
        other = np.zeros(2)
        for d in cons:
            if d % 3 < 2 and d not in port_set:
                other[d % 3] += R[d]
        U = u.reshape(-1, 3)
        face_xy = model.nodes[list(model.front_face_nodes)] + U[list(model.front_face_nodes), :2]
        profile = ContactProfile(face_xy[:, 0], face_xy[:, 1], "simulated")
        pen = float(max(0.0, contact.gaps(u, centre)[2].max()))
        step = IndentationStep(
            float(travel), fvec, mag, np.einsum("ij,ij->i", port_vecs, normals), port_vecs,
            other, profile, U.copy(), pen, sub,
        )
        if pen > PENETRATION_WARN_FRACTION * indenter.radius:
            msg = (f"step {len(history.steps)}: penetration {pen:.3g} mm exceeds "
                   f"{PENETRATION_WARN_FRACTION:.0%} of the indenter radius (model breakdown)")
            history.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
        history.steps.append(step)

    record(0.0, u, reac, 0)
    travel = 0.0
    dt = base
    used = 0
    for k in range(1, n_steps + 1):
        goal = total * k / n_steps
        accepted = 0
        while travel < goal - 1e-12 * max(total, 1.0):
            if used >= budget:
                raise ConvergenceError(
                    f"indentation step {k}: substep budget ({budget}) exhausted",
                    last_load_factor=travel / total,
                )
            target = min(goal, travel + dt)
            if goal - target < 1e-9 * dt:
                target = goal
            trial = u + (target - travel) * rate
            trial[cons] = 0.0
            centre = indenter.centre_at(target)
            guess = active | (contact.gaps(trial, centre)[2] > 0)
            try:
                new_u, iters, res, _, new_reac, active_new = _solve_contact_state(
                    frame, contact, trial, free, centre, guess, settings, max_active_iters
                )
            except ConvergenceError as exc:
                dt *= 0.5
                if dt < 1e-7 * base:
                    if isinstance(exc, ContactChatterError):
                        raise ContactChatterError(
                            f"indentation step {k}: {exc}", k,
                            last_load_factor=travel / total, residual_norm=exc.residual_norm,
                        ) from exc
                    raise ConvergenceError(
                        f"indentation step {k} failed at travel {travel:.6g} mm: {exc}",
                        last_load_factor=travel / total, residual_norm=exc.residual_norm,
                    ) from exc
                continue
            rate = (new_u - u) / (target - travel)
            u, reac, active, travel = new_u, new_reac, active_new, target
            used += 1
            accepted += 1
            if iters <= 6 and dt < base:
                dt = min(2 * dt, base)
        record(goal, u, reac, accepted)
    return history
