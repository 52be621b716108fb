"""Geometrically nonlinear statics of planar beam frames.

Two-node corotational Euler-Bernoulli elements with three dofs per node
(``ux``, ``uy``, ``rz``). The local element is the linear beam; large rigid
rotations are removed by tracking the chord angle of each element, so the
formulation is exact for arbitrarily large rigid motions and accurate for
large deflections with small local strains.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, InputError, SingularStiffnessError

DOF_NAMES = ("ux", "uy", "rz")


def dof_index(node, dof):
    """Global dof number for ``(node, dof)``; ``dof`` is a name or 0..2."""
    k = DOF_NAMES.index(dof) if isinstance(dof, str) else int(dof)
    if not 0 <= k < 3:
        raise InputError(f"unknown dof {dof!r}")
    return 3 * int(node) + k


@dataclass
class BoundaryConditions:
    fixed_dofs: set = field(default_factory=set)
    prescribed: dict = field(default_factory=dict)
    nodal_loads: dict = field(default_factory=dict)

    def validate(self, n_nodes):
        fixed = {dof_index(*k) for k in self.fixed_dofs}
        presc = {dof_index(*k) for k in self.prescribed}
        loads = {dof_index(*k) for k in self.nodal_loads}
        if fixed & presc:
            raise InputError("a dof is both fixed and prescribed")
        if (fixed | presc) & loads:
            raise InputError("load applied on a constrained dof")
        every = fixed | presc | loads
        if every and max(every) >= 3 * n_nodes:
            raise InputError("boundary condition references an unknown node")
        return self

    def partition(self, n_nodes):
        """Return (constrained dof ids, their target values, load vector, free mask)."""
        self.validate(n_nodes)
        n = 3 * n_nodes
        targets = {dof_index(*k): 0.0 for k in self.fixed_dofs}
        targets.update({dof_index(*k): float(v) for k, v in self.prescribed.items()})
        cons = np.array(sorted(targets), dtype=int)
        values = np.array([targets[i] for i in cons], dtype=float)
        loads = np.zeros(n)
        for k, v in self.nodal_loads.items():
            loads[dof_index(*k)] += float(v)
        free = np.ones(n, dtype=bool)
        free[cons] = False
        return cons, values, loads, free


@dataclass(frozen=True)
class SolveSettings:
    min_substeps: int = 20
    max_substeps: int = 100
    residual_tol: float = 1e-6
    max_newton_iters: int = 50

    def __post_init__(self):
        if not 1 <= self.min_substeps <= self.max_substeps:
            raise InputError("need 1 <= min_substeps <= max_substeps")
        if self.residual_tol <= 0:
            raise InputError("residual_tol must be positive")
        if self.max_newton_iters < 1:
            raise InputError("max_newton_iters must be >= 1")


@dataclass
class Substep:
    load_factor: float
    displacements: np.ndarray  # (n_nodes, 3): ux, uy, rz
    reaction_dofs: np.ndarray  # global dof ids of constrained dofs
    reactions: np.ndarray  # N or N*mm, aligned with reaction_dofs
    newton_iters: int
    residual_norm: float = 0.0
    reference_norm: float = 0.0

    def reaction_vector(self, n_dofs):
        out = np.zeros(n_dofs)
        out[self.reaction_dofs] = self.reactions
        return out


@dataclass
class DeformedHistory:
    substeps: list

    @property
    def final(self):
        return self.substeps[-1]

    @property
    def load_factors(self):
        return np.array([s.load_factor for s in self.substeps])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["substep", "load_factor", "node", "ux_mm", "uy_mm", "rz_rad"])
            for k, s in enumerate(self.substeps):
                for node, (ux, uy, rz) in enumerate(s.displacements):
                    w.writerow([k, repr(s.load_factor), node, repr(ux), repr(uy), repr(rz)])


class CorotationalFrame:
    """Vectorised internal force and consistent tangent of a planar frame."""

    def __init__(self, model):
        self.model = model
        self.n_nodes = model.n_nodes
        self.n_dofs = 3 * model.n_nodes
        a, b = model.elements[:, 0], model.elements[:, 1]
        self.a, self.b = a, b
        d0 = model.nodes[b] - model.nodes[a]
        self.L0 = np.linalg.norm(d0, axis=1)
        if np.any(self.L0 <= 1e-12):
            raise InputError("zero-length element")
        self.e0 = d0 / self.L0[:, None]
        self.EA, self.EI = model.element_properties()
        self.dofs = np.column_stack([3 * a, 3 * a + 1, 3 * a + 2, 3 * b, 3 * b + 1, 3 * b + 2])
        self._rows = np.repeat(self.dofs, 6, axis=1).ravel()
        self._cols = np.tile(self.dofs, (1, 6)).ravel()

    def _kinematics(self, u):
        U = u.reshape(-1, 3)
        d = self.model.nodes[self.b] + U[self.b, :2] - self.model.nodes[self.a] - U[self.a, :2]
        L = np.linalg.norm(d, axis=1)
        c, s = d[:, 0] / L, d[:, 1] / L
        sin_rot = self.e0[:, 0] * s - self.e0[:, 1] * c
        cos_rot = self.e0[:, 0] * c + self.e0[:, 1] * s
        rot = np.arctan2(sin_rot, cos_rot)
        th1 = U[self.a, 2] - rot
        th2 = U[self.b, 2] - rot
        stretch = (L**2 - self.L0**2) / (L + self.L0)
        k = self.EI / self.L0
        N = self.EA / self.L0 * stretch
        M1 = k * (4 * th1 + 2 * th2)
        M2 = k * (2 * th1 + 4 * th2)
        zero = np.zeros_like(c)
        r = np.column_stack([-c, -s, zero, c, s, zero])
        q = np.column_stack([s, -c, zero, -s, c, zero])
        b1 = -q / L[:, None]
        b2 = b1.copy()
        b1[:, 2] += 1.0
        b2[:, 5] += 1.0
        return L, N, M1, M2, r, q, b1, b2

    def internal_force(self, u):
        L, N, M1, M2, r, q, b1, b2 = self._kinematics(u)
        fe = N[:, None] * r + M1[:, None] * b1 + M2[:, None] * b2
        return np.bincount(self.dofs.ravel(), weights=fe.ravel(), minlength=self.n_dofs)

    def element_forces(self, u):
        """Local (N, M1, M2) per element."""
        _, N, M1, M2, *_ = self._kinematics(u)
        return np.column_stack([N, M1, M2])

    def tangent(self, u):
        """Return (internal force, tangent stiffness as CSR)."""
        L, N, M1, M2, r, q, b1, b2 = self._kinematics(u)
        fe = N[:, None] * r + M1[:, None] * b1 + M2[:, None] * b2
        f = np.bincount(self.dofs.ravel(), weights=fe.ravel(), minlength=self.n_dofs)
        k = (self.EI / self.L0)[:, None, None]
        outer = lambda x, y: x[:, :, None] * y[:, None, :]  # noqa: E731
        Ke = (self.EA / self.L0)[:, None, None] * outer(r, r)
        Ke += k * (4 * outer(b1, b1) + 2 * outer(b1, b2) + 2 * outer(b2, b1) + 4 * outer(b2, b2))
        Ke += (N / L)[:, None, None] * outer(q, q)
        Ke += ((M1 + M2) / L**2)[:, None, None] * (outer(r, q) + outer(q, r))
        K = sp.coo_matrix((Ke.ravel(), (self._rows, self._cols)), shape=(self.n_dofs,) * 2)
        return f, K.tocsr()


def rigid_body_modes(nodes):
    """Columns: x translation, y translation, rotation about the centroid."""
    n = len(nodes)
    c = nodes.mean(axis=0)
    modes = np.zeros((3 * n, 3))
    modes[0::3, 0] = 1.0
    modes[1::3, 1] = 1.0
    modes[0::3, 2] = -(nodes[:, 1] - c[1])
    modes[1::3, 2] = nodes[:, 0] - c[0]
    modes[2::3, 2] = 1.0
    return modes


def _diagnose_singular(frame, free, K):
    """Build a SingularStiffnessError naming the unrestrained modes."""
    names = ("translation x", "translation y", "rotation rz")
    R = rigid_body_modes(frame.model.nodes)
    constrained = R[~free]
    if constrained.size:
        _, sv, vt = np.linalg.svd(constrained, full_matrices=True)
        rank = int(np.sum(sv > 1e-9 * max(sv.max(), 1.0)))
        null = vt[rank:]
    else:
        null = np.eye(3)
    modes = []
    for v in null:
        v = v / np.abs(v).max()
        parts = [f"{w:+.3g}*{nm}" for w, nm in zip(v, names) if abs(w) > 1e-9]
        modes.append(" ".join(parts))
    if not modes:
        Kff = K[free][:, free].toarray() if sp.issparse(K) else K[np.ix_(free, free)]
        if Kff.shape[0] <= 3000:
            w, v = np.linalg.eigh(0.5 * (Kff + Kff.T))
            scale = max(abs(w).max(), 1.0)
            dofs = np.flatnonzero(free)
            for k in np.flatnonzero(np.abs(w) < 1e-10 * scale):
                top = dofs[np.argmax(np.abs(v[:, k]))]
                modes.append(f"mechanism dominated by node {top // 3} {DOF_NAMES[top % 3]}")
        if not modes:
            modes.append("ill-conditioned mechanism")
    return SingularStiffnessError(
        "stiffness is singular after applying boundary conditions; free modes: " + "; ".join(modes),
        modes=modes,
    )


def _solve_reduced(frame, K, free, rhs):
    Kff = K[free][:, free].tocsc()
    try:
        lu = spla.splu(Kff)
        x = lu.solve(rhs)
    except RuntimeError:
        raise _diagnose_singular(frame, free, K) from None
    if not np.all(np.isfinite(x)):
        raise _diagnose_singular(frame, free, K)
    diag = np.abs(lu.U.diagonal())
    if diag.size and diag.min() <= 1e-13 * diag.max():
        raise _diagnose_singular(frame, free, K)
    return x


def solve_linear(model, bc):
    """Small-displacement solve; returns a one-substep :class:`DeformedHistory`."""
    frame = CorotationalFrame(model)
    cons, values, loads, free = bc.partition(model.n_nodes)
    if not free.any():
        raise InputError("every dof is constrained")
    _, K = frame.tangent(np.zeros(frame.n_dofs))
    u = np.zeros(frame.n_dofs)
    u[cons] = values
    rhs = loads[free] - K[free][:, cons] @ values
    u[free] = _solve_reduced(frame, K, free, rhs)
    reactions = K[cons] @ u - loads[cons]
    res = np.linalg.norm(K[free] @ u - loads[free])
    ref = np.linalg.norm(np.concatenate([loads, reactions]))
    step = Substep(1.0, u.reshape(-1, 3), cons, reactions, 1, res, ref)
    return DeformedHistory([step])


def newton_solve(frame, u, free, loads, settings, extra=None):
    """Newton iterations at fixed constrained values (already written into ``u``).

    ``extra(u)`` may return ``(f, K)``: an additional configuration-dependent
    external force (e.g. penalty contact) and its derivative ``df/du``.
    Returns ``(u, iters, residual_norm, reference_norm, reactions)``.
    Raises ConvergenceError on divergence.
    """
    u = u.copy()

    def evaluate(u):
        f_int, K = frame.tangent(u)
        f_ext = loads
        if extra is not None:
            fx, Kx = extra(u)
            f_ext = loads + fx
            if Kx is not None:
                K = K - Kx
        return f_int - f_ext, f_ext, K

    R, f_ext, K = evaluate(u)
    first = None
    for it in range(1, settings.max_newton_iters + 1):
        Rf = R[free]
        res = np.linalg.norm(Rf)
        ref = np.linalg.norm(np.concatenate([f_ext[free], R[~free]]))
        if not np.isfinite(res):
            raise ConvergenceError("non-finite residual", residual_norm=res)
        if res <= settings.residual_tol * ref or res <= 1e-10:
            return u, it - 1, res, ref, R[~free]
        if first is None:
            first = res
        elif res > 1e8 * max(first, 1e-12):
            raise ConvergenceError("Newton iteration diverged", residual_norm=res)
        du = _solve_reduced(frame, K, free, -Rf)
        # backtrack while the residual grows; a full step is kept if nothing helps
        step = 1.0
        for _ in range(6):
            trial = u.copy()
            trial[free] += step * du
            R_t, f_t, K_t = evaluate(trial)
            if np.linalg.norm(R_t[free]) < res or step < 0.05:
                break
            step *= 0.5
        u, R, f_ext, K = trial, R_t, f_t, K_t
    raise ConvergenceError(
        f"no convergence in {settings.max_newton_iters} Newton iterations", residual_norm=res
    )


def follow_path(frame, u_start, cons, cons_start, cons_end, loads_end, settings,
                n_increments, budget, extra_at=None, loads_start=None, rate=None):
    """March a load parameter from 0 to 1 with halving on Newton failure.

    Constrained values and nodal loads are interpolated linearly in the
    parameter. ``extra_at(lam)`` returns the ``extra`` callback for
    :func:`newton_solve` at that parameter. Returns a list of accepted
    ``(lam, u, iters, res, ref, reactions)`` and never accepts more than
    ``budget`` increments.

    Each Newton solve starts from a secant prediction ``u + rate * dlam``
    of the free dofs, where ``rate`` is the slope of the last accepted
    increment (or the supplied initial ``rate``, default zero).
    """
    free = np.ones(frame.n_dofs, dtype=bool)
    free[cons] = False
    if loads_start is None:
        loads_start = np.zeros(frame.n_dofs)
    base = 1.0 / n_increments
    dl = base
    lam = 0.0
    u = u_start.copy()
    rate = np.zeros(frame.n_dofs) if rate is None else np.asarray(rate, dtype=float)
    accepted = []
    last_res = float("nan")
    while lam < 1.0 - 1e-14:
        if len(accepted) >= budget:
            raise ConvergenceError(
                f"substep budget ({budget}) exhausted", last_load_factor=lam, residual_norm=last_res
            )
        target = min(1.0, lam + dl)
        if 1.0 - target < 1e-12:
            target = 1.0
        trial = u + (target - lam) * rate
        trial[cons] = cons_start + target * (cons_end - cons_start)
        loads = loads_start + target * (loads_end - loads_start)
        try:
            extra = extra_at(target) if extra_at is not None else None
            trial, iters, res, ref, reac = newton_solve(frame, trial, free, loads, settings, extra)
        except (ConvergenceError, SingularStiffnessError) as exc:
            last_res = getattr(exc, "residual_norm", float("nan"))
            dl *= 0.5
            if dl < 1e-7:
                raise ConvergenceError(
                    f"increment underflow at load factor {lam:.6g}: {exc}",
                    last_load_factor=lam, residual_norm=last_res,
                ) from exc
            continue
        rate = (trial - u) / (target - lam)
        lam, u, last_res = target, trial, res
        accepted.append((lam, u, iters, res, ref, reac))
        if iters <= 4 and dl < base:
            dl = min(2 * dl, base)
    return accepted


def solve_nonlinear(model, bc, settings=None):
    """Incremental-iterative large-deflection solve of a frame.

    Starts with increments of ``1/min_substeps`` of the full load and
    prescribed displacements, halving on Newton failure, and accepts at most
    ``max_substeps`` increments.
    """
    settings = settings or SolveSettings()
    frame = CorotationalFrame(model)
    cons, values, loads, free = bc.partition(model.n_nodes)
    if not free.any():
        raise InputError("every dof is constrained")
    u0 = np.zeros(frame.n_dofs)
    # fail early with a clear message if the structure is a mechanism
    _, K0 = frame.tangent(u0)
    _solve_reduced(frame, K0, free, np.zeros(int(free.sum())))
    path = follow_path(
        frame, u0, cons, np.zeros_like(values), values, loads, settings,
        settings.min_substeps, settings.max_substeps,
    )
    steps = [
        Substep(lam, u.reshape(-1, 3).copy(), cons, reac, it, res, ref)
        for lam, u, it, res, ref, reac in path
    ]
    return DeformedHistory(steps)


def reaction_balance(model, step, loads=None):
    """Sum of reactions plus applied loads in x and y (should vanish)."""
    n = model.n_dofs
    total = step.reaction_vector(n)
    if loads is not None:
        total = total + loads
    return np.array([total[0::3].sum(), total[1::3].sum()])


def external_work(history, model, bc):
    """Cumulative trapezoidal work of nodal loads and reactions along the path."""
    cons, _, loads, _ = bc.partition(model.n_nodes)
    n = model.n_dofs
    work = [0.0]
    f_prev = np.zeros(n)
    u_prev = np.zeros(n)
    for s in history.substeps:
        f = s.load_factor * loads + s.reaction_vector(n)
        u = s.displacements.ravel()
        work.append(work[-1] + 0.5 * (f + f_prev) @ (u - u_prev))
        f_prev, u_prev = f, u
    return np.array(work[1:])


def cantilever(length, n_elements, section, material, angle=0.0):
    """Straight cantilever model along ``angle`` (rad) starting at the origin."""
    from .frame import LatticeModel

    s = np.linspace(0.0, length, n_elements + 1)
    nodes = np.column_stack([s * math.cos(angle), s * math.sin(angle)])
    conn = np.column_stack([np.arange(n_elements), np.arange(1, n_elements + 1)])
    return LatticeModel.frame(nodes, conn, section, material)


__all__ = [
    "BoundaryConditions", "CorotationalFrame", "DeformedHistory", "SolveSettings", "Substep",
    "cantilever", "dof_index", "external_work", "follow_path", "newton_solve",
    "reaction_balance", "rigid_body_modes", "solve_linear", "solve_nonlinear",
]
