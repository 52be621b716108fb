"""Parametric re-entrant honeycomb finger models.

Cell geometry
-------------
Horizontal walls of length ``h`` alternate with diagonal walls of length
``d`` along zig-zag chains running in x. The diagonal walls make the angle
``theta`` with the vertical; ``theta < 0`` folds them inward (re-entrant,
auxetic), ``theta > 0`` gives the conventional hexagon and ``theta = 0``
a rectangular grid. One cell owns four nodes::

    A = (0, 0)   B = (h, 0)   C = (h + d sin t, d cos t)   D = (2h + d sin t, d cos t)

and repeats with periods ``Lx = 2 (h + d sin t)`` and ``Ly = 2 d cos t``.

Finger assembly
---------------
The finger frame has the contact face on top (+y). The interior lattice is a
``rows x cols`` patch centred on the origin and rotated by the inclination.
Below it an arch-shaped leaf spring (the backbone, fixed in the finger frame
for every inclination) carries the three ports; above it a straight skin
beam is the contact face. Tie beams join each skin station and each backbone
station to the nearest lattice node.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConstructionError, GeometryError, InputError
from .frame import LatticeModel, Material, rectangular_section

TPU = Material(youngs_modulus=26.0, poisson_ratio=0.48)

LATTICE, SKIN, BACKBONE, TIE = 0, 1, 2, 3
ARC_STEP_DEG = 2.0
FACE_REFINEMENT = 4


@dataclass(frozen=True)
class UnitCellSpec:
    strut_length_h: float = 8.0
    strut_length_d: float = 6.0
    reentrant_angle: float = -30.0
    wall_thickness: float = 1.2
    depth: float = 10.0

    def validate(self):
        h, d, t = self.strut_length_h, self.strut_length_d, self.wall_thickness
        if min(h, d, t, self.depth) <= 0:
            raise InputError("cell lengths must be positive")
        if t >= min(h, d):
            raise InputError("wall_thickness must be smaller than both strut lengths")
        if not -80.0 < self.reentrant_angle < 80.0:
            raise InputError("reentrant_angle must lie in (-80, 80) degrees")
        s = math.sin(math.radians(self.reentrant_angle))
        if h + 2.0 * d * s <= t:
            raise GeometryError(
                f"diagonal walls of a cell with h={h}, d={d} at {self.reentrant_angle} deg "
                "fold onto the neighbouring horizontal wall (need h + 2 d sin(angle) > thickness)"
            )
        return self

    @property
    def periods(self):
        s = math.sin(math.radians(self.reentrant_angle))
        c = math.cos(math.radians(self.reentrant_angle))
        return 2.0 * (self.strut_length_h + self.strut_length_d * s), 2.0 * self.strut_length_d * c


@dataclass(frozen=True)
class LatticeSpec:
    cell: UnitCellSpec = field(default_factory=UnitCellSpec)
    rows: int = 4
    cols: int = 6
    inclination: float = 0.0
    backbone_arch_radius: float = 80.0
    port_positions: tuple = (0.1, 0.5, 0.9)
    backbone_thickness: float = 2.4
    tie_thickness: float = 3.6
    material: Material = TPU

    def validate(self):
        self.cell.validate()
        if self.rows < 1 or self.cols < 1:
            raise InputError("rows and cols must be >= 1")
        if not 0.0 <= self.inclination < 90.0:
            raise InputError("inclination must lie in [0, 90) degrees")
        p = tuple(self.port_positions)
        if len(p) != 3:
            raise InputError("exactly three port positions are required")
        if not all(0.0 <= x <= 1.0 for x in p) or not p[0] < p[1] < p[2]:
            raise InputError("port positions must be strictly increasing fractions in [0, 1]")
        if self.backbone_thickness <= 0 or self.tie_thickness <= 0:
            raise InputError("backbone and tie thickness must be positive")
        return self

    def with_inclination(self, inclination):
        return replace(self, inclination=float(inclination))

    def to_dict(self):
        out = asdict(self)
        out["port_positions"] = list(self.port_positions)
        out["material"] = {"youngs_modulus": self.material.youngs_modulus,
                           "poisson_ratio": self.material.poisson_ratio}
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        cell = UnitCellSpec(**data.pop("cell", {}))
        mat = data.pop("material", None)
        if mat is not None:
            mat = Material(**mat) if isinstance(mat, dict) else Material(*mat)
            data["material"] = mat
        if "port_positions" in data:
            data["port_positions"] = tuple(data["port_positions"])
        return cls(cell=cell, **data)


def load_lattice_spec(path):
    with open(path, encoding="utf-8") as fh:
        return LatticeSpec.from_dict(json.load(fh)).validate()


def _cell_nodes(cell):
    h, d = cell.strut_length_h, cell.strut_length_d
    s = math.sin(math.radians(cell.reentrant_angle))
    c = math.cos(math.radians(cell.reentrant_angle))
    return np.array([[0.0, 0.0], [h, 0.0], [h + d * s, d * c], [2 * h + d * s, d * c]])


def _patch(cell, rows, cols):
    """Unrotated tiling: node coordinates, wall connectivity and node -> (row, col)."""
    Lx, Ly = cell.periods
    local = _cell_nodes(cell)
    nodes = np.empty((4 * rows * cols, 2))
    node_cell = np.empty((4 * rows * cols, 2), dtype=int)

    def nid(i, j, k):
        return 4 * (i * cols + j) + k

    conn = []
    for i in range(rows):
        for j in range(cols):
            base = nid(i, j, 0)
            nodes[base:base + 4] = local + (j * Lx, i * Ly)
            node_cell[base:base + 4] = (i, j)
            A, B, C, D = base, base + 1, base + 2, base + 3
            conn += [(A, B), (B, C), (C, D)]
            if i + 1 < rows:
                conn.append((C, nid(i + 1, j, 1)))
            if j + 1 < cols:
                conn.append((D, nid(i, j + 1, 0)))
            if i + 1 < rows and j + 1 < cols:
                conn.append((D, nid(i + 1, j + 1, 0)))
    return nodes, np.array(conn, dtype=int), node_cell


def lattice_element_count(rows, cols):
    """Walls in a rows x cols patch."""
    return 3 * rows * cols + (rows - 1) * cols + rows * (cols - 1) + (rows - 1) * (cols - 1)


def build_patch(cell, rows, cols, material=TPU):
    """Free-standing lattice patch (no backbone, no ports) for material-level tests."""
    cell.validate()
    if rows < 1 or cols < 1:
        raise InputError("rows and cols must be >= 1")
    nodes, conn, node_cell = _patch(cell, rows, cols)
    sec = rectangular_section(cell.depth, cell.wall_thickness)
    elements = np.column_stack([conn, np.full(len(conn), LATTICE)])
    model = LatticeModel(nodes, elements, {LATTICE: sec}, material,
                         interior_nodes=np.arange(len(nodes)), node_cell=node_cell)
    return model.validate()


def _rotation(deg):
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def _finger_layout(spec):
    """Inclination-independent sizes: patch circumradius, skin stations, arch nodes."""
    cell = spec.cell
    Lx, Ly = cell.periods
    nodes, _, _ = _patch(cell, spec.rows, spec.cols)
    centre = 0.5 * (nodes.min(axis=0) + nodes.max(axis=0))
    radius = float(np.linalg.norm(nodes - centre, axis=1).max())
    gap = 0.5 * cell.strut_length_d
    width = nodes[:, 0].max() - nodes[:, 0].min()
    n_skin = max(2, int(round(width / (0.5 * Lx))))
    half = radius
    R = spec.backbone_arch_radius
    if R <= half:
        raise GeometryError(
            f"backbone_arch_radius {R} mm must exceed the half span {half:.3f} mm of the finger"
        )
    half_angle = math.degrees(math.asin(half / R))
    n_arc = max(2, math.ceil(2.0 * half_angle / ARC_STEP_DEG))
    return centre, radius, gap, n_skin, n_arc, half_angle


def expected_element_count(spec):
    """Element count implied by the tiling, skin refinement and arch discretisation."""
    _, _, _, n_skin, n_arc, _ = _finger_layout(spec)
    ties = 2 * (n_skin + 1)
    return lattice_element_count(spec.rows, spec.cols) + FACE_REFINEMENT * n_skin + n_arc + ties


def build_lattice(spec):
    """Assemble the finger frame for ``spec`` (see module docstring)."""
    spec.validate()
    cell = spec.cell
    nodes, conn, node_cell = _patch(cell, spec.rows, spec.cols)
    centre, radius, gap, n_skin, n_arc, half_angle = _finger_layout(spec)
    interior = (nodes - centre) @ _rotation(spec.inclination).T
    n_lat = len(interior)

    # contact skin, refined for node-to-circle contact
    n_face = FACE_REFINEMENT * n_skin
    x_lo, x_hi = interior[:, 0].min(), interior[:, 0].max()
    y_face = interior[:, 1].max() + gap
    skin = np.column_stack([np.linspace(x_lo, x_hi, n_face + 1), np.full(n_face + 1, y_face)])
    skin_ids = np.arange(n_lat, n_lat + n_face + 1)

    # backbone arch: chord at y = -(radius + gap), bowing away from the lattice
    R = spec.backbone_arch_radius
    y_chord = -(radius + gap)
    cy = y_chord + math.sqrt(R**2 - radius**2)
    ang = np.radians(np.linspace(-half_angle, half_angle, n_arc + 1))
    arch = np.column_stack([R * np.sin(ang), cy - R * np.cos(ang)])
    arch_ids = np.arange(skin_ids[-1] + 1, skin_ids[-1] + 2 + n_arc)

    all_nodes = np.vstack([interior, skin, arch])
    elements = [(a, b, LATTICE) for a, b in conn]
    elements += [(skin_ids[k], skin_ids[k + 1], SKIN) for k in range(n_face)]
    elements += [(arch_ids[k], arch_ids[k + 1], BACKBONE) for k in range(n_arc)]

    def nearest(p):
        return int(np.argmin(np.linalg.norm(interior - p, axis=1)))

    skin_stations = skin_ids[::FACE_REFINEMENT]
    arch_stations = arch_ids[np.round(np.linspace(0, n_arc, n_skin + 1)).astype(int)]
    for sid in list(skin_stations) + list(arch_stations):
        elements.append((int(sid), nearest(all_nodes[sid]), TIE))

    # ports: arch nodes nearest the requested arc-length fractions (uniform arch)
    port_idx = [int(round(f * n_arc)) for f in spec.port_positions]
    if len(set(port_idx)) != 3:
        raise ConstructionError("port positions collapse onto the same backbone node")
    ports = tuple(int(arch_ids[k]) for k in port_idx)
    arc_centre = np.array([0.0, cy])
    normals = arc_centre - arch[port_idx]
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    full_cell = np.full((len(all_nodes), 2), -1, dtype=int)
    full_cell[:n_lat] = node_cell
    sections = {
        LATTICE: rectangular_section(cell.depth, cell.wall_thickness),
        SKIN: rectangular_section(cell.depth, cell.wall_thickness),
        BACKBONE: rectangular_section(cell.depth, spec.backbone_thickness),
        TIE: rectangular_section(cell.depth, spec.tie_thickness),
    }
    model = LatticeModel(
        all_nodes, np.array(elements, dtype=int), sections, spec.material,
        port_nodes=ports, front_face_nodes=tuple(int(i) for i in skin_ids),
        port_normals=normals, tip_point=(0.0, float(y_face)), tip_normal=(0.0, 1.0),
        interior_nodes=np.arange(n_lat), node_cell=full_cell,
    )
    return model.validate()


def gibson_ashby_poisson(cell):
    """Bending-dominated honeycomb Poisson ratio for stretch along the chains (x).

    ``nu = (h/d + sin t) sin t / cos^2 t``; equals 1 for the regular hexagon.
    """
    t = math.radians(cell.reentrant_angle)
    hd = cell.strut_length_h / cell.strut_length_d
    return (hd + math.sin(t)) * math.sin(t) / math.cos(t) ** 2


def effective_poisson_ratio(model, strain=1e-4, axis=0, core=0.5):
    """Virtual uniaxial test on a lattice patch.

    The extreme nodes along ``axis`` get prescribed normal displacement
    (rollers) giving the nominal ``strain``; lateral edges are traction free.
    Strains are measured by regressing displacements over the central
    ``core`` fraction of the patch, away from the loaded and free edges.
    """
    from .fem import BoundaryConditions, solve_linear

    if abs(strain) > 1e-3 or strain == 0:
        raise InputError("strain must be nonzero with |strain| <= 1e-3")
    X = model.nodes
    lat = 1 - axis
    names = ("ux", "uy")
    lo, hi = X[:, axis].min(), X[:, axis].max()
    span = hi - lo
    tol = 1e-9 * max(span, 1.0)
    left = np.flatnonzero(X[:, axis] <= lo + tol)
    right = np.flatnonzero(X[:, axis] >= hi - tol)
    presc = {(int(n), names[axis]): 0.0 for n in left}
    presc.update({(int(n), names[axis]): strain * span for n in right})
    anchor = int(left[np.argmin(np.abs(X[left, lat] - np.median(X[:, lat])))])
    bc = BoundaryConditions(fixed_dofs={(anchor, names[lat])}, prescribed=presc)
    u = solve_linear(model, bc).final.displacements

    c = 0.5 * (X.min(axis=0) + X.max(axis=0))
    ext = X.max(axis=0) - X.min(axis=0)
    inner = np.all(np.abs(X - c) <= 0.5 * core * ext + 1e-9, axis=1)
    if inner.sum() < 4:
        raise InputError("patch too small to measure interior strains")
    P = np.column_stack([np.ones(inner.sum()), X[inner]])
    gx = np.linalg.lstsq(P, u[inner, 0], rcond=None)[0]
    gy = np.linalg.lstsq(P, u[inner, 1], rcond=None)[0]
    grad = np.array([[gx[1], gx[2]], [gy[1], gy[2]]])
    return -grad[lat, lat] / grad[axis, axis]
