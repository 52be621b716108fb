"""Planar frame container shared by the lattice generator and the solvers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConstructionError, GeometryError, InputError


class Section(NamedTuple):
    area: float  # mm^2
    second_moment: float  # mm^4
    width: float  # out-of-plane depth, mm
    height: float  # in-plane wall thickness, mm


class Material(NamedTuple):
    youngs_modulus: float  # MPa
    poisson_ratio: float


def rectangular_section(depth, thickness):
    """Section of a ``depth`` (out of plane) by ``thickness`` (in plane) rectangle."""
    if depth <= 0 or thickness <= 0:
        raise InputError("section dimensions must be positive")
    return Section(depth * thickness, depth * thickness**3 / 12.0, depth, thickness)


@dataclass(eq=False)
class LatticeModel:
    """Nodes, beam elements and section data of a planar frame.

    Generated fingers fill in ``port_nodes`` (pin supports on the backbone) and
    ``front_face_nodes`` (contact skin, ordered by increasing x). Hand-built
    frames used in tests may leave both empty.
    """

    nodes: np.ndarray
    elements: np.ndarray
    sections: dict
    material: Material
    port_nodes: tuple = ()
    front_face_nodes: tuple = ()
    port_normals: np.ndarray | None = None
    tip_point: tuple = (0.0, 0.0)
    tip_normal: tuple = (0.0, 1.0)
    interior_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    node_cell: np.ndarray | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        self.elements = np.asarray(self.elements, dtype=int).reshape(-1, 3)
        self.port_nodes = tuple(int(i) for i in self.port_nodes)
        self.front_face_nodes = tuple(int(i) for i in self.front_face_nodes)
        self.interior_nodes = np.asarray(self.interior_nodes, dtype=int)
        if self.port_normals is not None:
            self.port_normals = np.asarray(self.port_normals, dtype=float).reshape(-1, 2)

    @classmethod
    def frame(cls, nodes, connectivity, section, material, **kwargs):
        """Single-section frame from node coordinates and (a, b) node pairs."""
        conn = np.asarray(connectivity, dtype=int).reshape(-1, 2)
        elements = np.column_stack([conn, np.zeros(len(conn), dtype=int)])
        return cls(nodes, elements, {0: section}, material, **kwargs)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_dofs(self):
        return 3 * len(self.nodes)

    def element_lengths(self):
        a, b = self.elements[:, 0], self.elements[:, 1]
        return np.linalg.norm(self.nodes[b] - self.nodes[a], axis=1)

    def element_properties(self):
        """Per-element (E*A, E*I) arrays."""
        E = self.material.youngs_modulus
        ids = self.elements[:, 2]
        area = np.array([self.sections[i].area for i in ids], dtype=float)
        inertia = np.array([self.sections[i].second_moment for i in ids], dtype=float)
        return E * area, E * inertia

    def is_connected(self):
        n = self.n_nodes
        a, b = self.elements[:, 0], self.elements[:, 1]
        graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
        count, _ = connected_components(graph, directed=False)
        return count == 1

    def component_labels(self):
        n = self.n_nodes
        a, b = self.elements[:, 0], self.elements[:, 1]
        graph = coo_matrix((np.ones(len(a)), (a, b)), shape=(n, n))
        return connected_components(graph, directed=False)[1]

    def validate(self):
        """Raise if any structural invariant is violated."""
        if not np.all(np.isfinite(self.nodes)):
            raise GeometryError("non-finite node coordinates")
        if len(self.elements) == 0:
            raise GeometryError("frame has no elements")
        if self.elements[:, :2].min() < 0 or self.elements[:, :2].max() >= self.n_nodes:
            raise GeometryError("element references an unknown node")
        missing = set(self.elements[:, 2].tolist()) - set(self.sections)
        if missing:
            raise GeometryError(f"unknown section ids {sorted(missing)}")
        short = np.flatnonzero(self.element_lengths() <= 1e-12)
        if short.size:
            raise GeometryError(f"zero-length elements {short.tolist()}")
        if not self.is_connected():
            labels = self.component_labels()
            main = labels[self.port_nodes[0]] if self.port_nodes else labels[0]
            stray = np.flatnonzero(labels != main)
            where = f"node {stray[0]}"
            if self.node_cell is not None and self.node_cell[stray[0], 0] >= 0:
                r, c = self.node_cell[stray[0]]
                where = f"cell (row={r}, col={c})"
            raise ConstructionError(f"frame is disconnected: {where} does not reach the supports")
        if set(self.port_nodes) & set(self.front_face_nodes):
            raise ConstructionError("port nodes and front-face nodes overlap")
        if self.front_face_nodes:
            fx = self.nodes[list(self.front_face_nodes), 0]
            if np.any(np.diff(fx) <= 0):
                raise ConstructionError("front-face nodes are not ordered by increasing x")
        return self

    def to_text(self):
        """Plain-text dump: ``id x y`` node lines then ``id a b section`` element lines."""
        lines = ["# nodes: id x_mm y_mm"]
        lines += [f"{i} {x:.12g} {y:.12g}" for i, (x, y) in enumerate(self.nodes)]
        lines.append("# elements: id node_a node_b section")
        lines += [f"{i} {a} {b} {s}" for i, (a, b, s) in enumerate(self.elements)]
        return "\n".join(lines) + "\n"

    def write_text(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def read_node_element_text(path):
    """Parse a file written by :meth:`LatticeModel.write_text`.

    Returns ``(nodes, elements)`` arrays; section data is not part of the format.
    """
    nodes, elements = [], []
    target = None
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                target = elements if "elements" in line else nodes
                continue
            parts = line.split()
            if target is nodes:
                nodes.append((float(parts[1]), float(parts[2])))
            else:
                elements.append((int(parts[1]), int(parts[2]), int(parts[3])))
    return np.array(nodes, dtype=float), np.array(elements, dtype=int)
