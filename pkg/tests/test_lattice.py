import math

import numpy as np
import pytest

from auxgrip.errors import ConstructionError, GeometryError, InputError
from auxgrip.lattice import (
    LatticeSpec, UnitCellSpec, build_lattice, build_patch, effective_poisson_ratio,
    expected_element_count, gibson_ashby_poisson, lattice_element_count, load_lattice_spec,
)


def rot(deg):
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def test_minimal_tiling():
    m = build_lattice(LatticeSpec(rows=1, cols=1))
    assert len(m.port_nodes) == 3
    cells = {tuple(c) for c in m.node_cell[m.interior_nodes]}
    assert cells == {(0, 0)}
    assert m.is_connected()
    assert len(m.elements) == expected_element_count(LatticeSpec(rows=1, cols=1))


def test_build_is_deterministic():
    spec = LatticeSpec(inclination=45.0)
    a, b = build_lattice(spec), build_lattice(spec)
    assert a.nodes.tobytes() == b.nodes.tobytes()
    assert a.elements.tobytes() == b.elements.tobytes()
    assert a.to_text() == b.to_text()


@pytest.mark.parametrize("inc", [0.0, 30.0, 45.0, 60.0, 17.5])
def test_model_invariants(inc):
    spec = LatticeSpec(inclination=inc)
    m = build_lattice(spec)
    assert m.is_connected()
    assert len(m.elements) == expected_element_count(spec)
    assert m.element_lengths().min() > 0
    face = list(m.front_face_nodes)
    assert not set(face) & set(m.port_nodes)
    assert np.all(np.diff(m.nodes[face, 0]) > 0)


@pytest.mark.parametrize("inc", [30.0, 45.0, 60.0])
def test_inclination_rotates_interior_only(inc):
    base = build_lattice(LatticeSpec())
    tilted = build_lattice(LatticeSpec(inclination=inc))
    assert len(tilted.elements) == len(base.elements)
    np.testing.assert_allclose(
        tilted.nodes[tilted.interior_nodes], base.nodes[base.interior_nodes] @ rot(inc).T, atol=1e-9
    )
    # backbone arch and ports stay put in the finger frame
    np.testing.assert_array_equal(tilted.nodes[list(tilted.port_nodes)], base.nodes[list(base.port_nodes)])
    np.testing.assert_allclose(tilted.port_normals, base.port_normals)


def test_closed_form_patch_count():
    for rows, cols in [(1, 1), (2, 3), (4, 6)]:
        assert len(build_patch(UnitCellSpec(), rows, cols).elements) == lattice_element_count(rows, cols)


def test_reentrant_cell_is_auxetic():
    nu = effective_poisson_ratio(build_patch(UnitCellSpec(), 6, 6))
    assert nu < 0
    assert gibson_ashby_poisson(UnitCellSpec()) < 0


def test_regular_hexagon_against_closed_form():
    cell = UnitCellSpec(strut_length_h=8.0, strut_length_d=8.0, reentrant_angle=30.0)
    oracle = gibson_ashby_poisson(cell)
    assert oracle == pytest.approx(1.0, rel=1e-12)
    nu = effective_poisson_ratio(build_patch(cell, 6, 6))
    assert abs(nu - oracle) <= 0.10 * abs(oracle)


def test_square_grid_has_no_lateral_coupling():
    nu = effective_poisson_ratio(build_patch(UnitCellSpec(reentrant_angle=0.0), 6, 6))
    assert abs(nu) < 0.05


@pytest.mark.parametrize("angle", [-34, -30, -20, -10, 10, 20, 30, 45, 60])
def test_sign_law_default_proportions(angle):
    nu = effective_poisson_ratio(build_patch(UnitCellSpec(reentrant_angle=angle), 6, 6))
    assert np.sign(nu) == np.sign(angle)


@pytest.mark.parametrize("angle", [-60, -50, -40, -10, 10, 40, 60])
def test_sign_law_long_horizontal_walls(angle):
    # below about -34.5 deg the default walls fold over; h = 12 reaches -60 deg
    cell = UnitCellSpec(strut_length_h=12.0, reentrant_angle=angle)
    nu = effective_poisson_ratio(build_patch(cell, 6, 6))
    assert np.sign(nu) == np.sign(angle)


def test_folded_cell_is_a_geometry_error():
    with pytest.raises(GeometryError):
        UnitCellSpec(reentrant_angle=-60.0).validate()


def test_spec_validation():
    bad = [
        LatticeSpec(rows=0), LatticeSpec(inclination=90.0), LatticeSpec(inclination=-5.0),
        LatticeSpec(port_positions=(0.5, 0.1, 0.9)), LatticeSpec(port_positions=(0.1, 0.5)),
        LatticeSpec(cell=UnitCellSpec(wall_thickness=7.0)),
        LatticeSpec(cell=UnitCellSpec(reentrant_angle=85.0)),
    ]
    for spec in bad:
        with pytest.raises((InputError, GeometryError)):
            build_lattice(spec)


def test_arch_too_small_for_finger():
    with pytest.raises(GeometryError):
        build_lattice(LatticeSpec(backbone_arch_radius=10.0))


def test_colliding_ports():
    with pytest.raises(ConstructionError):
        build_lattice(LatticeSpec(port_positions=(0.5, 0.501, 0.502)))


def test_strain_precondition():
    with pytest.raises(InputError):
        effective_poisson_ratio(build_patch(UnitCellSpec(), 3, 3), strain=0.01)


def test_spec_json_round_trip(tmp_path):
    spec = LatticeSpec(rows=2, cols=3, inclination=30.0, cell=UnitCellSpec(strut_length_h=9.0))
    p = tmp_path / "spec.json"
    import json

    p.write_text(json.dumps(spec.to_dict()))
    assert load_lattice_spec(p) == spec
