import json
import math
from importlib import resources

import numpy as np
import pytest

from auxgrip.errors import InputError, ScheduleError, SingularityError
from auxgrip.mechanism import (
    LinearSchedule, MechanismGeometry, MechanismState, PortReactions, TableSchedule,
    default_port_normals, equivalent_tip_force, required_torque, schedule_from_dict, torque_curve,
    torque_sweep,
)

G = MechanismGeometry()
CHECK = MechanismState(phi=90.0, xi=90.0, eta=0.0, mu=90.0, zeta=0.0, theta=0.0)


def rot(v, deg):
    a = math.radians(deg)
    R = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    return np.asarray(v) @ R.T


def test_torque_check_point():
    expected = 30.0 * (110.48 / 42.73 - 1.0)
    assert required_torque(CHECK, G, 1.0) == pytest.approx(expected, rel=1e-12)
    assert required_torque(CHECK, G, 1.0) == pytest.approx(47.57, abs=0.01)


def test_torque_zeros():
    assert required_torque(CHECK, G, 0.0) == 0.0
    assert required_torque(MechanismState(0.0, 45.0, -100.0, 30.0), G, 3.0) == 0.0


def test_torque_linear_in_force():
    rng = np.random.default_rng(2)
    for _ in range(50):
        s = MechanismState(*rng.uniform(0, 90, 2), rng.uniform(-120, -90), rng.uniform(0, 90),
                           0.0, rng.uniform(-30, 30))
        f = rng.uniform(0.1, 10)
        t1, t2 = required_torque(s, G, f), required_torque(s, G, 2 * f)
        assert abs(t2 - 2 * t1) <= 1e-12 * abs(t2)


def test_torque_continuous_in_phi():
    phis = np.linspace(0, 90, 901)
    tau = np.array([required_torque(MechanismState(p, 60.0, -100.0, 45.0), G, 1.0) for p in phis])
    assert tau[0] == 0.0
    assert np.abs(np.diff(tau)).max() < 0.5


@pytest.mark.parametrize("offset", [0.0, 5e-7, -5e-7])
@pytest.mark.parametrize("base", [0.0, 180.0, -180.0])
def test_singularity_guard(base, offset):
    xi = 40.0
    eta = base - xi + math.degrees(offset)
    with pytest.raises(SingularityError, match="eta"):
        required_torque(MechanismState(45.0, xi, eta, 45.0), G, 1.0)


def test_tip_force_cases():
    tip = equivalent_tip_force(PortReactions(0, 0, 0))
    assert tip.F_k == 0 and not tip.theta_defined
    one = PortReactions(0.0, 1.0, 0.0, port_normals=[[1, 0], [0, 1], [1, 0]])
    F, th = equivalent_tip_force(one)
    assert F == pytest.approx(1.0) and th == pytest.approx(0.0)
    n = default_port_normals()
    sym = PortReactions(2.0, 0.0, 2.0, port_normals=n)
    F, th = equivalent_tip_force(sym)
    assert th == pytest.approx(0.0, abs=1e-12)
    assert F == pytest.approx(2 * math.cos(math.radians(30)) * 2.0)


def test_tip_force_equivariance():
    rng = np.random.default_rng(4)
    for _ in range(20):
        pos = rng.normal(0, 20, (3, 2))
        ang = rng.uniform(-60, 60, 3)
        nrm = np.array([rot([0.0, 1.0], a) for a in ang])
        p = rng.uniform(-2, 3, 3)
        tip, tn = rng.normal(0, 5, 2), rot([0.0, 1.0], rng.uniform(-20, 20))
        ref = equivalent_tip_force(PortReactions(*p, pos, nrm), tip, tn)
        beta = rng.uniform(-180, 180)
        moved = equivalent_tip_force(
            PortReactions(*p, rot(pos, beta), rot(nrm, beta)), rot(tip, beta), rot(tn, beta)
        )
        assert moved.F_k == pytest.approx(ref.F_k, rel=1e-12)
        assert moved.theta == pytest.approx(ref.theta, abs=1e-9)
        assert moved.moment == pytest.approx(ref.moment, rel=1e-9, abs=1e-9)


def test_linear_schedule_stays_regular():
    sched = LinearSchedule(G)
    for c in np.linspace(0, 90, 31):
        s = sched(c)
        assert G.contains(s)
        assert abs(math.sin(math.radians(s.eta + s.xi))) >= 0.5 - 1e-12
    with pytest.raises(ScheduleError):
        sched(95.0)


def test_table_schedule():
    rows = [[0, 0, 0, -90, 0], [30, 30, 30, -100, 30], [90, 90, 90, -120, 90]]
    t = TableSchedule(rows, max_gap=40.0)
    assert t(15.0).phi == pytest.approx(15.0)
    with pytest.raises(ScheduleError, match="gap"):
        t(60.0)
    with pytest.raises(ScheduleError):
        t(-1.0)
    with pytest.raises(InputError):
        TableSchedule([[0, 0, 0, -90, 0], [0, 1, 1, -91, 1]])
    assert isinstance(schedule_from_dict({"kind": "table", "rows": rows}), TableSchedule)
    with pytest.raises(InputError):
        schedule_from_dict({"kind": "spline"})


def test_torque_curve_zero_and_scaling():
    zero = [PortReactions(0, 0, 0) for _ in range(5)]
    c = torque_curve(zero)
    assert np.all(c.tau == 0) and np.all(c.grasp == 0)
    rng = np.random.default_rng(9)
    series = [PortReactions(*rng.uniform(0.1, 2, 3)) for _ in range(6)]
    c1 = torque_curve(series)
    c2 = torque_curve([r.scaled(2.0) for r in series])
    np.testing.assert_allclose(c2.tau, 2 * c1.tau, rtol=1e-12)
    np.testing.assert_allclose(c2.tau_total, 6 * c2.tau)


def test_torque_curve_csv(tmp_path):
    c = torque_sweep(CHECK, G, (0.2, 0.4))
    c.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "grasp_N,tau_Nmm,tau_total_Nmm"
    g, t, tt = map(float, lines[1].split(","))
    assert (g, t, tt) == pytest.approx((0.2, 0.2 * 47.56611, 1.2 * 47.56611), rel=1e-6)


def test_geometry_round_trip_and_validation():
    assert MechanismGeometry.from_dict(json.loads(json.dumps(G.to_dict()))) == G
    with pytest.raises(InputError):
        MechanismGeometry(R=0.0)
    with pytest.raises(InputError):
        MechanismGeometry(eta_range=(-130.0, -90.0))
    with pytest.raises(InputError):
        MechanismGeometry.from_dict({"L_XY": 3.0})


def test_paper_torque_points_are_shipped():
    vals = json.loads(resources.files("auxgrip").joinpath("data", "paper_values.json").read_text())
    assert vals["torque_points_Nmm"]["60"][0] == [0.2, 6.73]
    assert vals["torque_points_Nmm"]["0"][0] == [0.2, 22.62]
