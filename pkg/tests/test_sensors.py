import io
import json
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from auxgrip.errors import FitError, IngestionError, InputError
from auxgrip.sensors import (
    BeamGaugeParams, FsrCalibration, band_at, fit_series, fit_with_bands, force_to_strain,
    load_series, strain_to_force, write_series,
)


def data(name):
    return resources.files("auxgrip").joinpath("data", name)


def test_strain_conversion_value():
    # G E eps b h^2 / (6 L) with SI units
    hand = 2.1 * 3.30e9 * 100e-6 * 10.4e-3 * (1.57e-3) ** 2 / (6 * 8e-3)
    assert strain_to_force(100.0) == pytest.approx(hand, rel=1e-12)
    assert strain_to_force(100.0) == pytest.approx(0.3701, abs=1e-4)
    assert strain_to_force(0.0) == 0.0


def test_strain_conversion_linear():
    eps = np.array([1.0, 37.5, 100.0, -250.0, 1e4])
    f = strain_to_force(eps)
    np.testing.assert_allclose(strain_to_force(2 * eps), 2 * f, rtol=1e-12)
    np.testing.assert_allclose(force_to_strain(f), eps, rtol=1e-12)


def test_bridge_mode_divides_by_gauge_factor():
    paper = BeamGaugeParams().newtons_per_microstrain
    bridge = BeamGaugeParams(mode="bridge").newtons_per_microstrain
    assert paper / bridge == pytest.approx(2.1**2)


def test_gauge_factor_certificate_warning():
    with pytest.warns(UserWarning, match="certificate"):
        BeamGaugeParams(gauge_factor=2.2)
    with pytest.raises(InputError):
        BeamGaugeParams(mode="half-bridge")


def test_load_small_file():
    text = "t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N\n0.0,1,2,3,0.5\n0.1,2,3,4,0.6\n0.25,3,4,5,0.7\n"
    s = load_series(io.StringIO(text))
    assert len(s) == 3
    np.testing.assert_array_equal(s.t, [0.0, 0.1, 0.25])
    np.testing.assert_allclose(s.channel("P2"), strain_to_force(np.array([2.0, 3.0, 4.0])))


@pytest.mark.parametrize("text, line", [
    ("", None),
    ("t_s,eps1_ue,eps2_ue,eps3_ue\n0,1,2,3\n", 1),
    ("t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N\n0,1,2,3,4\n0.1,1,x,3,4\n", 3),
    ("t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N\n0,1,2,3,4\n0.1,1,2,3\n", 3),
    ("t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N\n0.2,1,2,3,4\n0.1,1,2,3,4\n", 3),
    ("t_s,eps1_ue,eps2_ue,eps3_ue,fsr_N\n0,1,nan,3,4\n", 2),
])
def test_ingestion_errors(text, line):
    with pytest.raises(IngestionError) as exc:
        load_series(io.StringIO(text))
    if line is not None:
        assert exc.value.row == line
        assert f"row {line}" in str(exc.value)


def test_raw_schema_with_calibration():
    cal = FsrCalibration.load(data("fsr_calibration.json"))
    raw = load_series(data("aux_0_raw.csv"), schema="raw", calibration=cal)
    ref = load_series(data("aux_0.csv"))
    np.testing.assert_allclose(raw.contact, ref.contact, atol=1e-9)
    with pytest.raises(InputError):
        load_series(data("aux_0_raw.csv"), schema="raw")
    bad = "t_s,eps1_ue,eps2_ue,eps3_ue,fsr_V\n0,1,2,3,1.0\n0.1,1,2,3,9.0\n"
    with pytest.raises(IngestionError) as exc:
        load_series(io.StringIO(bad), schema="raw", calibration=cal)
    assert exc.value.row == 3


def test_write_then_load(tmp_path):
    t = np.linspace(0, 1, 5)
    eps = np.arange(15.0).reshape(5, 3)
    write_series(tmp_path / "s.csv", t, eps, np.ones(5))
    s = load_series(tmp_path / "s.csv")
    np.testing.assert_array_equal(s.strain, eps)


def test_fixture_peak_p3():
    s = load_series(data("aux_0.csv"))
    assert s.channel("P3").max() == pytest.approx(2.35, abs=1e-9)


def test_exact_line_fit():
    x = np.linspace(0, 3, 10)
    f = fit_with_bands(x, 2 - 0.5 * x, degree=1)
    assert f.r2 == pytest.approx(1.0) and f.rss == pytest.approx(0.0, abs=1e-25)
    np.testing.assert_allclose(f.coefficients, [2.0, -0.5], atol=1e-12)


def test_hand_ols_orthogonal_regressor():
    # y = x^2 on {-1, 0, 1}: slope 0, intercept 2/3, RSS = 2/3, TSS = 2/3
    f = fit_with_bands([-1, 0, 1], [1, 0, 1], degree=1)
    np.testing.assert_allclose(f.coefficients, [2 / 3, 0.0], atol=1e-14)
    assert f.rss == pytest.approx(2 / 3) and f.r2 == pytest.approx(0.0, abs=1e-14)


def test_degree_nine_on_44_points():
    rng = np.random.default_rng(0)
    x = np.arange(44) * 0.1
    f = fit_with_bands(x, np.sin(x) + rng.normal(0, 0.1, 44))
    assert (f.n_points, f.dof) == (44, 34)


def test_bands_against_textbook_formula():
    rng = np.random.default_rng(1)
    x = np.sort(rng.uniform(0, 5, 25))
    y = 1 + x - 0.3 * x**2 + rng.normal(0, 0.2, 25)
    f = fit_with_bands(x, y, degree=2, level=0.9)
    X = np.column_stack([np.ones_like(x), x, x * x])
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ X.T @ y
    np.testing.assert_allclose(f.coefficients, beta, rtol=1e-9)
    s2 = ((y - X @ beta) ** 2).sum() / 22
    h = np.einsum("ij,jk,ik->i", X, XtX_inv, X)
    tq = stats.t.ppf(0.95, 22)
    np.testing.assert_allclose(f.conf_hi - f.fitted, tq * np.sqrt(s2 * h), rtol=1e-9)
    np.testing.assert_allclose(f.pred_hi - f.fitted, tq * np.sqrt(s2 * (1 + h)), rtol=1e-9)
    yhat, bands = band_at(f, x[:4])
    np.testing.assert_allclose(yhat, f.fitted[:4], rtol=1e-10)
    np.testing.assert_allclose(bands[:, 1], f.conf_hi[:4], rtol=1e-9)


def test_fit_errors_name_the_channel():
    s = load_series(data("aux_0.csv"), label="0")
    with pytest.raises(FitError, match=r"P1\(0\)"):
        fit_series(s, degree=44)
    with pytest.raises(FitError):
        fit_with_bands([0, 1, 2], [1, 2, 3], degree=1, level=1.0)
    with pytest.raises(FitError):
        fit_with_bands([1, 1, 1, 1, 1], [1, 2, 3, 4, 5], degree=1)


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(8, 60),
    degree=st.integers(1, 5),
    seed=st.integers(0, 2**31 - 1),
    noise=st.floats(1e-3, 10.0),
)
def test_fit_invariants(n, degree, seed, noise):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(-3, 7, n)) + np.arange(n) * 1e-3
    y = np.polyval(rng.normal(0, 1, 3), x) + rng.normal(0, noise, n)
    f = fit_with_bands(x, y, degree=degree, level=0.95)
    assert f.adj_r2 < f.r2 <= 1.0
    wide = fit_with_bands(x, y, degree=degree, level=0.99)
    assert np.all(wide.conf_lo <= f.conf_lo) and np.all(wide.conf_hi >= f.conf_hi)
    assert np.all(f.pred_lo < f.conf_lo) and np.all(f.pred_hi > f.conf_hi)
    # residuals orthogonal to the design columns (x scaled to [-1, 1])
    s = (2 * x - x.min() - x.max()) / (x.max() - x.min())
    V = np.vander(s, degree + 1, increasing=True)
    r = f.residuals
    assert np.abs(V.T @ r).max() <= 1e-9 * max(np.linalg.norm(V, axis=0).max() * np.linalg.norm(y), 1.0)


def test_statistics_replay_matches_generation():
    gen = json.loads(data("fixture_stats.json").read_text())
    for inc in (0, 30, 45, 60):
        fits = fit_series(load_series(data(f"aux_{inc}.csv"), label=str(inc)))
        for ch, f in fits.items():
            ref = gen[f"{ch}({inc})"]
            assert (f.n_points, f.dof) == (44, 34)
            assert round(f.rss, 3) == round(ref["RSS"], 3)
            assert round(f.r2, 3) == round(ref["R2"], 3)
            assert round(f.adj_r2, 3) == round(ref["AdjR2"], 3)
            assert f.y.max() == pytest.approx(ref["peak"], abs=1e-9)


def test_contact_channel_statistics():
    s = load_series(data("aux_0.csv"))
    c = s.channel("contact")
    assert c.mean() == pytest.approx(8.51, abs=0.05)
    assert c.std(ddof=1) == pytest.approx(1.31, abs=0.05)
    assert c.max() == pytest.approx(9.59, abs=0.01)
    assert not math.isclose(c.max(), 9.65)
