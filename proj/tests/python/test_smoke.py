import math

import pytest

import panelgmm as pg


def sim(**kw):
    c = pg.DgpConfig()
    for k, v in kw.items():
        setattr(c, k, v)
    return pg.simulate(c)


def test_distribution_values():
    assert pg.sf("chi2", 16.69, 19) == pytest.approx(0.6108606060429504, abs=1e-9)
    assert pg.sf("f", 2.506, 1, 25) == pytest.approx(0.12598348318130725, abs=1e-9)
    assert pg.two_sided_normal_p(1.64) == pytest.approx(0.101005, abs=1e-6)
    assert pg.quantile("normal", 0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    with pytest.raises(pg.ValidationError):
        pg.sf("gamma", 1.0)


def test_panel_roundtrip(tmp_path):
    p = pg.Panel(["a", "b"], 2001, 2003)
    p.set_series("y", [1.0, 2.0, math.nan, 4.0, 5.0, 6.0])
    assert p.entities == ["a", "b"]
    assert p.periods == [2001, 2002, 2003]
    path = str(tmp_path / "p.csv")
    pg.write_panel_csv(p, path)
    q = pg.read_panel_csv(path)
    assert q == p
    assert math.isnan(q.series("y")[2])


def test_estimators_and_gmm():
    p = sim(seed=11)
    fe = pg.estimate(p, "fe", "y", ["x1"], lags=1)
    gmm = pg.estimate(p, "gmm", "y", ["x1"], lags=1, instruments="D.(x1)")
    assert fe["names"] == ["L.y", "x1"]
    assert fe["coefficients"][0] < gmm["coefficients"][0]
    assert abs(gmm["coefficients"][1] - 1.0) < 0.2
    assert gmm["instrument_count"] <= gmm["group_count"]
    assert 0.0 <= gmm["sargan"]["p_value"] <= 1.0
    assert [t["name"] for t in gmm["ar_tests"]][:1] != []


def test_errors_map_to_python_exceptions():
    p = sim(seed=12)
    with pytest.raises(pg.ValidationError):
        pg.estimate(p, "pols", "y", ["nope"])
    with pytest.raises(pg.ParseError):
        pg.parse_instruments("D.(x1")
    assert pg.parse_instruments("L.L.llpr") == "L.L.llpr"


def test_diagnostics_and_unit_root():
    p = sim(seed=13, omega=0.0, fixed_effect_sd=2.0, regressor_effect_loading=1.0)
    h = pg.test(p, "hausman", "y", ["x1"])
    assert h["p_value"] < 0.01
    ur = pg.unit_root(p, "y")
    assert set(ur) >= {"P", "Z", "L", "Pm", "decision"}


def test_monte_carlo_is_seeded():
    c = pg.DgpConfig()
    c.n_entities = 50
    a = pg.monte_carlo(c, "gmm", instruments="D.(x1)", replications=10, seed=3)
    b = pg.monte_carlo(c, "gmm", instruments="D.(x1)", replications=10, seed=3)
    assert a == b
    assert a["failures"] == 0
    assert "sargan" in a["rejection_rates"]


def test_pipeline(tmp_path):
    pg.write_panel_csv(sim(seed=14), str(tmp_path / "p.csv"))
    (tmp_path / "run.ini").write_text(
        "[input]\npanel = p.csv\n[model.m]\ndependent = y\nregressors = x1\nlags = 1\niv = \"D.(x1)\"\n"
    )
    text, code = pg.run_pipeline(str(tmp_path / "run.ini"))
    again, _ = pg.run_pipeline(str(tmp_path / "run.ini"))
    assert code == 0
    assert text == again
    assert "Sargan" in text
