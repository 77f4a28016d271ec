"""Smoke tests for the python bindings: the main operations end to end."""

import math
import os
from pathlib import Path

import pytest

import varcap

DATA = Path(os.environ.get("VARCAP_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))

TWO_BUS = """{
  "s_base_kva": 3000.0, "v_base_kv": 2.4, "slack": "src", "v0_pu": [1, 1, 1],
  "buses": [
    { "id": "src", "phases": "a" },
    { "id": "b1", "phases": "a" }
  ],
  "lines": [
    { "from": "src", "to": "b1",
      "r_ohm": [[0.0576, 0, 0], [0, 0, 0], [0, 0, 0]],
      "x_ohm": [[0.1152, 0, 0], [0, 0, 0], [0, 0, 0]] }
  ]}"""


def test_version():
    assert varcap.__version__


def test_two_bus_sensitivity_hand_value():
    net = varcap.parse_network(TWO_BUS)
    sens = varcap.build_sensitivity(net)
    y = varcap.predict_voltages(sens, [0.1], [0.0])
    assert y[0] == pytest.approx(1.002, abs=1e-12)


def test_quantiles():
    assert varcap.inv_norm_cdf(0.5) == 0.0
    assert varcap.inv_norm_cdf(0.841344746068543) == pytest.approx(1.0, abs=1e-6)
    assert varcap.norm_cdf(varcap.inv_norm_cdf(0.976)) == pytest.approx(0.976, abs=1e-9)
    with pytest.raises(varcap.Error):
        varcap.inv_norm_cdf(1.0)


def test_reformulate_bounds_circle():
    der = varcap.DerSpec("b1", varcap.Phase.a, 1.0, 0.9, 1.0 / 1.1)
    assert varcap.reformulate_bounds(der, 0.6).q_hi_kvar == pytest.approx(0.8)
    assert varcap.reformulate_bounds(der, 0.0).q_hi_kvar == pytest.approx(1.0)


def test_power_flow_on_fixture():
    net = varcap.load_network(DATA / "feeder3.json")
    zero = [0.0] * net.n_node_phases
    sol = varcap.solve_pf(net, zero, zero)
    assert sol.converged
    assert all(0.9 < v < 1.1 for v in sol.v_mag)


def test_network_rejects_cycles():
    bad = TWO_BUS.replace('"lines": [', '"lines": [ '
                          '{ "from": "src", "to": "b1", '
                          '"r_ohm": [[0.1,0,0],[0,0,0],[0,0,0]], '
                          '"x_ohm": [[0.1,0,0],[0,0,0],[0,0,0]] },')
    with pytest.raises(varcap.Error):
        varcap.parse_network(bad)


def test_mini_sweep_nesting_and_night_invariance():
    net = varcap.load_network(DATA / "feeder3.json")
    model = varcap.load_error_model(DATA / "error_model.json")
    ders = varcap.default_der_fleet(net)

    profiles = varcap.DayProfiles()
    profiles.load_mult = [1.0] * 24
    solar = [0.0] * 24
    solar[12] = 0.5
    profiles.solar_forecast_norm = solar

    result = varcap.sweep(net, model, profiles, ders, [0.5, 0.976])
    regions = result.regions
    assert len(regions) == 48

    night = [r for r in regions if r.hour == 3]
    assert night[0].q_sub_max_kvar == night[1].q_sub_max_kvar
    assert night[0].q_sub_min_kvar == night[1].q_sub_min_kvar

    noon = {r.probability: r for r in regions if r.hour == 12}
    assert noon[0.5].q_sub_max_kvar > noon[0.976].q_sub_max_kvar
    assert noon[0.5].q_sub_min_kvar < noon[0.976].q_sub_min_kvar


def test_monte_carlo_validation_roundtrip():
    net = varcap.load_network(DATA / "feeder3.json")
    model = varcap.load_error_model(DATA / "error_model.json")
    ders = varcap.default_der_fleet(net)

    profiles = varcap.DayProfiles()
    profiles.load_mult = [1.0] * 24
    solar = [0.0] * 24
    solar[12] = 0.5
    profiles.solar_forecast_norm = solar

    result = varcap.sweep(net, model, profiles, ders, [0.976])
    idx = 12
    fr = result.regions[idx]
    sc = result.scenarios[idx]
    assert fr.feasible
    rep = varcap.validate_fr(fr, net, model, sc.forecast_kw, ders,
                             n_samples=2000, seed=3, alpha=0.024, load_mult=sc.load_mult)
    assert rep.passed
    assert rep.per_der_max_rate <= 0.024 + 3 * math.sqrt(0.024 * 0.976 / 2000)
