import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backhaul import (MIN_DISTANCE_M, Channel, ScenarioConfig, db_to_linear, dbm_to_watts,
                      gen_channel, gen_layout, large_scale_gain, large_scale_gains, linear_to_db,
                      load_scenario, pathloss_db, scenario_from_dict, watts_to_dbm)


def test_unit_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert watts_to_dbm(0.001) == pytest.approx(0.0)
    assert db_to_linear(3.0103) == pytest.approx(2.0, rel=1e-5)
    assert dbm_to_watts(-93.98) == pytest.approx(4.0e-13, rel=1e-3)  # -174 dBm/Hz over 10 MHz


@given(st.floats(-150, 150))
def test_db_roundtrip(x):
    assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-9)


def test_conversion_rejects_bad_input():
    with pytest.raises(ValueError):
        linear_to_db(0.0)
    with pytest.raises(ValueError):
        db_to_linear(np.nan)


def test_config_broadcasts_and_freezes():
    c = ScenarioConfig(M=4, N=3, P=2.0, gamma=[1.0, 2.0, 3.0])
    assert c.w.shape == (3,) and np.all(c.n == 1.0)
    with pytest.raises(ValueError):
        c.gamma[0] = 5.0
    sub = c.subset([2, 0])
    assert sub.N == 2 and list(sub.gamma) == [3.0, 1.0]


@pytest.mark.parametrize("kw", [dict(M=0, N=2, P=1.0), dict(M=2, N=2, P=0.0),
                                dict(M=2, N=2, P=1.0, gamma=[1.0]), dict(M=2, N=2, P=1.0, n=-1.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ScenarioConfig(**kw)


def test_layout_is_uniform_over_the_cell():
    lay = gen_layout(20000, 3)
    r = lay.distances_m
    assert r.min() >= MIN_DISTANCE_M and r.max() <= 1000.0
    # uniform over the disk: P(r <= 500 m) = 1/4
    assert np.mean(r <= 500.0) == pytest.approx(0.25, abs=0.01)
    assert np.array_equal(gen_layout(5, 9).sap_positions, gen_layout(5, 9).sap_positions)


def test_pathloss_and_gains():
    assert pathloss_db(1.0) == pytest.approx(128.0)
    assert pathloss_db(0.1) == pytest.approx(128.0 - 37.6)
    lay = gen_layout(50, 1, shadowing_std=0.0)
    d = large_scale_gains(lay, 2)
    expect = 10 ** ((5.0 - pathloss_db(lay.distances_m / 1000.0)) / 10)
    np.testing.assert_allclose(d, expect, rtol=1e-12)
    assert large_scale_gain(lay, 3, 2) == d[3]
    with pytest.raises(IndexError):
        large_scale_gain(lay, 50, 2)


def test_shadowing_statistics():
    lay = gen_layout(20000, 4)
    d = large_scale_gains(lay, 5)
    resid = -linear_to_db(d) + 5.0 - pathloss_db(lay.distances_m / 1000.0)
    assert np.std(resid) == pytest.approx(10.0, rel=0.03)


def test_channel_statistics():
    d = np.array([0.5, 2.0])
    ch = gen_channel(d, 4000, 0)
    assert ch.H.shape == (2, 4000) and ch.h.shape == (4000, 2)
    np.testing.assert_allclose(np.mean(np.abs(ch.H) ** 2, axis=1), d, rtol=0.05)
    with pytest.raises(ValueError):
        gen_channel([1.0, 0.0], 4, 0)


def test_channel_from_vectors_roundtrip():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    ch = Channel.from_vectors(h)
    np.testing.assert_array_equal(ch.h, h)
    assert ch.subset([1]).N == 1


def test_scenario_parsing(tmp_path):
    raw = {"M": 4, "N": 2, "P_dBm": 30, "noise_dBm": -93.98, "gamma_dB": [0, 10],
           "cell_radius_m": 500, "seed": 7}
    sc = scenario_from_dict(raw)
    assert sc.config.P == pytest.approx(1.0) and sc.seed == 7
    np.testing.assert_allclose(sc.config.gamma, [1.0, 10.0])
    assert sc.layout_params == {"cell_radius": 500.0}
    p = tmp_path / "s.json"
    p.write_text(json.dumps(raw))
    assert load_scenario(p).config.N == 2
    with pytest.raises(ValueError):
        scenario_from_dict({**raw, "bogus": 1})
    with pytest.raises(ValueError):
        scenario_from_dict({**raw, "P_watts": 1.0})
    with pytest.raises(ValueError):
        scenario_from_dict({"N": 2})
