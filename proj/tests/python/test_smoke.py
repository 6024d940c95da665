import json
import math

import pytest

import latcap


def test_green_origin_d3():
    assert latcap.srw_green([0, 0, 0]) == pytest.approx(1.516386059151978, rel=1e-12)


def test_green_dimension_error():
    with pytest.raises(latcap.DomainError):
        latcap.srw_green([0, 0])


def test_make_shape_ball():
    assert len(latcap.make_shape("ball", 1, 3)) == 7


def test_two_point_capacity():
    g0 = latcap.srw_green([0, 0, 0])
    gz = latcap.srw_green([4, 0, 0])
    cap = latcap.newton_capacity([[0, 0, 0], [4, 0, 0]])
    assert cap == pytest.approx(2.0 / (g0 + gz), rel=1e-10)


def test_riesz_bracket():
    lo, hi, mu = latcap.capacity_alpha([[0, 0, 0], [1, 0, 0], [0, 2, 0]], 1.5)
    assert lo <= hi
    assert (hi - lo) / lo <= 1e-9
    assert sum(mu) == pytest.approx(1.0)


def test_newton_singleton_sweep():
    recs = latcap.derivative_sweep_newton([[0, 0, 0]], [[0, 0, 0]], [1, 0, 0], [8, 16])
    g0 = latcap.srw_green([0, 0, 0])
    for r in recs:
        assert r["ratio"] == pytest.approx(2.0 / (g0 * (g0 + r["kernel"])), rel=1e-8)


def test_offspring_laws():
    binary = latcap.offspring("binary")
    assert binary["tail_mean"] == pytest.approx(0.5)
    assert binary["size_biased_pmf"][-1] == pytest.approx(1.0)


def test_bcap_small_run():
    est = latcap.estimate_bcap([[0] * 5], "binary", 4000, seed=3, pilot_samples=2000)
    assert 0.6 < est["estimate"] < 0.8
    assert est["std_error"] > 0


def test_run_sweep_from_json():
    config = {"kind": "riesz", "dim": 3, "alpha": 1.0, "A": {"points": [[0, 0, 0]]},
              "radii": [4, 8, 16]}
    records, header = latcap.run_sweep(json.dumps(config))
    assert len(records) == 3
    for r in records:
        assert r["ratio"] == pytest.approx(2.0 / (1.0 + r["kernel"]), abs=1e-8)
    assert any(line.startswith("config ") for line in header)


def test_bad_config_names_field():
    with pytest.raises(latcap.ConfigError, match="radii"):
        latcap.run_sweep(json.dumps({"kind": "newton", "dim": 3, "A": {"points": [[0, 0, 0]]},
                                     "radii": [8, 4]}))


def test_fit_convergence_synthetic():
    radii = [8, 16, 32, 64]
    ratios = [1.0 - 0.5 / r for r in radii]
    limit, slope, r2 = latcap.fit_convergence(radii, ratios, 1.0)
    assert slope == pytest.approx(-1.0, abs=1e-6)
    assert limit == pytest.approx(1.0, abs=1e-6)
    assert math.isfinite(r2)
