import json
import math
from pathlib import Path

import pytest

import meshsim

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"

PAIR = {
    "name": "pair",
    "duration": 5,
    "topology": {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 50, "y": 0}], "radio_range": 100},
    "flows": [{"id": 1, "src": 0, "dest": 1, "rate": 10, "start": 1}],
}


def test_validate_reports_errors():
    assert meshsim.validate(PAIR) == []
    bad = dict(PAIR, flows=[{"id": 1, "src": 0, "dest": 0}])
    errors = meshsim.validate(bad)
    assert any("source equals destination" in e for e in errors)
    with pytest.raises(ValueError):
        meshsim.run(bad)


def test_run_pair_delivers():
    r = meshsim.run(PAIR, seed=7)
    assert not r.overflow
    assert r.pdr(1) == pytest.approx(1.0)
    assert r.metrics["seed"] == 7
    assert r.trace_csv.splitlines()[0].startswith("time")


def test_run_is_deterministic(tmp_path):
    path = SCENARIOS / "basic_grid.json"
    a = meshsim.run(path, seed=3, out_dir=tmp_path)
    b = meshsim.run(path, seed=3)
    assert a.trace_csv == b.trace_csv
    assert a.metrics_json == b.metrics_json
    assert (tmp_path / "metrics.json").read_text() == a.metrics_json


def test_blackhole_detection_and_offline_replay():
    r = meshsim.run(SCENARIOS / "blackhole_aodv.json")
    assert r.pdr(1) == pytest.approx(0.0)
    assert r.classification_csv.startswith("monitor,neighbor,label")
    params = json.loads((SCENARIOS / "blackhole_aodv.json").read_text())["detection"]
    csv = meshsim.detect(r.trace_csv, params)
    assert csv.startswith("monitor,neighbor,label")


def test_sweep_summary():
    s = meshsim.sweep(SCENARIOS / "basic_grid.json", 1, 3, threads=2)
    assert s["seeds"] == [1, 2, 3]
    assert s["flows"][0]["mean_pdr"] == pytest.approx(1.0)


def test_blom_keys_symmetric():
    k = meshsim.blom_keys(seed=11, n=12, t=3, q=10007)
    for i in range(12):
        for j in range(12):
            assert k[i][j] == k[j][i]


def test_estimators():
    assert meshsim.update_reliability(1.0, 0.0) == pytest.approx(0.5)
    assert meshsim.update_reliability(0.5, 1.0, alpha=0.25) == pytest.approx(0.625)
    b = meshsim.estimate_bandwidth(1000, 0.01, 0.05, 0.1)
    assert b > 0 and math.isfinite(b)


def test_chi2_and_classify():
    stat, reject = meshsim.chi2_row_test([50, 0], [0, 50], 0.05)
    assert reject and stat == pytest.approx(100.0)
    _, reject = meshsim.chi2_row_test([25, 25], [25, 25], 0.05)
    assert not reject
    good = [[40, 10], [10, 40]]
    bad = [[0, 50], [0, 50]]
    c = meshsim.classify([good] * 5 + [bad], alpha=0.05, anova="f_test")
    assert len(c["labels"]) == 6
    with pytest.raises(ValueError):
        meshsim.classify([good, good], anova="nope")
