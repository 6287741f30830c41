from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wfcnav.episode import EpisodeLog
from wfcnav.evaluation import (
    EmptyResults,
    EnergyLog,
    EpisodeResult,
    MalformedLog,
    NonpositiveShortestLen,
    NoQualifyingSamples,
    bucket_of,
    energy_log_from_speeds,
    evaluate_logs,
    fmt_pair,
    lowpass,
    mechanical_cot,
    report_csv,
    result_from_log,
    spl,
    success,
    success_rate,
    tracking_error_stats,
    write_report,
)


def test_spl_examples():
    assert spl([EpisodeResult(True, 10.0, 10.0)]) == 1.0
    assert spl([EpisodeResult(True, 10.0, 20.0)]) == 0.5
    for p in (0.0, 5.0, 100.0):
        assert spl([EpisodeResult(False, 10.0, p)]) == 0.0
    # travelling less than the shortest path cannot score above 1
    assert spl([EpisodeResult(True, 10.0, 8.0)]) == 1.0
    with pytest.raises(EmptyResults):
        spl([])
    with pytest.raises(NonpositiveShortestLen):
        spl([EpisodeResult(True, 0.0, 1.0)])


results_st = st.lists(
    st.builds(EpisodeResult, st.booleans(), st.floats(0.1, 50), st.floats(0.0, 200)), min_size=1, max_size=40)


@given(results_st)
def test_spl_bounded_by_success_rate(results):
    assert 0.0 <= spl(results) <= success_rate(results) + 1e-12


@given(results_st)
def test_spl_matches_direct_formula(results):
    direct = sum(r.success * r.shortest_len / max(r.shortest_len, r.travelled_len) for r in results) / len(results)
    assert math.isclose(spl(results), direct, rel_tol=1e-12, abs_tol=1e-15)


def test_success_examples():
    t = np.linspace(0, 30, 301)
    path = np.stack([np.linspace(10, 0.4, 301), np.zeros(301)], axis=1)
    assert success(t, path, (0.0, 0.0))
    assert not success(t, np.tile([0.6, 0.0], (301, 1)), (0.0, 0.0))
    late = np.linspace(0, 61, 611)
    track = np.where(late[:, None] >= 61.0, [[0.4, 0.0]], [[5.0, 0.0]])
    assert not success(late, track, (0.0, 0.0))
    assert success(late, track, (0.0, 0.0), budget=61.0)
    with pytest.raises(MalformedLog):
        success([0.0], [[0.0, 0.0]], None)


def test_cot_examples():
    log = EnergyLog([[1.0]], [[2.0]], 100.0, [2.0], 10.0)
    assert mechanical_cot(log) == pytest.approx(0.01, abs=1e-15)
    neg = EnergyLog([[-1.0, 2.0]], [[2.0, -3.0]], 100.0, [2.0], 10.0)
    assert mechanical_cot(neg) == 0.0
    slow = EnergyLog([[1.0]], [[2.0]], 100.0, [0.2], 10.0)
    with pytest.raises(NoQualifyingSamples):
        mechanical_cot(slow)
    with pytest.raises(ValueError):
        EnergyLog([[1.0]], [[2.0, 1.0]], 100.0, [2.0], 10.0)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.3, 3))
def test_cot_linear_in_torque(tau, k, v):
    a = mechanical_cot(EnergyLog([[tau]], [[1.5]], 100.0, [v], 10.0))
    b = mechanical_cot(EnergyLog([[k * tau]], [[1.5]], 100.0, [v], 10.0))
    assert math.isclose(b, k * a, rel_tol=1e-12)


def test_pure_driving_cot_is_small():
    speeds = np.full(200, 1.5)
    cot = mechanical_cot(energy_log_from_speeds(speeds, 10.0))
    assert 0.001 < cot < 0.1


def test_tracking_examples():
    cmd = np.tile([1.0, 0.0, 0.0], (50, 1))
    perfect = tracking_error_stats(cmd, cmd)
    assert perfect["mean"] == 0.0 and perfect["bins"][0] == 50
    off = tracking_error_stats(cmd, cmd - [0.3, 0.0, 0.0])
    assert off["mean"] == pytest.approx(0.3, abs=1e-12)
    assert sum(1 for c in off["bins"] if c) == 1 and off["bins"][6] == 50
    assert len(off["bins"]) == 40
    with pytest.raises(NoQualifyingSamples):
        tracking_error_stats(cmd * 0.4, cmd * 0.4)


@given(st.lists(st.tuples(st.floats(0.6, 2), st.floats(-3, 3)), min_size=1, max_size=50))
def test_histogram_mass_equals_count(rows):
    c = np.array([[r[0], 0.0] for r in rows])
    v = np.array([[r[1], 0.0] for r in rows])
    out = tracking_error_stats(c, v)
    assert sum(out["bins"]) == out["count"] == len(rows)


def test_lowpass_step_response():
    rate, cutoff = 10.0, 5.0
    x = np.r_[0.0, np.ones(30)]
    y = lowpass(x, rate, cutoff)
    a = (1 / rate) / (1 / (2 * math.pi * cutoff) + 1 / rate)
    n = np.arange(31)
    assert np.allclose(y, 1 - (1 - a) ** n, atol=1e-14, rtol=0)
    assert lowpass(np.full(10, 2.5), rate).tolist() == [2.5] * 10


def test_buckets_and_format():
    assert bucket_of(4.99) is None
    assert bucket_of(5.0) == "5-10"
    assert bucket_of(10.0) == "10-20"
    assert bucket_of(20.0) == "10-20"
    assert bucket_of(20.01) is None
    assert fmt_pair(0.8971, 0.9014) == "0.897 (0.901)"
    assert fmt_pair(None, None) == "-"


def synthetic_log(i, goal_x, reach, speed=1.0, n=60):
    xs = np.minimum(np.arange(1, n + 1) * 0.1 * speed, goal_x if reach else goal_x - 1.0)
    recs = [{"t": round(0.1 * (k + 1), 10), "pose": [float(x), 0.0, 0.0, 0.0], "vel": [speed, 0.0, 0.0],
             "action": [speed, 0.0, 0.0], "wp1": [goal_x, 0.0], "wp2": [goal_x, 0.0],
             "reward": {}, "done": k == n - 1, "reason": None} for k, x in enumerate(xs)]
    hdr = {"type": "header", "episode": i, "start": [0.0, 0.0], "goal": [goal_x, 0.0],
           "shortest_len": goal_x, "hl_dt": 0.1}
    return EpisodeLog(hdr, recs)


def test_result_from_log():
    r = result_from_log(synthetic_log(0, 5.5, True))
    assert r.success and r.shortest_len == 5.5 and r.travelled_len == pytest.approx(5.5)
    assert not result_from_log(synthetic_log(1, 5.5, False)).success
    with pytest.raises(MalformedLog):
        result_from_log(EpisodeLog({"type": "header"}, []))


def test_evaluate_logs_report(tmp_path):
    logs = [synthetic_log(0, 5.5, True), synthetic_log(1, 5.5, False), synthetic_log(2, 12.0, False, n=130)]
    rep = evaluate_logs(logs)
    assert rep["episodes"] == 3
    assert rep["success_rate"] == pytest.approx(1 / 3)
    assert rep["buckets"]["5-10"]["cell"] == "0.500 (0.500)"
    assert rep["buckets"]["10-20"]["cell"] == "0.000 (0.000)"
    assert rep["cot_mean"] > 0
    write_report(rep, tmp_path / "m.json", tmp_path / "m.csv")
    assert json.loads((tmp_path / "m.json").read_text())["episodes"] == 3
    rows = list(csv.reader(io.StringIO((tmp_path / "m.csv").read_text())))
    assert rows[0][-1] == "spl (success rate)"
    assert [r[0] for r in rows[1:]] == ["5-10", "10-20"]


def test_empty_report_keeps_bucket_rows():
    rep = evaluate_logs([])
    assert rep["spl"] is None and list(rep["buckets"]) == ["5-10", "10-20"]
    assert all(r["cell"] == "-" and r["episodes"] == 0 for r in rep["buckets"].values())
    assert report_csv(rep).count("\n") == 3
