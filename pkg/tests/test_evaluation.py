import json
from dataclasses import replace

import numpy as np
import pytest

from microdistort.detection import DetectorConfig, detect
from microdistort.distortion import distort_physical
from microdistort.evaluation import (
    CSV_HEADER,
    TrialConfig,
    emit_report,
    reports_from_json,
    run_lsb_trials,
    run_trials,
    sweep,
    trial_outcomes,
    wilson,
)
from microdistort.keystream import derive_seed, generate_keystream, seed_words
from microdistort.traces import synth_constant, synth_gradual_spikes, synth_uniform


@pytest.fixture(scope="module")
def noisy():
    return synth_uniform(0, 100, 20_000, seed=7)


def cfg(detector="delta", n=200, trials=400, eps=0.5, **kw):
    dc = DetectorConfig(epsilon=eps, delta_threshold=kw.pop("dth", float("inf")))
    return TrialConfig(detector=detector, n=n, trials=trials, detector_config=dc, **kw)


def test_wilson_interval():
    lo, hi = wilson(0, 100)
    assert lo == 0.0 and 0.03 < hi < 0.04
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    assert wilson(0, 0) == (0.0, 1.0)


def test_constant_trace_is_perfect():
    flat = synth_constant(5, 3000, resolution=1)
    for det in ("delta", "filtered"):
        r = run_trials(flat, cfg(det, n=100, trials=300, eps=1, dth=3), jobs=1)
        assert r.fp_pct == 0.0 and r.fn_pct["eda"] == 0.0


def test_report_fields_and_config_echo(noisy):
    r = run_trials(noisy, cfg(trials=100), jobs=1)
    assert r.detector == "delta" and r.n == 200 and r.trials == 100
    assert set(r.fn_pct) == {"eda", "rda"}
    assert r.fp_ci[0] <= r.fp_pct <= r.fp_ci[1]
    assert r.config["epsilon"] == 0.5 and r.config["band"] == [1.0, 3.0]
    assert r.config["trace_length"] == 20_000 and "jobs" not in r.config


def test_kernel_agrees_with_library_detector(noisy):
    """Trial 0 recomputed by hand through the public API."""
    c = cfg(trials=5)
    reasons, gauges = trial_outcomes(noisy, c, jobs=1)
    span = np.uint64(len(noisy) - c.n + 1)
    start = int(seed_words(derive_seed(0, "window", c.n), 5)[0] % span)
    key_seed = int(seed_words(derive_seed(0, "key", c.n), 5)[0])
    key = generate_keystream(key_seed, c.n)
    honest = distort_physical(noisy.slice(start, start + c.n), key, 0.5)
    v = detect("delta", honest, key, c.detector_config)
    assert gauges[0, 0] == pytest.approx(v.x)
    assert (reasons[0, 0] != 0) == v.alarm


def test_sweep_orders_and_handles_edges(noisy):
    assert sweep(noisy, cfg(trials=50), []) == []
    one = sweep(noisy, cfg(trials=50), [100], jobs=1)
    assert len(one) == 1 and one[0].n == 100
    many = sweep(noisy, cfg(trials=50), [300, 100, 200], jobs=1)
    assert [r.n for r in many] == [100, 200, 300]


def test_reproducible_and_independent_of_jobs(noisy):
    c = cfg(trials=300)
    a = emit_report(run_trials(noisy, c, jobs=1))
    b = emit_report(run_trials(noisy, c, jobs=1))
    c8 = emit_report(run_trials(noisy, c, jobs=8))
    assert a == b == c8
    other = emit_report(run_trials(noisy, replace(c, master_seed=1), jobs=1))
    assert other != a


def test_json_round_trip(noisy):
    reports = sweep(noisy, cfg(trials=50), [50, 100], jobs=1)
    data = emit_report(reports, "json")
    assert isinstance(json.loads(data), list)
    back = reports_from_json(data)
    assert [r.to_dict() for r in back] == [r.to_dict() for r in reports]


def test_csv_and_markdown(noisy):
    reports = []
    for det in ("simple", "delta", "filtered"):
        c = cfg(det, trials=50, dth=30)
        reports += sweep(noisy, c, [50, 100], jobs=1)
    csv = emit_report(reports, "csv").decode().splitlines()
    assert csv[0] == CSV_HEADER and len(csv) == 7
    md = emit_report(reports, "markdown").decode().splitlines()
    assert md[0].count("FP (%)") == 3 and md[0].count("FN RDA (%)") == 3
    assert len(md) == 4 and md[2].startswith("| 50 |")
    with pytest.raises(ValueError):
        emit_report(reports, "xml")


def test_fn_column_blank_when_attack_skipped(noisy):
    r = run_trials(noisy, cfg(trials=50, attacks=("eda",)), jobs=1)
    assert emit_report(r, "csv").decode().splitlines()[1].endswith(",,50")


def test_disjoint_unpaired_noise_and_cap(noisy):
    base = cfg(n=100, trials=100)
    d = run_trials(noisy, replace(base, sampling="disjoint"), jobs=1)
    assert d.trials == 100
    with pytest.raises(ValueError):
        run_trials(noisy, replace(base, sampling="disjoint", trials=201), jobs=1)
    paired = run_trials(noisy, base, jobs=1)
    unpaired = run_trials(noisy, replace(base, paired=False), jobs=1)
    assert paired.fp_pct == unpaired.fp_pct
    assert unpaired.config["paired"] is False
    noisy_run = run_trials(noisy, replace(base, noise_std=0.3), jobs=1)
    assert noisy_run.config["noise_std"] == 0.3
    with pytest.raises(ValueError, match="cap"):
        run_trials(noisy, replace(base, max_window=50), jobs=1)


@pytest.mark.parametrize("bad", [
    dict(detector="lsb"), dict(trials=0), dict(n=2), dict(n=10**6),
    dict(sampling="stride"), dict(attacks=("replay",)), dict(noise_std=-1),
])
def test_config_errors(noisy, bad):
    with pytest.raises(ValueError):
        run_trials(noisy, replace(cfg(), **bad), jobs=1)


def test_noise_swamps_a_tiny_signal():
    flat = synth_constant(5, 5000, resolution=0.01)
    base = cfg(n=100, trials=400, eps=0.01)
    assert run_trials(flat, base, jobs=1).fp_pct == 0.0
    assert run_trials(flat, replace(base, noise_std=5.0), jobs=1).fp_pct > 50.0


def test_wrong_key_behaves_like_an_attacker(noisy):
    """Validating with a key unrelated to the one used to distort: near-certain alarm."""
    n = 2000
    alarms = 0
    for s in range(40):
        key = generate_keystream(s, n)
        other = generate_keystream(10_000 + s, n)
        honest = distort_physical(synth_constant(50, n, resolution=0.01), key, 0.5)
        alarms += detect("delta", honest, other, DetectorConfig(epsilon=0.5)).alarm
    assert alarms == 40


def test_fn_rda_non_increasing_in_n():
    tr = synth_gradual_spikes(50_000, 0.5, seed=3)
    c = cfg("filtered", trials=1500, dth=3, eps=0.5)
    fns = [run_trials(tr, replace(c, n=n), jobs=1) for n in (20, 40, 80)]
    for a, b in zip(fns, fns[1:]):
        assert b.fn_pct["rda"] <= a.fn_pct["rda"] + a.fn_half_width("rda") + b.fn_half_width("rda")
    assert fns[-1].fn_pct["rda"] < fns[0].fn_pct["rda"]


def test_lsb_trials_report():
    r = run_lsb_trials(4, 20_000, master_seed=1, jobs=1)
    assert r.fp_pct == 0.0 and r.detector == "lsb"
    assert abs(r.fn_pct["lsb-guess"] - 100 / 16) < 3 * r.fn_half_width("lsb-guess")
    assert emit_report(r) == emit_report(run_lsb_trials(4, 20_000, master_seed=1, jobs=8))
    with pytest.raises(ValueError):
        run_lsb_trials(0, 10)
