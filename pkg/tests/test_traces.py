import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microdistort import traces
from microdistort.traces import (
    LoadError,
    SensorTrace,
    load_trace_csv,
    quantize,
    save_trace_csv,
    synth_constant,
    synth_diurnal,
    synth_ramp,
    synth_uniform,
    trace_stats,
    window_by_clock,
)

from conftest import dataset


def write(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_exact_grid(tmp_path):
    p = write(tmp_path, "t,v\n0,1.0\n1,2.0\n2,3.0\n")
    tr = load_trace_csv(p, "v", resolution=0.5)
    assert tr.ticks.tolist() == [2, 4, 6]


def test_load_rounds_half_to_even_on_written_decimal(tmp_path):
    p = write(tmp_path, "v\n0.0005\n0.0015\n0.0025\n-0.0005\n2.5\n")
    assert load_trace_csv(p, "v", resolution=0.001).ticks.tolist() == [0, 2, 2, 0, 2500]
    assert quantize(["0.5", "1.5", "2.5"], 1.0).tolist() == [0, 2, 2]


@pytest.mark.parametrize("text, fragment", [
    ("t,v\n0,1\n", "no column 'w'"),
    ("t,w\n0,1\n1,abc\n", "row 3"),
    ("", "empty"),
    ("t,w\n", "row 2"),
    ("t,w\n0,1\n1,nan\n", "row 3"),
])
def test_load_errors_name_the_row(tmp_path, text, fragment):
    with pytest.raises(LoadError, match=fragment):
        load_trace_csv(write(tmp_path, text), "w", 1.0)


def test_load_timestamps_and_gaps(tmp_path):
    p = write(tmp_path, "ts;v\n2020-05-29T00:00:00;1\n2020-05-29T00:00:01Z;2\n2020-05-29T00:00:05;3\n", "g.csv")
    tr = load_trace_csv(p, "v", 1.0, sample_interval=1.0, time_column="ts", delimiter=";")
    assert tr.timestamps[1] - tr.timestamps[0] == 1.0
    assert tr.breaks.tolist() == [False, True]
    assert tr.delta_ticks().tolist() == [1]


def test_save_reload_idempotent(tmp_path):
    tr = synth_uniform(-5, 5, 500, seed=4, resolution=0.001)
    save_trace_csv(tr, tmp_path / "a.csv")
    back = load_trace_csv(tmp_path / "a.csv", "value", 0.001)
    assert np.array_equal(back.ticks, tr.ticks)
    save_trace_csv(back, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_trace_validation():
    with pytest.raises(ValueError):
        SensorTrace(np.array([], dtype=np.int64), 1.0)
    with pytest.raises(ValueError):
        SensorTrace(np.array([1]), 0.0)
    with pytest.raises(TypeError):
        SensorTrace(np.array([1.5]), 1.0)
    tr = SensorTrace(np.array([1, 2]), 1.0)
    with pytest.raises(ValueError):
        tr.ticks[0] = 5


def test_synth_uniform_mean_and_delta_mean():
    tr = synth_uniform(0, 100, 10**5, seed=9)
    assert 49.0 <= tr.values.mean() <= 51.0
    d = tr.delta_ticks() * tr.resolution
    assert -0.5 <= d.mean() <= 0.5
    # telescoping: mean change equals (last - first) / (n - 1)
    assert d.mean() == pytest.approx((tr.values[-1] - tr.values[0]) / (len(tr) - 1))


def test_synth_uniform_one_tick_range():
    tr = synth_uniform(5, 5.01, 2000, seed=1, resolution=0.01)
    assert set(tr.ticks.tolist()) <= {500, 501}


def test_synth_uniform_deterministic_and_validated():
    a = synth_uniform(0, 100, 50, seed=3)
    assert np.array_equal(a.ticks, synth_uniform(0, 100, 50, seed=3).ticks)
    with pytest.raises(ValueError):
        synth_uniform(5, 5, 10, seed=1)


def test_synth_constant_and_ramp():
    assert synth_constant(7, 4, resolution=1).values.tolist() == [7, 7, 7, 7]
    ramp = synth_ramp(0, 2, 4, resolution=1)
    assert ramp.values.tolist() == [0, 2, 4, 6]
    assert ramp.delta_ticks().tolist() == [2, 2, 2]


def test_trace_stats_small():
    st_ = trace_stats(SensorTrace(np.array([1, 2, 4]), 1.0))
    assert st_.mean == pytest.approx(7 / 3)
    assert st_.delta_mean == 1.5
    assert (st_.delta_min, st_.delta_median, st_.delta_max) == (1.0, 1.5, 2.0)
    with pytest.raises(ValueError):
        trace_stats(SensorTrace(np.array([1]), 1.0))


@settings(max_examples=40)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=60), st.randoms(use_true_random=False))
def test_value_stats_permutation_invariant(values, rnd):
    a = trace_stats(SensorTrace(np.array(values), 1.0))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    b = trace_stats(SensorTrace(np.array(shuffled), 1.0))
    assert (a.max, a.min, a.median) == (b.max, b.min, b.median)
    assert a.mean == pytest.approx(b.mean)
    for s in (a, b):
        assert s.min <= s.median <= s.max
        assert s.delta_min <= s.delta_median <= s.delta_max


def test_delta_stats_are_order_dependent():
    a = trace_stats(SensorTrace(np.array([0, 10, 0, 10]), 1.0))
    b = trace_stats(SensorTrace(np.array([0, 0, 10, 10]), 1.0))
    assert (a.max, a.min, a.mean, a.median) == (b.max, b.min, b.mean, b.median)
    assert (a.delta_min, a.delta_max) != (b.delta_min, b.delta_max)


def test_window_by_clock_daytime_600_per_day():
    tr = synth_diurnal(3, seed=1)
    day = window_by_clock(tr, "08:00", "18:00")
    assert len(day) == 3 * 600
    assert day.breaks.sum() == 2  # one per day boundary
    assert np.flatnonzero(day.breaks).tolist() == [599, 1199]


def test_window_by_clock_whole_day_is_identity():
    tr = synth_diurnal(2, seed=1)
    same = window_by_clock(tr, "00:00", "24:00")
    assert np.array_equal(same.ticks, tr.ticks)
    assert not same.breaks.any()


def test_window_by_clock_errors():
    tr = synth_diurnal(1, seed=1)
    with pytest.raises(ValueError, match="empty"):
        window_by_clock(tr, "10:00", "10:00")
    with pytest.raises(ValueError, match="timestamps"):
        window_by_clock(synth_constant(1, 5), "08:00", "18:00")


def test_window_by_clock_wraps_midnight():
    tr = synth_diurnal(2, seed=1)
    night = window_by_clock(tr, "22:00", "02:00")
    assert len(night) == 2 * 240
    # segments: 00-02 day 1, 22:00 day 1 through 02:00 day 2, 22-24 day 2
    assert np.flatnonzero(night.breaks).tolist() == [119, 359]


def test_to_ticks_rejects_off_grid():
    assert traces.to_ticks(4.08, 0.001) == 4080
    with pytest.raises(ValueError):
        traces.to_ticks(0.0015, 0.001)


@pytest.mark.parametrize("name, column, res, expect", [
    ("swat_lit101_2020-05-29.csv", "LIT101", 0.001,
     dict(max=816.968, min=491.484, delta_max=3.022, delta_min=-2.080)),
    ("rae_house1_mains.csv", "mains", 1.0, dict(max=17206.0, median=775.0)),
])
def test_dataset_statistics(name, column, res, expect):
    tr = load_trace_csv(dataset(name), column, res)
    got = trace_stats(tr)
    for k, v in expect.items():
        assert getattr(got, k) == pytest.approx(v, abs=res / 2)
