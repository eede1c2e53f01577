"""Sensor traces on a fixed-point grid.

Readings are stored as integer ticks; ``value = tick * resolution``.  A
trace also carries a ``breaks`` mask with one entry per consecutive pair:
``breaks[i]`` is True when the step from sample ``i`` to ``i + 1`` crosses a
gap (missing timestamps, a clock-window boundary) and must not be used as a
change value anywhere downstream.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import kernels
from .kernels import MASK64


class LoadError(ValueError):
    """A CSV trace could not be loaded; the message names the offending row."""


@dataclass(frozen=True)
class Preset:
    resolution: float
    unit: str
    epsilon: float
    delta_threshold: float
    sample_interval: float


# Per-dataset defaults.  Synthetic data has no natural filter threshold.
PRESETS = {
    "house": Preset(1.0, "W", 40.0, 200.0, 1.0),
    "solar": Preset(0.01, "kW", 7.5, 30.0, 60.0),
    "swat": Preset(0.001, "mm", 4.08, 25.0, 1.0),
    "synthetic": Preset(0.01, "units", 0.5, math.inf, 1.0),
}


def _dec(x) -> Decimal:
    return Decimal(repr(x)) if isinstance(x, float) else Decimal(str(x))


def to_ticks(value: float, resolution: float) -> int:
    """Exact tick count for ``value``; raises if it is off the grid."""
    q = _dec(value) / _dec(resolution)
    if q != q.to_integral_value():
        raise ValueError(f"{value} is not a multiple of resolution {resolution}")
    return int(q)


def ticks_float(value: float, resolution: float) -> float:
    """``value / resolution`` with grid-exact values snapped to integers."""
    if math.isinf(value):
        return value
    q = _dec(value) / _dec(resolution)
    r = q.to_integral_value()
    return float(r) if q == r else float(q)


def quantize(values, resolution: float) -> np.ndarray:
    """Round readings onto the grid, half-to-even, exactly in decimal.

    ``values`` may be floats or decimal strings.  The float path handles the
    bulk; entries whose fractional tick lies near one half are redone with
    ``Decimal`` so ties are decided on the written value, not its binary
    approximation.
    """
    raw = list(values) if not isinstance(values, np.ndarray) else values
    f = np.asarray(raw, dtype=np.float64)
    q = f / resolution
    ticks = np.rint(q)
    frac = np.abs(q - np.floor(q) - 0.5)
    dres = _dec(resolution)
    for i in np.flatnonzero(frac < 1e-6):
        v = raw[i]
        d = _dec(float(v)) if not isinstance(v, str) else Decimal(v.strip())
        ticks[i] = float((d / dres).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))
    return ticks.astype(np.int64)


def format_value(tick: int, resolution: float) -> str:
    return str(Decimal(int(tick)) * _dec(resolution))


@dataclass(frozen=True)
class SensorTrace:
    ticks: np.ndarray = field(repr=False)
    resolution: float
    unit: str = ""
    sample_interval: float = 1.0
    timestamps: np.ndarray | None = field(default=None, repr=False)
    breaks: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        ticks = np.asarray(self.ticks)
        if ticks.ndim != 1 or ticks.size == 0:
            raise ValueError("trace must be a non-empty 1-D sequence")
        if not np.issubdtype(ticks.dtype, np.integer):
            raise TypeError("trace ticks must be integers; use SensorTrace.from_values")
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        if not self.sample_interval > 0:
            raise ValueError("sample_interval must be > 0")
        ticks = ticks.astype(np.int64)
        ticks.setflags(write=False)
        object.__setattr__(self, "ticks", ticks)
        brk = np.zeros(ticks.size - 1, dtype=bool) if self.breaks is None else np.asarray(self.breaks, dtype=bool)
        if brk.shape != (ticks.size - 1,):
            raise ValueError("breaks must have one entry per consecutive pair")
        brk.setflags(write=False)
        object.__setattr__(self, "breaks", brk)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.float64)
            if ts.shape != ticks.shape:
                raise ValueError("timestamps must match values")
            object.__setattr__(self, "timestamps", ts)

    @classmethod
    def from_values(cls, values, resolution: float, **kw) -> "SensorTrace":
        return cls(quantize(values, resolution), resolution, **kw)

    def __len__(self):
        return int(self.ticks.size)

    @property
    def values(self) -> np.ndarray:
        return self.ticks * self.resolution

    def delta_ticks(self) -> np.ndarray:
        """Changes between consecutive samples, gap positions dropped."""
        return np.diff(self.ticks)[~self.breaks]

    def slice(self, start: int, stop: int) -> "SensorTrace":
        ts = None if self.timestamps is None else self.timestamps[start:stop]
        return replace(self, ticks=self.ticks[start:stop], timestamps=ts,
                       breaks=self.breaks[start:max(start, stop - 1)])


@dataclass(frozen=True)
class TraceStats:
    max: float
    min: float
    mean: float
    median: float
    delta_max: float
    delta_min: float
    delta_mean: float
    delta_median: float
    count: int
    unit: str = ""

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def trace_stats(trace: SensorTrace) -> TraceStats:
    if len(trace) < 2:
        raise ValueError("trace_stats needs at least two samples")
    r = trace.resolution
    t = trace.ticks
    d = trace.delta_ticks()
    if d.size == 0:
        raise ValueError("trace has no change values outside gaps")
    return TraceStats(
        max=float(t.max() * r), min=float(t.min() * r),
        mean=float(t.mean() * r), median=float(np.median(t) * r),
        delta_max=float(d.max() * r), delta_min=float(d.min() * r),
        delta_mean=float(d.mean() * r), delta_median=float(np.median(d) * r),
        count=len(trace), unit=trace.unit,
    )


# --- CSV --------------------------------------------------------------------

def parse_timestamp(text: str, fmt: str | None = None) -> float:
    text = text.strip()
    if fmt:
        stamp = dt.datetime.strptime(text, fmt)
    else:
        try:
            return float(int(text))
        except ValueError:
            pass
        stamp = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return stamp.timestamp()


def gap_breaks(timestamps: np.ndarray, sample_interval: float) -> np.ndarray:
    """Mark steps whose spacing exceeds 1.5 sample intervals (dropped samples)."""
    return np.diff(timestamps) > 1.5 * sample_interval


def read_table(path, delimiter: str = ","):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if not rows:
        raise LoadError(f"{path}: empty file (row 1: missing header)")
    header, body = rows[0], rows[1:]
    if not body:
        raise LoadError(f"{path}: no data rows after header (row 2)")
    return header, body


def load_trace_csv(path, value_column: str, resolution: float, sample_interval: float = 1.0,
                   time_column: str | None = None, delimiter: str = ",", unit: str = "",
                   time_format: str | None = None) -> SensorTrace:
    """Load one column of a headed CSV onto the fixed-point grid.

    Rows are numbered as in the file (header is row 1).  Blank lines are
    rejected rather than skipped, so row numbers in errors match the file.
    """
    header, body = read_table(path, delimiter)
    try:
        col = header.index(value_column)
    except ValueError:
        raise LoadError(f"{path}: row 1: no column {value_column!r} in header {header}") from None
    tcol = None
    if time_column is not None:
        if time_column not in header:
            raise LoadError(f"{path}: row 1: no column {time_column!r} in header {header}")
        tcol = header.index(time_column)
    cells, stamps = [], []
    for rowno, row in enumerate(body, start=2):
        try:
            cell = row[col].strip()
            v = Decimal(cell)
        except (IndexError, InvalidOperation):
            raise LoadError(f"{path}: row {rowno}: cannot parse {value_column!r} from {row}") from None
        if not v.is_finite():
            raise LoadError(f"{path}: row {rowno}: non-finite value {cell!r}")
        cells.append(cell)
        if tcol is not None:
            try:
                stamps.append(parse_timestamp(row[tcol], time_format))
            except (IndexError, ValueError):
                raise LoadError(f"{path}: row {rowno}: cannot parse timestamp from {row}") from None
    ts = np.asarray(stamps, dtype=np.float64) if tcol is not None else None
    breaks = gap_breaks(ts, sample_interval) if ts is not None else None
    return SensorTrace(quantize(cells, resolution), resolution, unit=unit,
                       sample_interval=sample_interval, timestamps=ts, breaks=breaks)


def write_trace_csv(trace: SensorTrace, fh, value_column: str = "value",
                    time_column: str = "t", delimiter: str = ","):
    ts = trace.timestamps
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow([time_column, value_column])
    for i, tick in enumerate(trace.ticks):
        t = _fmt_time(ts[i]) if ts is not None else _fmt_time(i * trace.sample_interval)
        w.writerow([t, format_value(tick, trace.resolution)])


def save_trace_csv(trace: SensorTrace, path, **kw):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        write_trace_csv(trace, fh, **kw)


def _fmt_time(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def rewrite_column(src, dst, column: str, trace: SensorTrace, delimiter: str = ","):
    """Copy ``src`` to ``dst`` (path or text stream) with ``column`` replaced."""
    header, body = read_table(src, delimiter)
    if len(body) != len(trace):
        raise ValueError("replacement trace length does not match the table")
    col = header.index(column)
    if hasattr(dst, "write"):
        _write_rows(dst, header, body, col, trace, delimiter)
        return
    with Path(dst).open("w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, header, body, col, trace, delimiter)


def _write_rows(fh, header, body, col, trace, delimiter):
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    for row, tick in zip(body, trace.ticks):
        row = list(row)
        row[col] = format_value(tick, trace.resolution)
        w.writerow(row)


# --- synthesis --------------------------------------------------------------

def synth_uniform(low: float, high: float, n: int, seed: int, resolution: float = 0.01,
                  unit: str = "units", sample_interval: float = 1.0) -> SensorTrace:
    if not low < high:
        raise ValueError(f"need low < high, got {low}, {high}")
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.asarray(kernels.uniform01(np.uint64(int(seed) & MASK64), int(n)))
    return SensorTrace(quantize(low + u * (high - low), resolution), resolution,
                       unit=unit, sample_interval=sample_interval)


def synth_constant(value: float, n: int, resolution: float = 0.01, **kw) -> SensorTrace:
    if n < 1:
        raise ValueError("n must be >= 1")
    return SensorTrace(np.full(n, to_ticks(value, resolution), dtype=np.int64), resolution, **kw)


def synth_ramp(start: float, slope: float, n: int, resolution: float = 0.01, **kw) -> SensorTrace:
    if n < 1:
        raise ValueError("n must be >= 1")
    t0, step = to_ticks(start, resolution), to_ticks(slope, resolution)
    return SensorTrace(t0 + step * np.arange(n, dtype=np.int64), resolution, **kw)


def synth_gradual_spikes(n: int, epsilon: float, seed: int, spike_rate: float = 0.01,
                         spike_size: float = 50.0, resolution: float = 0.01,
                         level: float = 100.0) -> SensorTrace:
    """Slow sinusoid plus small random-walk wander, with isolated spikes.

    Spikes of ``spike_size * epsilon`` hit a ``spike_rate`` fraction of slots
    and last one sample, which is the shape of an appliance switching on and
    off between two readings.
    """
    i = np.arange(n)
    wander = np.cumsum(np.asarray(kernels.std_normal(np.uint64(seed & MASK64), n))) * (0.1 * epsilon)
    base = level + 10 * epsilon * np.sin(2 * np.pi * i / 3600.0) + wander
    u = np.asarray(kernels.uniform01(np.uint64((seed + 1) & MASK64), n))
    base = base + np.where(u < spike_rate, spike_size * epsilon, 0.0)
    return SensorTrace(quantize(base, resolution), resolution, unit="units")


def synth_diurnal(days: int, seed: int, peak: float = 1500.0, resolution: float = 0.01,
                  start: float = 1588291200.0) -> SensorTrace:
    """Per-minute solar-like output: zero at night, noisy bell by day.

    ``start`` defaults to 2020-05-01 00:00 UTC; every day is complete.
    """
    n = days * 1440
    ts = start + 60.0 * np.arange(n)
    hours = ((ts - start) % 86400) / 3600.0
    bell = np.clip(np.sin(np.pi * (hours - 6.5) / 12.5), 0.0, None) ** 1.5
    z = np.asarray(kernels.std_normal(np.uint64(seed & MASK64), n))
    power = np.clip(peak * bell * (1.0 + 0.02 * z), 0.0, None)
    return SensorTrace(quantize(power, resolution), resolution, unit="kW",
                       sample_interval=60.0, timestamps=ts)


# --- clock windows -----------------------------------------------------------

def parse_clock(text) -> float:
    """'HH:MM[:SS]' or seconds into seconds since midnight; '24:00' allowed."""
    if isinstance(text, (int, float)):
        return float(text)
    parts = [int(p) for p in str(text).split(":")]
    parts += [0] * (3 - len(parts))
    sec = parts[0] * 3600 + parts[1] * 60 + parts[2]
    if not 0 <= sec <= 86400:
        raise ValueError(f"time of day out of range: {text!r}")
    return float(sec)


def window_by_clock(trace: SensorTrace, start, end, utc_offset: float = 0.0) -> SensorTrace:
    """Keep samples whose time of day falls in ``[start, end)``.

    A window with ``start > end`` wraps past midnight.  Steps that jump over a
    removed stretch are marked as breaks.
    """
    if trace.timestamps is None:
        raise ValueError("window_by_clock needs timestamps")
    lo, hi = parse_clock(start), parse_clock(end)
    tod = np.mod(trace.timestamps + utc_offset, 86400.0)
    keep = (tod >= lo) & (tod < hi) if lo <= hi else (tod >= lo) | (tod < hi)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise ValueError("clock window selects no samples (empty trace)")
    jumped = np.diff(idx) != 1
    carried = trace.breaks[idx[:-1]] & ~jumped
    return SensorTrace(trace.ticks[idx], trace.resolution, unit=trace.unit,
                       sample_interval=trace.sample_interval,
                       timestamps=trace.timestamps[idx], breaks=jumped | carried)
