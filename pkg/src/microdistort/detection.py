"""Detectors for hidden impersonators.

All arithmetic on readings happens in integer ticks.  Band checks compare
``sum01 * c10 - sum10 * c01`` against ``band * c01 * c10`` instead of
dividing first, so a gauge that sits exactly on a band edge is classified
the same way on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .distortion import KeyExhausted, epsilon_ticks
from .keystream import KeyStream, TwoLayerKey, effective_bits
from .traces import SensorTrace, ticks_float

DETECTORS = ("simple", "delta", "filtered", "lsb")


def default_min_evidence(n: int) -> int:
    """max(4, ceil((n - 1) / 8)): tolerates losing 3/4 of the expected (n-1)/2."""
    return max(4, math.ceil((n - 1) / 8))


@dataclass(frozen=True)
class DetectorConfig:
    epsilon: float
    delta_threshold: float = math.inf
    min_evidence: int | None = None
    window: int | None = None
    band: tuple[float, float] | None = None

    def band_for(self, detector: str) -> tuple[float, float]:
        if self.band is not None:
            return tuple(self.band)
        e = self.epsilon
        return (e, 3 * e) if detector == "simple" else (2 * e, 6 * e)

    def min_evidence_for(self, n: int) -> int:
        return default_min_evidence(n) if self.min_evidence is None else self.min_evidence

    def validate(self, detector: str):
        e = self.epsilon
        if not e > 0:
            raise ValueError(f"epsilon must be > 0, got {e}")
        lo, hi = self.band_for(detector)
        if not lo < hi:
            raise ValueError(f"band low {lo} must be below band high {hi}")
        if detector in ("delta", "filtered"):
            if not lo <= 4 * e <= hi:
                raise ValueError(f"band ({lo}, {hi}) must contain 4*epsilon = {4 * e}")
            if self.min_evidence is not None and self.min_evidence < 0:
                raise ValueError("min_evidence must be >= 0")
        if detector == "filtered" and not self.delta_threshold > 2 * e:
            raise ValueError(f"delta_threshold {self.delta_threshold} must exceed 2*epsilon = {2 * e}")
        if self.window is not None and self.window < 2:
            raise ValueError("window must be >= 2")


@dataclass(frozen=True)
class DeltaSequence:
    ticks: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    resolution: float = 1.0

    @property
    def deltas(self) -> np.ndarray:
        return self.ticks * self.resolution

    def __len__(self):
        return int(self.ticks.size)


@dataclass(frozen=True)
class Partition:
    s00: np.ndarray
    s01: np.ndarray
    s10: np.ndarray
    s11: np.ndarray


@dataclass(frozen=True)
class DetectionVerdict:
    alarm: bool
    reason: str
    x: float | None = None
    mu01: float | None = None
    mu10: float | None = None
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {"alarm": self.alarm, "reason": self.reason, "x": self.x,
                "mu01": self.mu01, "mu10": self.mu10, "counts": dict(self.counts)}


def delta_sequence(readings: SensorTrace) -> DeltaSequence:
    if len(readings) < 2:
        raise ValueError("delta sequence needs at least two readings")
    return DeltaSequence(np.diff(readings.ticks), readings.breaks.copy(), readings.resolution)


def partition(key: KeyStream, n: int, gaps=None) -> Partition:
    if key.length < n:
        raise KeyExhausted(f"key has {key.length} slots, window needs {n}")
    a = key.bits[: n - 1]
    b = key.bits[1:n]
    ok = np.ones(n - 1, dtype=bool) if gaps is None else ~np.asarray(gaps, dtype=bool)
    pick = lambda x, y: np.flatnonzero(ok & (a == x) & (b == y))  # noqa: E731
    return Partition(pick(0, 0), pick(0, 1), pick(1, 0), pick(1, 1))


def _window(readings: SensorTrace, key_len: int, config: DetectorConfig, minimum: int):
    n = len(readings) if config.window is None else config.window
    if n > len(readings):
        raise ValueError(f"window {n} longer than readings ({len(readings)})")
    if n < minimum:
        raise ValueError(f"window must hold at least {minimum} readings, got {n}")
    if key_len < n:
        raise KeyExhausted(f"key has {key_len} slots, window needs {n}")
    return n


def _verdict(code, x_ticks, res, **extra):
    reason = kernels.REASONS[int(code)]
    x = None if x_ticks is None or math.isnan(x_ticks) else float(x_ticks * res)
    return DetectionVerdict(alarm=reason != "ok", reason=reason, x=x, **extra)


def _delta_family(readings, key, config, detector):
    config.validate(detector)
    n = _window(readings, key.length, config, 3)
    res = readings.resolution
    epsilon_ticks(config.epsilon, res)
    cut = ticks_float(config.delta_threshold, res) if detector == "filtered" else math.inf
    lo, hi = (ticks_float(v, res) for v in config.band_for(detector))
    m = config.min_evidence_for(n)
    s01, c01, s10, c10 = kernels.delta_gauge(readings.ticks[:n], key.bits[:n],
                                             readings.breaks[: n - 1], cut)
    code, x = kernels.decide_delta(s01, c01, s10, c10, m, lo, hi)
    mu01 = s01 / c01 * res if c01 else None
    mu10 = s10 / c10 * res if c10 else None
    if x is not None and math.isnan(x) and c01 and c10:
        x = s01 / c01 - s10 / c10
    return _verdict(code, x, res, mu01=mu01, mu10=mu10,
                    counts={"s01": int(c01), "s10": int(c10), "min_evidence": int(m)})


def detect_filtered_delta(readings: SensorTrace, key: KeyStream, config: DetectorConfig) -> DetectionVerdict:
    """Filtered change-sequence mean difference.

    Steps, in order: difference consecutive readings; drop changes with
    magnitude above ``delta_threshold`` (equality is kept) and any that
    cross a gap; keep the 0->1 and 1->0 key transitions; alarm with
    ``insufficient-evidence`` if fewer than ``m`` changes remain or either
    transition set is empty; otherwise alarm with ``band-violation`` unless
    ``mean(01) - mean(10)`` lies in the closed band (default 2e..6e).
    """
    return _delta_family(readings, key, config, "filtered")


def detect_delta(readings: SensorTrace, key: KeyStream, config: DetectorConfig) -> DetectionVerdict:
    """As :func:`detect_filtered_delta` without the filtration step."""
    return _delta_family(readings, key, config, "delta")


def detect_simple_mean(readings: SensorTrace, key: KeyStream, config: DetectorConfig) -> DetectionVerdict:
    """Baseline: mean of readings with key bit 1 minus mean with key bit 0.

    Honest streams centre on 2e; alarms outside the band (default e..3e).
    """
    config.validate("simple")
    n = _window(readings, key.length, config, 2)
    res = readings.resolution
    epsilon_ticks(config.epsilon, res)
    lo, hi = (ticks_float(v, res) for v in config.band_for("simple"))
    s1, c1, s0, c0 = kernels.simple_gauge(readings.ticks[:n], key.bits[:n])
    code, x = kernels.decide_simple(s1, c1, s0, c0, lo, hi)
    return _verdict(code, x, res, counts={"s1": int(c1), "s0": int(c0)})


def detect_lsb(readings: SensorTrace, key: KeyStream | TwoLayerKey, t: int) -> DetectionVerdict:
    """Alarm iff any of the first ``t`` tick LSBs differs from the key bit in use."""
    if t > len(readings):
        raise ValueError(f"t={t} exceeds window length {len(readings)}")
    if key.length < t:
        raise KeyExhausted(f"key has {key.length} slots, need {t}")
    lsb = (readings.ticks[:t] & 1).astype(np.uint8)
    bad = np.flatnonzero(lsb != effective_bits(key)[:t])
    counts = {"checked": int(t), "mismatches": int(bad.size)}
    if bad.size:
        counts["first_mismatch"] = int(bad[0])
        return DetectionVerdict(True, "lsb-mismatch", counts=counts)
    return DetectionVerdict(False, "ok", counts=counts)


def fn_bound_lsb(p_guess: float, t: int) -> float:
    """Probability a forger survives ``t`` independent bit checks."""
    if not 0.0 <= p_guess <= 1.0:
        raise ValueError("p_guess must lie in [0, 1]")
    if t < 0:
        raise ValueError("t must be >= 0")
    return p_guess ** t


def detect(kind: str, readings: SensorTrace, key, config: DetectorConfig, t: int | None = None):
    if kind == "filtered":
        return detect_filtered_delta(readings, key, config)
    if kind == "delta":
        return detect_delta(readings, key, config)
    if kind == "simple":
        return detect_simple_mean(readings, key, config)
    if kind == "lsb":
        return detect_lsb(readings, key, len(readings) if t is None else t)
    raise ValueError(f"unknown detector {kind!r}; expected one of {DETECTORS}")
