"""Keyed micro-distortion of sensor traces.

Physical: every reading moves by exactly +epsilon (key bit 1) or -epsilon
(key bit 0).  Results are not clamped, so a zero reading can become
-epsilon; clamping would bias the transition means the detectors rely on.

Digital: the least significant bit of each integer tick is overwritten with
the key bit (single key) or with the bit chosen by the two-layer mix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .keystream import KeyStream, TwoLayerKey, effective_bits
from .traces import SensorTrace, to_ticks

SCHEMES = ("physical", "digital-lsb", "digital-two-layer")


class KeyExhausted(ValueError):
    """The key has fewer slots than the trace has readings."""


@dataclass(frozen=True)
class DistortedTrace(SensorTrace):
    epsilon: float = 0.0
    scheme: str = "physical"
    source_length: int = 0


def _wrap(trace: SensorTrace, ticks, epsilon, scheme) -> DistortedTrace:
    return DistortedTrace(ticks, trace.resolution, unit=trace.unit,
                          sample_interval=trace.sample_interval, timestamps=trace.timestamps,
                          breaks=trace.breaks, epsilon=epsilon, scheme=scheme,
                          source_length=len(trace))


def _check_key(key, n):
    if key.length < n:
        raise KeyExhausted(f"key has {key.length} slots, trace needs {n}")


def epsilon_ticks(epsilon: float, resolution: float) -> int:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return to_ticks(epsilon, resolution)


def apply_signs(ticks: np.ndarray, bits: np.ndarray, eps: int) -> np.ndarray:
    return ticks + (2 * bits[: ticks.size].astype(np.int64) - 1) * eps


def distort_physical(trace: SensorTrace, key: KeyStream, epsilon: float) -> DistortedTrace:
    eps = epsilon_ticks(epsilon, trace.resolution)
    _check_key(key, len(trace))
    return _wrap(trace, apply_signs(trace.ticks, key.bits, eps), epsilon, "physical")


def set_lsb(ticks: np.ndarray, bits: np.ndarray) -> np.ndarray:
    # two's complement keeps this exact for negative ticks too
    return (ticks & ~np.int64(1)) | bits[: ticks.size].astype(np.int64)


def distort_digital_lsb(trace: SensorTrace, key: KeyStream) -> DistortedTrace:
    _check_key(key, len(trace))
    return _wrap(trace, set_lsb(trace.ticks, key.bits), 0.0, "digital-lsb")


def distort_digital_two_layer(trace: SensorTrace, key: TwoLayerKey) -> DistortedTrace:
    _check_key(key, len(trace))
    return _wrap(trace, set_lsb(trace.ticks, effective_bits(key)), 0.0, "digital-two-layer")


def undistort_physical(readings: SensorTrace, key: KeyStream, epsilon: float) -> SensorTrace:
    """Invert the physical scheme given the key."""
    eps = epsilon_ticks(epsilon, readings.resolution)
    _check_key(key, len(readings))
    ticks = readings.ticks - (2 * key.bits[: len(readings)].astype(np.int64) - 1) * eps
    return SensorTrace(ticks, readings.resolution, unit=readings.unit,
                       sample_interval=readings.sample_interval,
                       timestamps=readings.timestamps, breaks=readings.breaks)
