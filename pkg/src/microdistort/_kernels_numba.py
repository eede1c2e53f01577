"""Loop kernels compiled with numba.

Mirrors ``_kernels_numpy`` function for function.  All 64-bit generator
arithmetic stays in uint64; mixing signed and unsigned operands makes numba
promote to float64, so every constant and shift amount is cast explicitly.
"""

import math

import numpy as np
from numba import njit

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

OK, BAND, EVIDENCE, LSB = 0, 1, 2, 3

_jit = njit(cache=True, nogil=True)


@_jit
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@_jit
def _word(seed, j):
    return _mix(seed + np.uint64(j + 1) * GAMMA)


@_jit
def mix64(z):
    out = np.empty(z.shape[0], dtype=np.uint64)
    for i in range(z.shape[0]):
        out[i] = _mix(z[i])
    return out


@_jit
def _fill_bits(seed, out, n):
    nw = (n + 63) // 64
    for j in range(nw):
        w = _word(seed, j)
        base = j * 64
        top = min(64, n - base)
        for b in range(top):
            out[base + b] = np.uint8((w >> np.uint64(b)) & np.uint64(1))


@_jit
def words(seed, count):
    seed = np.uint64(seed)
    out = np.empty(count, dtype=np.uint64)
    for j in range(count):
        out[j] = _word(seed, j)
    return out


@_jit
def keystream_bits(seed, n):
    out = np.empty(n, dtype=np.uint8)
    _fill_bits(np.uint64(seed), out, n)
    return out


@_jit
def uniform01(seed, n):
    seed = np.uint64(seed)
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        out[j] = float(_word(seed, j) >> np.uint64(11)) * _INV53
    return out


@_jit
def std_normal(seed, n):
    seed = np.uint64(seed)
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        u1 = (float(_word(seed, 2 * j) >> np.uint64(11)) + 1.0) * _INV53
        u2 = float(_word(seed, 2 * j + 1) >> np.uint64(11)) * _INV53
        out[j] = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
    return out


@_jit
def delta_gauge(ticks, key, breaks, dth):
    s01 = 0
    c01 = 0
    s10 = 0
    c10 = 0
    for i in range(ticks.shape[0] - 1):
        if breaks[i]:
            continue
        a = key[i]
        b = key[i + 1]
        if a == b:
            continue
        d = ticks[i + 1] - ticks[i]
        if abs(d) > dth:
            continue
        if a == 0:
            s01 += d
            c01 += 1
        else:
            s10 += d
            c10 += 1
    return s01, c01, s10, c10


@_jit
def simple_gauge(ticks, key):
    s1 = 0
    c1 = 0
    s0 = 0
    c0 = 0
    for i in range(ticks.shape[0]):
        if key[i] == 1:
            s1 += ticks[i]
            c1 += 1
        else:
            s0 += ticks[i]
            c0 += 1
    return s1, c1, s0, c0


@_jit
def decide_delta(s01, c01, s10, c10, m, lo, hi):
    if c01 + c10 < m or c01 == 0 or c10 == 0:
        return EVIDENCE, np.nan
    num = float(s01 * c10 - s10 * c01)
    den = float(c01 * c10)
    x = num / den
    if lo * den <= num and num <= hi * den:
        return OK, x
    return BAND, x


@_jit
def decide_simple(s1, c1, s0, c0, lo, hi):
    if c1 == 0 or c0 == 0:
        return EVIDENCE, np.nan
    num = float(s1 * c0 - s0 * c1)
    den = float(c1 * c0)
    x = num / den
    if lo * den <= num and num <= hi * den:
        return OK, x
    return BAND, x


@_jit
def run_trials(trace, breaks, n, starts, key_seeds, atk_seeds, noise_seeds,
               eps, noise_std, detector, dth, m, lo, hi, streams):
    T = starts.shape[0]
    reasons = np.full((T, 3), -1, dtype=np.int8)
    gauges = np.full((T, 3), np.nan)
    d = np.empty(n, dtype=np.int64)
    obs = np.empty(n, dtype=np.int64)
    key = np.empty(n, dtype=np.uint8)
    coin = np.empty(n, dtype=np.uint8)
    cut = dth if detector == 2 else np.inf
    for t in range(T):
        s = starts[t]
        for i in range(n):
            d[i] = trace[s + i]
        if noise_std > 0.0:
            z = std_normal(noise_seeds[t], n)
            for i in range(n):
                d[i] += np.int64(np.rint(noise_std * z[i]))
        gaps = breaks[s:s + n - 1]
        _fill_bits(key_seeds[t], key, n)
        if streams[2]:
            _fill_bits(atk_seeds[t], coin, n)
        for j in range(3):
            if not streams[j]:
                continue
            for i in range(n):
                if j == 0:
                    obs[i] = d[i] + (2 * np.int64(key[i]) - 1) * eps
                elif j == 1:
                    obs[i] = d[i]
                else:
                    obs[i] = d[i] + (2 * np.int64(coin[i]) - 1) * eps
            if detector == 0:
                s1, c1, s0, c0 = simple_gauge(obs, key)
                code, x = decide_simple(s1, c1, s0, c0, lo, hi)
            else:
                s01, c01, s10, c10 = delta_gauge(obs, key, gaps, cut)
                code, x = decide_delta(s01, c01, s10, c10, m, lo, hi)
            reasons[t, j] = code
            gauges[t, j] = x
    return reasons, gauges


@_jit
def lsb_trials(seeds1, seeds2, seeds3, atk_seeds, t):
    T = seeds1.shape[0]
    out = np.zeros(T, dtype=np.uint8)
    k1 = np.empty(t, dtype=np.uint8)
    k2 = np.empty(t, dtype=np.uint8)
    k3 = np.empty(t, dtype=np.uint8)
    g = np.empty(t, dtype=np.uint8)
    for i in range(T):
        _fill_bits(seeds1[i], k1, t)
        _fill_bits(seeds2[i], k2, t)
        _fill_bits(seeds3[i], k3, t)
        _fill_bits(atk_seeds[i], g, t)
        hit = 1
        for b in range(t):
            eff = k2[b] if k1[b] == 1 else k3[b]
            if eff != g[b]:
                hit = 0
                break
        out[i] = hit
    return out
