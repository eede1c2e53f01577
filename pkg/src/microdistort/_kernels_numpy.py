"""Vectorized numpy implementations of the hot kernels.

Every function here has a loop twin in ``_kernels_numba`` with the same
signature and the same integer results.  This module is the fallback used
when numba is unavailable or ``MICRODISTORT_BACKEND=numpy`` is set.
"""

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_SHIFTS = np.arange(64, dtype=np.uint64)

OK, BAND, EVIDENCE, LSB = 0, 1, 2, 3


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def words(seed, count):
    """SplitMix64 output words 0..count-1 for ``seed`` (counter mode)."""
    ctr = np.arange(1, count + 1, dtype=np.uint64)
    return mix64(np.uint64(seed) + ctr * GAMMA)


def keystream_bits(seed, n):
    w = words(seed, (n + 63) // 64)
    bits = (w[:, None] >> _SHIFTS[None, :]) & np.uint64(1)
    return bits.ravel()[:n].astype(np.uint8)


def uniform01(seed, n):
    return (words(seed, n) >> np.uint64(11)).astype(np.float64) * _INV53


def std_normal(seed, n):
    w = words(seed, 2 * n)
    u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53
    u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def delta_gauge(ticks, key, breaks, dth):
    """Sums and counts of kept deltas over the 01 and 10 key transitions."""
    d = np.diff(ticks)
    a = key[:-1]
    b = key[1:]
    keep = ~breaks & (np.abs(d) <= dth)
    m01 = keep & (a == 0) & (b == 1)
    m10 = keep & (a == 1) & (b == 0)
    return (int(d[m01].sum()), int(m01.sum()), int(d[m10].sum()), int(m10.sum()))


def simple_gauge(ticks, key):
    on = key == 1
    return (int(ticks[on].sum()), int(on.sum()), int(ticks[~on].sum()), int((~on).sum()))


def decide_delta(s01, c01, s10, c10, m, lo, hi):
    if c01 + c10 < m or c01 == 0 or c10 == 0:
        return EVIDENCE, np.nan
    num = float(s01 * c10 - s10 * c01)
    den = float(c01 * c10)
    x = num / den
    if lo * den <= num <= hi * den:
        return OK, x
    return BAND, x


def decide_simple(s1, c1, s0, c0, lo, hi):
    if c1 == 0 or c0 == 0:
        return EVIDENCE, np.nan
    num = float(s1 * c0 - s0 * c1)
    den = float(c1 * c0)
    x = num / den
    if lo * den <= num <= hi * den:
        return OK, x
    return BAND, x


def run_trials(trace, breaks, n, starts, key_seeds, atk_seeds, noise_seeds,
               eps, noise_std, detector, dth, m, lo, hi, streams):
    """Evaluate ``len(starts)`` trials.

    ``detector`` is 0 (simple), 1 (delta) or 2 (filtered; ``dth`` applies).
    ``streams`` is a uint8 mask of (honest, eda, rda).  Returns reason codes
    and gauges (ticks), both shaped (T, 3); skipped streams get code -1.
    """
    T = starts.shape[0]
    reasons = np.full((T, 3), -1, dtype=np.int8)
    gauges = np.full((T, 3), np.nan)
    for t in range(T):
        s = starts[t]
        d = trace[s:s + n]
        if noise_std > 0.0:
            d = d + np.rint(noise_std * std_normal(noise_seeds[t], n)).astype(np.int64)
        gaps = breaks[s:s + n - 1]
        key = keystream_bits(key_seeds[t], n)
        signs = 2 * key.astype(np.int64) - 1
        for j in range(3):
            if not streams[j]:
                continue
            if j == 0:
                obs = d + signs * eps
            elif j == 1:
                obs = d
            else:
                coin = keystream_bits(atk_seeds[t], n).astype(np.int64)
                obs = d + (2 * coin - 1) * eps
            if detector == 0:
                code, x = decide_simple(*simple_gauge(obs, key), lo, hi)
            else:
                cut = dth if detector == 2 else np.inf
                code, x = decide_delta(*delta_gauge(obs, key, gaps, cut), m, lo, hi)
            reasons[t, j] = code
            gauges[t, j] = x
    return reasons, gauges


def _bit_matrix(seeds, t):
    nw = (t + 63) // 64
    ctr = np.arange(1, nw + 1, dtype=np.uint64) * GAMMA
    w = mix64(seeds[:, None] + ctr[None, :])
    bits = (w[:, :, None] >> _SHIFTS[None, None, :]) & np.uint64(1)
    return bits.reshape(seeds.shape[0], -1)[:, :t]


def lsb_trials(seeds1, seeds2, seeds3, atk_seeds, t, block=1 << 15):
    """Per trial, 1 if a coin-guessing forger matched all ``t`` effective bits."""
    T = seeds1.shape[0]
    out = np.zeros(T, dtype=np.uint8)
    for lo in range(0, T, block):
        sl = slice(lo, min(lo + block, T))
        k1 = _bit_matrix(seeds1[sl], t)
        eff = np.where(k1 == 1, _bit_matrix(seeds2[sl], t), _bit_matrix(seeds3[sl], t))
        guess = _bit_matrix(atk_seeds[sl], t)
        out[sl] = np.all(eff == guess, axis=1)
    return out
