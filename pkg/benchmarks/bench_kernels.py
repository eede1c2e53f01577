"""Time the compiled and pure-numpy kernels on identical inputs.

    python3 benchmarks/bench_kernels.py [--trials 2000] [--repeat 3]

Prints one row per workload with the best-of-N wall time for each backend,
the speed-up, and whether the outputs agree bit for bit.
"""

import argparse
import time

import numpy as np

from microdistort import _kernels_numpy as knp

try:
    from microdistort import _kernels_numba as knb
except ImportError:  # pragma: no cover
    knb = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def workloads(trials):
    rng = np.random.default_rng(0)
    trace = rng.integers(0, 10_001, 2_000_000).astype(np.int64)
    breaks = np.zeros(trace.size - 1, dtype=bool)
    seeds = [knp.words(np.uint64(s), trials) for s in (1, 2, 3, 4)]
    streams = np.ones(3, dtype=np.uint8)
    for label, det, n, dth in (("simple n=1000", 0, 1000, np.inf),
                               ("delta n=1000", 1, 1000, np.inf),
                               ("filtered n=1000", 2, 1000, 3000.0),
                               ("filtered n=50", 2, 50, 3000.0)):
        starts = rng.integers(0, trace.size - n, trials).astype(np.int64)
        args = (trace, breaks, n, starts, *seeds[:3], 50, 0.0, det, dth, 4, 100.0, 300.0, streams)
        yield label, (lambda k, a=args: k.run_trials(*a))
    lsb_seeds = [knp.words(np.uint64(s), trials * 100) for s in (5, 6, 7, 8)]
    yield f"lsb t=20 x{trials * 100}", (lambda k: k.lsb_trials(*lsb_seeds, 20))
    yield "keystream 10^7 bits", (lambda k: k.keystream_bits(np.uint64(9), 10_000_000))


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b, equal_nan=np.asarray(a).dtype.kind == "f")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if knb is None:
        print("numba not installed; nothing to compare")
        return
    print(f"{'workload':<26}{'numpy s':>10}{'numba s':>10}{'speed-up':>10}  equal")
    for label, run in workloads(args.trials):
        run(knb)  # compile / load cache outside the timer
        t_np, out_np = best_of(lambda: run(knp), args.repeat)
        t_nb, out_nb = best_of(lambda: run(knb), args.repeat)
        print(f"{label:<26}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>9.1f}x  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
