"""Backend selection for the hot kernels.

``MICRODISTORT_BACKEND`` chooses the implementation at import time:

* ``numba`` (default when importable): compiled loops from ``_kernels_numba``
* ``numpy``: vectorized fallback from ``_kernels_numpy``

Both backends produce identical integer outputs; the flag only trades
compile time against throughput.
"""

import logging
import os

from . import _kernels_numpy

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

OK, BAND, EVIDENCE, LSB = 0, 1, 2, 3
REASONS = {OK: "ok", BAND: "band-violation", EVIDENCE: "insufficient-evidence", LSB: "lsb-mismatch"}


def _select():
    wanted = os.environ.get("MICRODISTORT_BACKEND", "numba").strip().lower()
    if wanted not in ("numba", "numpy"):
        raise ValueError(f"MICRODISTORT_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    if wanted == "numba":
        try:
            from . import _kernels_numba
        except ImportError:  # pragma: no cover - numba is a declared dependency
            log.warning("numba unavailable, using numpy kernels")
            return "numpy", _kernels_numpy
        return "numba", _kernels_numba
    return "numpy", _kernels_numpy


BACKEND, _impl = _select()

words = _impl.words
keystream_bits = _impl.keystream_bits
uniform01 = _impl.uniform01
std_normal = _impl.std_normal
delta_gauge = _impl.delta_gauge
simple_gauge = _impl.simple_gauge
decide_delta = _impl.decide_delta
decide_simple = _impl.decide_simple
run_trials = _impl.run_trials
lsb_trials = _impl.lsb_trials
