import os
from pathlib import Path

import numpy as np
import pytest

from microdistort import _kernels_numpy

try:
    from microdistort import _kernels_numba
except ImportError:  # pragma: no cover
    _kernels_numba = None

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.environ.get("MICRODISTORT_DATA_DIR", ROOT / "data"))

BACKENDS = [pytest.param(_kernels_numpy, id="numpy")]
if _kernels_numba is not None:
    BACKENDS.append(pytest.param(_kernels_numba, id="numba"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def dataset(name):
    """Path to a public dataset CSV under the data directory, or skip."""
    path = DATA_DIR / name
    if not path.exists():
        pytest.skip(f"dataset {name} not present in {DATA_DIR}; see README 'Datasets'")
    return path


_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record a named acceptance result for the end-of-run summary."""
    def record(label, ok, detail=""):
        _CRITERIA.append((label, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
