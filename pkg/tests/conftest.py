from pathlib import Path

import numpy as np
import pytest

from bnexact import kernels
from bnexact.scoring import family_masks, tables_from_arrays

DATA = Path(__file__).parent / "data"

# acceptance criteria append (criterion, passed, detail) here
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(params=kernels.available())
def backend(request):
    return request.param


@pytest.fixture
def data_dir():
    return DATA


def random_tables(rng, n, k, scale=3.0):
    """Score tables with Gaussian log weights over the standard family order."""
    return tables_from_arrays(
        n, k, [rng.normal(0.0, scale, len(family_masks(n, i, k))) for i in range(n)])


def unit_tables(n, k):
    return tables_from_arrays(n, k, [np.zeros(len(family_masks(n, i, k))) for i in range(n)])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
