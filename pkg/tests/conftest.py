import numpy as np
import pytest

from finsleravg import preset

_CRITERIA = []


def record_criterion(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    _CRITERIA.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[2, 3, 4])
def dim(request):
    return request.param


ALL_PRESETS = ["minkowski", "warped", "randers-positive", "finslerian-lorentz"]


@pytest.fixture(params=ALL_PRESETS)
def any_preset(request, dim):
    return preset(request.param, dim)
