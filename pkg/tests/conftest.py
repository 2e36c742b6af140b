import numpy as np
import pytest

from msdgr import _backend

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _available_backends():
    names = ["python"]
    try:
        _backend.get("cython")
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


@pytest.fixture(params=_available_backends())
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.get(request.param))
    return request.param
