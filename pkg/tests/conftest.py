import numpy as np
import pytest

from kinebody.assets import generate_synthetic_rig


@pytest.fixture(scope="session")
def bundle():
    return generate_synthetic_rig(7)


@pytest.fixture(scope="session")
def rig(bundle):
    return bundle[0]


@pytest.fixture(scope="session")
def face(bundle):
    return bundle[1]


@pytest.fixture(scope="session")
def merge_spec(bundle):
    return bundle[2]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(n, name, ok, detail)`` records one acceptance line and asserts it."""

    def record(n, name, ok, detail=""):
        _CRITERIA[n] = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        print(_CRITERIA[n])
        assert ok, _CRITERIA[n]

    return record


def pytest_runtest_logreport(report):
    # a criterion test that crashed before recording still gets a FAIL line
    head, _, name = report.nodeid.partition("test_acceptance.py::test_c")
    if name and report.failed and report.when == "call":
        n = int(name[:2])
        if n not in _CRITERIA:
            crash = getattr(report.longrepr, "reprcrash", None)
            _CRITERIA[n] = f"criterion {n:2d} FAIL  crashed: {crash.message if crash else 'see traceback'}"


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
