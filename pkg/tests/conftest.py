import numpy as np
import pytest
from hypothesis import settings

from garza.catalog import REFERENCE, reference_model

settings.register_profile("garza", deadline=None, max_examples=60)
settings.load_profile("garza")


@pytest.fixture(scope="session")
def models():
    return {name: reference_model(name) for name in REFERENCE}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_design(rng, lo, hi, size):
    from garza.design import Design

    x = np.sort(rng.uniform(lo, hi, size))
    return Design.build(x, rng.dirichlet(np.ones(size)), "x", normalize=True)


# -- acceptance summary ----------------------------------------------------
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    mark = getattr(report, "criterion", None)
    if mark is None:
        return
    failed = report.failed or (report.when == "call" and report.outcome != "passed")
    entry = _CRITERIA.setdefault(mark, {"ok": True, "ran": False})
    entry["ok"] &= not failed
    entry["ran"] |= report.when == "call"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), entry in sorted(_CRITERIA.items()):
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {title}")
