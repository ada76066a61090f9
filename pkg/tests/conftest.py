import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def temperature_table():
    """Ten temperatures with committer probabilities 0.1 .. 1.0."""
    T = np.arange(300.0, 661.0, 40.0)[:, None]
    y = np.arange(1, 11) / 10.0
    return T, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --------------------------------------------------------------------------
# one pass/fail line per acceptance criterion in the terminal summary

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.failed:
        number = int(name.split("_")[2])
        title = (item.obj.__doc__ or name).strip().splitlines()[0]
        details = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        status = "PASS" if report.passed else "FAIL"
        if report.when != "call":
            status = "FAIL"
        _CRITERIA[number] = (status, title, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, details = _CRITERIA[number]
        line = f"criterion {number:2d}: {status}  {title}"
        if details:
            line += f"  [{details}]"
        terminalreporter.write_line(line)
