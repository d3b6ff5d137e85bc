import numpy as np
import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if "test_acceptance" in str(item.fspath) and item.name.startswith("test_c"):
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _ACCEPTANCE[item.name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[name]
        mark = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIPPED"}.get(outcome, outcome)
        terminalreporter.write_line(f"{name}: {mark}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
