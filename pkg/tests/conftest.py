from __future__ import annotations

import pytest

_ACCEPTANCE_RESULTS: dict[str, bool] = {}


def pytest_configure(config) -> None:
    config.addinivalue_line(
        "markers", "acceptance(name): top-level acceptance criterion check"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None and report.when == "call":
        name = marker.args[0] if marker.args else item.name
        _ACCEPTANCE_RESULTS[name] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if _ACCEPTANCE_RESULTS[name] else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {name}: {status}")
