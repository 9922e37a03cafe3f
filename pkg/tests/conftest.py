import pytest

from btnav.scenario import parse_scenario

from .scenarios import CHAIN, table1_text


@pytest.fixture
def chain_text():
    return CHAIN


@pytest.fixture
def chain():
    return parse_scenario(CHAIN)


@pytest.fixture
def table1():
    return parse_scenario(table1_text())


# --- acceptance reporting -------------------------------------------------

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and report.when == "call":
        _criteria.append((marker.args[0], marker.args[1], report.outcome, report.duration))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, duration in sorted(_criteria):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"AC{number} {verdict} {title} ({duration:.2f}s)")
