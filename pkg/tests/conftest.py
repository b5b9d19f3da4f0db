import pathlib

import pytest

from pepkit.pdl import parse

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
SCENARIOS = ROOT / "scenarios"

_ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        _ACCEPTANCE_RESULTS[item.name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, outcome in sorted(_ACCEPTANCE_RESULTS.items()):
            status = "PASS" if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"  {status}  {name}")


@pytest.fixture(scope="session")
def listing1_text() -> str:
    return (FIXTURES / "listing1.pdl").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def listing1_model(listing1_text):
    return parse(listing1_text, source_name="listing1.pdl")
