from pathlib import Path

import pytest

from memir.compiler import compile_history
from memir.config import get_profile
from memir.corpus import load_corpus
from memir.providers import reference_providers

DATA = Path(__file__).resolve().parents[1] / "src" / "memir" / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"
FIXTURE_CORPUS = DATA / "fixture_dialogue.jsonl"
FIXTURE_QUERIES = DATA / "fixture_queries.jsonl"
LOCOMO_SAMPLE = DATA / "synthetic_locomo.json"

_criteria: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        _criteria.append((marker.args[0], status, item.name))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, test in _criteria:
        terminalreporter.write_line(f"{status}  {name}  ({test})")


@pytest.fixture(scope="session")
def providers():
    return reference_providers()


@pytest.fixture(scope="session")
def fixture_history():
    return load_corpus(FIXTURE_CORPUS)


@pytest.fixture(scope="session")
def fixture_result(fixture_history, providers):
    return compile_history(fixture_history, providers, get_profile("locomo_default").compile)


@pytest.fixture(scope="session")
def fixture_store(fixture_result):
    return fixture_result.store
