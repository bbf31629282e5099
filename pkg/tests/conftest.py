import json
from pathlib import Path

import pytest
import torch

from medos import FIXTURE_CORPUS
from medos.corpus import load_corpus
from medos.sdc import read_quadruplets

FIXTURES = Path(__file__).resolve().parent / "fixtures"

torch.set_num_threads(1)

_CRITERIA: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion n")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, name = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA[n] = (name, "PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        name, status, secs = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}  {name}  ({secs:.1f}s)")


@pytest.fixture(scope="session")
def fixture_corpus():
    return load_corpus(FIXTURE_CORPUS, "test")[0]


@pytest.fixture(scope="session")
def quads10():
    return read_quadruplets(FIXTURES / "quadruplets10.jsonl")


@pytest.fixture(scope="session")
def rouge_cases():
    return json.loads((FIXTURES / "rouge_cases.json").read_text(encoding="utf-8"))
