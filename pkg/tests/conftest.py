from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from supplytwin.harness import Scenario, shipped, shipped_names  # noqa: E402
from supplytwin.harness.generator import random_scenario  # noqa: E402

RANDOM_SEEDS = range(100)
CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    CRITERIA[number] = (title, passed, detail)


@pytest.fixture(scope="session")
def hand_written() -> list[Scenario]:
    return [Scenario.load(shipped(n)) for n in shipped_names()]


@pytest.fixture(scope="session")
def random_corpus() -> list[Scenario]:
    return [random_scenario(seed) for seed in RANDOM_SEEDS]


@pytest.fixture(scope="session")
def corpus(hand_written, random_corpus) -> list[Scenario]:
    return hand_written + random_corpus


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} {title}{suffix}")
