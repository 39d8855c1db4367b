import json
from pathlib import Path

import pytest

from bcl.scenarios import build_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# filled by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def load(name: str) -> dict:
    return json.loads((SCENARIOS / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def reference():
    return build_scenario(load("reference"))


@pytest.fixture(scope="session")
def toy():
    return build_scenario(load("toy"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
