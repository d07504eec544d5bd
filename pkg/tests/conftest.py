import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def pg24():
    return json.loads((FIXTURES / "pg24_witness.json").read_text())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
