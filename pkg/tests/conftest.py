import pytest
from hypothesis import settings

from climate_contingent.climate_data import load_sample
from climate_contingent.scenarios import ScenarioLadder

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ladder():
    return ScenarioLadder.default()


@pytest.fixture(scope="session")
def sample_table():
    return load_sample()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
