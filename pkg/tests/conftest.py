"""Session fixtures: every standard scenario runs exactly once per session."""

import pytest

from consentchain.simnet import run_scenario, standard_scenarios


@pytest.fixture(scope="session")
def scenarios():
    return standard_scenarios()


@pytest.fixture(scope="session")
def runs(scenarios):
    return {name: run_scenario(scenario) for name, scenario in scenarios.items()}
