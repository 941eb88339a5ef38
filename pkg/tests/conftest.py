import numpy as np
import pytest

from noma_pass import ScenarioConfig
from noma_pass.config import dbm_to_watt

# Filled by the acceptance suite; printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    mark = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"criterion {number}: {mark} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def small_config(**overrides) -> ScenarioConfig:
    base = dict(
        num_candidate_positions_L=8,
        num_users_K=3,
        rng_seed=0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def random_desk_config(rng: np.random.Generator, **overrides) -> ScenarioConfig:
    """A randomized scenario in the regime the defaults describe."""
    base = dict(
        num_users_K=int(rng.integers(1, 6)),
        num_candidate_positions_L=int(rng.integers(4, 11)),
        transmit_budget_P_t=dbm_to_watt(float(rng.uniform(-10.0, 30.0))),
        activation_power_P_act=dbm_to_watt(float(rng.uniform(1.0, 13.0))),
        rng_seed=0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)
