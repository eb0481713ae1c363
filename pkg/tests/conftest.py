import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

# derandomized so two runs of the suite draw the same examples
settings.register_profile(
    "repro", derandomize=True, deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repro")

FROZEN = Path(__file__).parent / "data" / "frozen_oracles.json"

# acceptance verdicts collected by test_acceptance.py, printed at the end
ACCEPTANCE: dict[int, str] = {}


def decode(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


@pytest.fixture(scope="session")
def frozen() -> dict:
    return json.loads(FROZEN.read_text())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
