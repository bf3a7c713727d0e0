import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qsflip.simulator import ControlField

# one line per acceptance criterion, echoed after the test run so the
# verdicts survive pytest's output capture
ACCEPTANCE_LINES: "list[str]" = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

# property tests integrate ODEs; wall-clock deadlines only cause flakes
settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=25,
)
settings.load_profile("default")

OMEGA = 2.0 * np.pi * 20e6


@pytest.fixture
def field() -> ControlField:
    return ControlField(omega=OMEGA, delta_max=0.0)


@pytest.fixture
def bounded_field() -> ControlField:
    return ControlField(omega=OMEGA, delta_max=1.5 * OMEGA)
