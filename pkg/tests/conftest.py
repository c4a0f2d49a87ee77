import pytest

from deltaloop.coefficients import ModelParams
from deltaloop.geometry import circle, ellipse

# lines appended by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1.0)


@pytest.fixture(scope="session")
def circle_r2():
    return circle(2.0)


@pytest.fixture(scope="session")
def ellipse21():
    return ellipse(2.0, 1.0)


@pytest.fixture(scope="session")
def params():
    return ModelParams(0.3, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
