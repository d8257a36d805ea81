import numpy as np
import pytest

from helpers import on, step
from invdesign.flux import Burgers
from invdesign.traffic import flux_from_speed, greenshields


@pytest.fixture
def burgers():
    return Burgers()


@pytest.fixture(scope="session")
def greenshields_flux():
    return flux_from_speed(greenshields(rho_bar=0.4))


@pytest.fixture
def shock_target():
    """Burgers shock step 1 -> 0 at 0 on [-2, 2], dx = 1e-3."""
    return on(-2, 2, 4000, step(1.0, 0.0))


@pytest.fixture
def rarefaction_target():
    return on(-2, 2, 4000, lambda x: np.clip(x, 0, 1))


@pytest.fixture
def constant_target():
    return on(-2, 2, 4000, lambda x: np.full_like(x, 0.5))


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
