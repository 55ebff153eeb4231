import numpy as np
import pytest

from thermolens import Grid, MediumParams, SoundSpeedLaw


@pytest.fixture
def unit_medium():
    """Nondimensional medium with every constant equal to one."""
    return MediumParams(
        rho=1.0, beta_acou=1.0, b=0.1, rho_a=1.0, C_a=1.0, kappa_a=1.0,
        rho_b=1.0, C_b=1.0, c_a=1.0, q0=0.5,
    )


@pytest.fixture
def water_medium():
    return MediumParams(
        rho=1000.0, beta_acou=3.5, b=4e-3, rho_a=1000.0, C_a=4180.0, kappa_a=0.6,
        rho_b=1050.0, C_b=3617.0, c_a=1402.39, q0=1.9e6, W=0.0,
    )


@pytest.fixture
def grid1d():
    return Grid((1.0,), (63,))


@pytest.fixture
def grid2d():
    return Grid((1.0, 2.0), (15, 23))


def random_field(grid, seed=0):
    return np.random.default_rng(seed).standard_normal(grid.shape)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record one summary line per acceptance criterion (shown after the run)."""
    def record(number, title, ok, detail, seconds):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{seconds:.1f} s]"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
