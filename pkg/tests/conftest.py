import numpy as np
import pytest

from fracgrow.potentials import Potential, Proliferation
from fracgrow.scheme import ProblemConfig
from fracgrow.spectral import FractionalOperator, make_interval_basis


def desk_config(n_modes=16, boundaries=("neumann", "neumann", "neumann"), alpha=0.5, beta=0.5,
                potential="regular", proliferation=None, T=0.05, h=1e-3, lam=1e-2, exponents=(0.5, 0.5, 0.5),
                phi_profile=None, mu0=None):
    """Small 1D configuration used throughout the unit tests."""
    bases = [make_interval_basis(b, n_modes) for b in boundaries]
    ops = [FractionalOperator(b, r) for b, r in zip(bases, exponents)]
    B = bases[1]
    x = B.points[:, 0]
    phi = 0.8 * np.tanh((x - 0.5) / 0.1) if phi_profile is None else phi_profile(x)
    return ProblemConfig(
        ops[0], ops[1], ops[2], alpha, beta, Potential(potential), lam,
        proliferation or Proliferation(), np.zeros(n_modes) if mu0 is None else mu0,
        B.analyze(phi), bases[2].analyze(np.ones_like(x)), T, h,
    )


@pytest.fixture
def small_cfg():
    return desk_config()


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """Collect one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_LINES.append((criterion, f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"))
    print(ACCEPTANCE_LINES[-1][1])
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda x: x[0]):
            terminalreporter.write_line(line)
