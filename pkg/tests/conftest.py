import numpy as np
import pytest

from photonloc.disorder import sample_field
from photonloc.hamiltonian import assemble_H
from photonloc.hopping import laplacian_kernel
from photonloc.lattice import enumerate_box

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ham():
    """Factory for a random 1D Laplacian Hamiltonian."""
    def make(L=4, g=1.0, omega=2.0, rho0=1.0, seed=11, realization=0, d=1, kernel=None):
        box = enumerate_box(d, L)
        kern = laplacian_kernel(d) if kernel is None else kernel
        return assemble_H(box, kern, sample_field(box, rho0, seed, realization), g, omega)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
