import sys

import numpy as np
import pytest

from traceineq.ensembles import contraction_from_rng, density_from_rng
from traceineq.matcore import hermitianize, random_unitary


def random_hermitian(dim, rng):
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return hermitianize(G)


def random_contraction(dim, rng, lo=1e-6):
    return contraction_from_rng(dim, rng, lo)


def random_density(dim, rng, lo=1e-6):
    return density_from_rng(dim, rng, lo)


def unitary(dim, rng):
    return random_unitary(dim, rng)


def conj(U, M):
    return hermitianize(U @ M @ U.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
