import numpy as np
import pytest
from hypothesis import strategies as st

from qdiscord.correlations import BellDiagonalState


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density_matrix(rng, dim=4, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, dim=2):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@st.composite
def bell_states(draw):
    """Bell-diagonal states with weights spread over the whole simplex."""
    raw = [draw(st.floats(0.0, 1.0)) for _ in range(4)]
    if sum(raw) < 1e-3:
        raw[0] = 1.0
    w = np.array(raw) / sum(raw)
    return BellDiagonalState.from_eigenvalues(w)


ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
