import warnings

import numpy as np
import pytest

from mtsolver.errors import ResolutionWarning
from mtsolver.linalg import hermitian_eig
from mtsolver.problem import ObjectiveObservable

CRITERION_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    CRITERION_LINES.append(f"criterion {number} [{name}]: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def observable_with_spectrum(eigs, m_qubits, seed=0):
    """Observable with prescribed eigenvalues in a random orthonormal basis."""
    eigs = np.asarray(eigs, dtype=float)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((eigs.size, eigs.size)) + 1j * rng.standard_normal((eigs.size, eigs.size))
    q, _ = np.linalg.qr(z)
    a = (q * eigs) @ q.conj().T
    a = 0.5 * (a + a.conj().T)
    return ObjectiveObservable(a=a, spectrum=hermitian_eig(a), scale_factor=1.0, m_qubits=m_qubits)


def random_state(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        yield
