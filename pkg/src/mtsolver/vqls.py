"""Pauli-string decompositions and shot-noise models for cost estimators.

Used to compare the spread of the VQLS cost estimate, whose Pauli terms are
measured one Hadamard test at a time, against the single binomial
zero-outcome estimate of the measurement test.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError
from .measurement import PointerConfig, make_backend
from .problem import ObjectiveObservable

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
DROP_TOL = 1e-12
ZERO_MEAN_TOL = 1e-6


def pauli_matrix(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, PAULIS[ch])
    return out


@lru_cache(maxsize=8)
def pauli_labels(n_qubits: int) -> tuple[str, ...]:
    return tuple("".join(p) for p in product("IXYZ", repeat=n_qubits))


@lru_cache(maxsize=8)
def _pauli_stack(n_qubits: int) -> np.ndarray:
    return np.stack([pauli_matrix(lbl) for lbl in pauli_labels(n_qubits)])


def _n_qubits_of(dim: int) -> int:
    if dim < 2 or dim & (dim - 1):
        raise InvalidInputError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


@dataclass(frozen=True)
class PauliDecomposition:
    n_qubits: int
    terms: tuple[tuple[str, complex | float], ...]

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def labels(self) -> list[str]:
        return [lbl for lbl, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms])

    def matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for lbl, c in self.terms:
            out += c * pauli_matrix(lbl)
        return out


def pauli_decompose(m) -> PauliDecomposition:
    """Coefficients ``Tr(P m) / 2**n`` over all Pauli strings, small ones dropped.

    Coefficients are real when ``m`` is Hermitian.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    n = _n_qubits_of(m.shape[0])
    # Pauli strings are Hermitian, so Tr(P^dagger m) = Tr(P m) = sum_ij P_ji m_ij
    coeffs = np.einsum("kji,ij->k", _pauli_stack(n), m) / m.shape[0]
    hermitian = np.allclose(m, m.conj().T, atol=1e-12 * max(1.0, np.abs(m).max()))
    terms = []
    for lbl, c in zip(pauli_labels(n), coeffs):
        if abs(c) < DROP_TOL:
            continue
        terms.append((lbl, float(c.real) if hermitian else complex(c)))
    return PauliDecomposition(n, tuple(terms))


def random_pauli_matrix(n_qubits: int, n_terms: int, seed: int) -> np.ndarray:
    """Sum of ``n_terms`` distinct random Pauli strings with uniform [-1, 1] weights."""
    total = 4**n_qubits
    if not 1 <= n_terms <= total:
        raise InvalidInputError(f"n_terms must lie in [1, {total}], got {n_terms}")
    rng = np.random.default_rng([n_qubits, n_terms, seed])
    picks = rng.choice(total, size=n_terms, replace=False)
    weights = rng.uniform(-1.0, 1.0, size=n_terms)
    stack = _pauli_stack(n_qubits)
    return np.einsum("k,kij->ij", weights, stack[picks])


class SigmaEstimate(NamedTuple):
    mean: float
    sigma_rel: float
    relative: bool  # False when the expected value is ~0 and sigma_rel holds the absolute sigma
    excluded: int = 0


def _spread(values: np.ndarray, expected: float, excluded: int = 0) -> SigmaEstimate:
    """Mean and relative spread; absolute spread when the expected value is near zero.

    The switch looks at the noise-free ``expected`` value rather than the
    sample mean, which never gets below the shot-noise floor.
    """
    mean = float(values.mean())
    sigma = float(values.std(ddof=1)) if values.size > 1 else 0.0
    if abs(expected) < ZERO_MEAN_TOL:
        return SigmaEstimate(mean, sigma, False, excluded)
    return SigmaEstimate(mean, sigma / abs(mean), True, excluded)


def vqls_operators(m, b) -> tuple[np.ndarray, np.ndarray]:
    """Numerator ``M^+ (I - |b><b|) M`` and denominator ``M^+ M`` of the VQLS cost."""
    m = np.asarray(m)
    b = np.asarray(b).reshape(-1)
    b = b / np.linalg.norm(b)
    mm = m.conj().T @ m
    num = mm - np.outer(m.conj().T @ b, (m.conj().T @ b).conj())
    return 0.5 * (num + num.conj().T), 0.5 * (mm + mm.conj().T)


def _measured_terms(dec: PauliDecomposition) -> tuple[float, list[str], np.ndarray]:
    ident = "I" * dec.n_qubits
    const = sum(float(np.real(c)) for lbl, c in dec.terms if lbl == ident)
    rest = [(lbl, float(np.real(c))) for lbl, c in dec.terms if lbl != ident]
    return const, [lbl for lbl, _ in rest], np.array([c for _, c in rest])


def estimate_vqls_cost_sigma(m, b, psi, n_shots_total: int, repetitions: int, seed: int) -> SigmaEstimate:
    """Spread of the Hadamard-test estimate of ``<A>/<M^+ M>``.

    Every non-identity Pauli term of the numerator and denominator gets an
    equal share of ``n_shots_total``; each term is estimated as the mean of
    +-1 outcomes with the exact expectation. Identity terms are known
    exactly and cost no shots. Repetitions with a non-positive denominator
    estimate are dropped and counted in ``excluded``.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    m = np.asarray(m)
    if psi.size != m.shape[0]:
        raise InvalidInputError("state and matrix dimensions differ")
    if repetitions < 2:
        raise InvalidInputError("need at least two repetitions")
    num_op, den_op = vqls_operators(m, b)
    c_num, lbl_num, w_num = _measured_terms(pauli_decompose(num_op))
    c_den, lbl_den, w_den = _measured_terms(pauli_decompose(den_op))
    labels = lbl_num + lbl_den
    n_terms = max(1, len(labels))
    per_term = max(1, n_shots_total // n_terms)

    expect = np.array([np.real(np.vdot(psi, pauli_matrix(lbl) @ psi)) for lbl in labels])
    p_plus = np.clip(0.5 * (1.0 + expect), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    counts = rng.binomial(per_term, p_plus, size=(repetitions, len(labels)))
    means = (2.0 * counts - per_term) / per_term
    num = c_num + means[:, : len(lbl_num)] @ w_num
    den = c_den + means[:, len(lbl_num) :] @ w_den
    ok = den > 0
    if not ok.any():
        raise InvalidInputError("every repetition produced a non-positive denominator")
    exact = float(np.real(np.vdot(psi, num_op @ psi) / np.vdot(psi, den_op @ psi)))
    return _spread(num[ok] / den[ok], exact, excluded=int((~ok).sum()))


def estimate_mta_sigma(
    obs: ObjectiveObservable,
    psi,
    cfg: PointerConfig,
    n_shots_total: int,
    repetitions: int,
    seed: int,
    backend: str = "spectral",
) -> SigmaEstimate:
    """Spread of the zero-outcome frequency with the full shot budget per repetition."""
    if repetitions < 2:
        raise InvalidInputError("need at least two repetitions")
    p0 = float(make_backend(backend, obs, cfg).zero_probability(psi))
    rng = np.random.default_rng(seed)
    r = rng.binomial(n_shots_total, p0, size=repetitions) / n_shots_total
    return _spread(r, p0)


def state_with_fidelity(target, fidelity: float, seed: int) -> np.ndarray:
    """Unit state whose squared overlap with ``target`` is exactly ``fidelity``."""
    target = np.asarray(target, dtype=complex)
    target = target / np.linalg.norm(target)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(target.size) + 1j * rng.standard_normal(target.size)
    w -= np.vdot(target, w) * target
    w /= np.linalg.norm(w)
    return np.sqrt(fidelity) * target + np.sqrt(1.0 - fidelity) * w


@dataclass(frozen=True)
class VarianceReport:
    n_pauli_terms: int
    sigma_rel_mta: float
    sigma_rel_vqls: float
    repetitions: int
    shot_budget: int
    matrix_index: int | None = None  # None marks the per-T median row
