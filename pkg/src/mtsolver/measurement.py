"""Simulated phase-estimation readout of the objective observable.

Three backends produce the distribution of the m-qubit pointer register:

``projective``
    Idealised von Neumann measurement: the weight of each eigenvector goes
    to the grid point nearest its eigenvalue (ties round down).
``spectral``
    Exact phase-estimation statistics evaluated in the eigenbasis with the
    Fejér kernel, including leakage of off-grid eigenvalues.
``circuit``
    Full statevector simulation of the input and output registers.

Pointer outcomes are indexed so that ``j`` encodes the eigenvalue estimate
``j / 2**m``; output qubit 0 carries the most significant fractional bit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AmbiguityError, InvalidInputError, ResourceLimitError
from .linalg import unitary_exp
from .problem import ObjectiveObservable

MAX_CIRCUIT_QUBITS = 26
BACKENDS = ("projective", "spectral", "circuit")


@dataclass(frozen=True)
class PointerConfig:
    m_qubits: int

    def __post_init__(self):
        if self.m_qubits < 1:
            raise InvalidInputError("pointer register needs at least one qubit")

    @property
    def K(self) -> int:
        return 2**self.m_qubits

    @property
    def resolution(self) -> float:
        return 2.0**-self.m_qubits


@dataclass(frozen=True)
class PointerDistribution:
    probs: np.ndarray

    @property
    def p_zero(self) -> float:
        return float(self.probs[0])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["outcome", "probability"])
            for j, p in enumerate(self.probs):
                w.writerow([j, repr(float(p))])


@dataclass(frozen=True)
class ShotRecord:
    n_shots: int
    n_zero: int
    rel_freq: float
    rng_seed: int | None = None


def derive_seed(root: int, stream: int) -> int:
    """Independent child seed for ``stream`` of a root seed (order independent)."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=(int(stream),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def fejer_kernel(delta, K: int) -> np.ndarray:
    """Probability that an eigenphase offset ``delta`` from a grid point lands on it.

    ``|sin(pi K delta)|^2 / (K^2 |sin(pi delta)|^2)``, equal to 1 when
    ``delta`` is an integer.
    """
    d = np.mod(np.asarray(delta, dtype=float) + 0.5, 1.0) - 0.5
    s = np.sin(np.pi * d)
    near = np.abs(s) < 1e-12
    safe = np.where(near, 1.0, s)
    val = np.sin(np.pi * K * d) ** 2 / (K**2 * safe**2)
    return np.where(near, 1.0, val)


def _check_state(obs: ObjectiveObservable, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != obs.dim:
        raise InvalidInputError(f"state length {psi.shape[0]} does not match observable dimension {obs.dim}")
    return psi


def _normalise(probs: np.ndarray) -> np.ndarray:
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


class _EigenbasisBackend:
    """Backends whose outcome law is ``p(l) = sum_i |<a_i|psi>|^2 W[i, l]``."""

    name = ""

    def __init__(self, obs: ObjectiveObservable, cfg: PointerConfig):
        self.obs = obs
        self.cfg = cfg
        self.weights = self._weights(obs.eigenvalues, cfg.K)
        v = obs.spectrum.eigenvectors
        self._vh = v.conj().T
        # zero-outcome POVM element
        self.zero_effect = (v * self.weights[:, 0]) @ self._vh

    def _weights(self, lam: np.ndarray, K: int) -> np.ndarray:
        raise NotImplementedError

    def distribution(self, psi) -> PointerDistribution:
        psi = _check_state(self.obs, psi)
        c2 = np.abs(self._vh @ psi) ** 2
        return PointerDistribution(_normalise(c2 @ self.weights))

    def zero_probability(self, psi) -> np.ndarray | float:
        psi = _check_state(self.obs, psi)
        p = np.real(np.einsum("i...,ij,j...->...", psi.conj(), self.zero_effect, psi))
        return np.clip(p, 0.0, 1.0)


class ProjectiveBackend(_EigenbasisBackend):
    name = "projective"

    @staticmethod
    def bins(lam: np.ndarray, K: int) -> np.ndarray:
        # nearest grid point, half-way values round down
        return np.mod(np.ceil(np.asarray(lam) * K - 0.5).astype(int), K)

    def _weights(self, lam, K):
        w = np.zeros((lam.size, K))
        w[np.arange(lam.size), self.bins(lam, K)] = 1.0
        return w


class SpectralBackend(_EigenbasisBackend):
    name = "spectral"

    def _weights(self, lam, K):
        grid = np.arange(K) / K
        return fejer_kernel(lam[:, None] - grid[None, :], K)


def _hadamard(state: np.ndarray, q: int, m: int) -> np.ndarray:
    idx = np.arange(state.shape[0])
    shift = m - 1 - q
    bit = (idx >> shift) & 1
    flipped = state[idx ^ (1 << shift)]
    return (flipped + np.where(bit, -1.0, 1.0)[:, None] * state) / np.sqrt(2.0)


def _controlled_phase(state: np.ndarray, a: int, b: int, phi: float, m: int) -> np.ndarray:
    idx = np.arange(state.shape[0])
    both = ((idx >> (m - 1 - a)) & 1) & ((idx >> (m - 1 - b)) & 1)
    return state * np.where(both, np.exp(1j * phi), 1.0)[:, None]


def _swap(state: np.ndarray, a: int, b: int, m: int) -> np.ndarray:
    idx = np.arange(state.shape[0])
    sa, sb = m - 1 - a, m - 1 - b
    ba, bb = (idx >> sa) & 1, (idx >> sb) & 1
    perm = idx ^ ((ba ^ bb) << sa) ^ ((ba ^ bb) << sb)
    return state[perm]


def inverse_qft(state: np.ndarray, m: int) -> np.ndarray:
    """Gate-level inverse QFT on the leading (register) axis of ``state``.

    Maps ``|k> -> K^-1/2 sum_l exp(-2 pi i k l / K) |l>`` with big-endian
    register indices.
    """
    for q in range(m // 2):
        state = _swap(state, q, m - 1 - q, m)
    for j in reversed(range(m)):
        for k in reversed(range(j + 1, m)):
            state = _controlled_phase(state, k, j, -2.0 * np.pi / 2 ** (k - j + 1), m)
        state = _hadamard(state, j, m)
    return state


class CircuitBackend:
    """Statevector simulation of the phase-estimation circuit."""

    name = "circuit"

    def __init__(self, obs: ObjectiveObservable, cfg: PointerConfig):
        n = obs.n_qubits
        if n + cfg.m_qubits > MAX_CIRCUIT_QUBITS:
            raise ResourceLimitError(
                f"{n} + {cfg.m_qubits} qubits exceeds the {MAX_CIRCUIT_QUBITS}-qubit simulation limit"
            )
        self.obs = obs
        self.cfg = cfg
        m = cfg.m_qubits
        # output qubit t controls U^(2^(m-1-t))
        self.powers = [unitary_exp((2.0 ** (m - 1 - t)) * obs.a) for t in range(m)]

    def final_state(self, psi) -> np.ndarray:
        psi = _check_state(self.obs, psi)
        m, K = self.cfg.m_qubits, self.cfg.K
        state = np.zeros((K, psi.size), dtype=complex)
        state[0] = psi
        for t in range(m):
            state = _hadamard(state, t, m)
        idx = np.arange(K)
        for t, u in enumerate(self.powers):
            rows = ((idx >> (m - 1 - t)) & 1).astype(bool)
            state[rows] = state[rows] @ u.T
        return inverse_qft(state, m)

    def distribution(self, psi) -> PointerDistribution:
        probs = np.sum(np.abs(self.final_state(psi)) ** 2, axis=1)
        return PointerDistribution(_normalise(probs))

    def zero_probability(self, psi) -> np.ndarray | float:
        psi = np.asarray(psi)
        if psi.ndim == 2:
            return np.array([self.distribution(psi[:, j]).p_zero for j in range(psi.shape[1])])
        return self.distribution(psi).p_zero


def make_backend(name: str, obs: ObjectiveObservable, cfg: PointerConfig):
    try:
        cls = {"projective": ProjectiveBackend, "spectral": SpectralBackend, "circuit": CircuitBackend}[name]
    except KeyError:
        raise InvalidInputError(f"unknown backend {name!r}; choose from {BACKENDS}") from None
    return cls(obs, cfg)


def pointer_distribution_projective(obs, psi, cfg: PointerConfig) -> PointerDistribution:
    return ProjectiveBackend(obs, cfg).distribution(psi)


def pointer_distribution_spectral(obs, psi, cfg: PointerConfig) -> PointerDistribution:
    return SpectralBackend(obs, cfg).distribution(psi)


def pointer_distribution_circuit(obs, psi, cfg: PointerConfig) -> PointerDistribution:
    return CircuitBackend(obs, cfg).distribution(psi)


def _rng(seed) -> tuple[np.random.Generator, int | None]:
    if isinstance(seed, np.random.Generator):
        return seed, None
    return np.random.default_rng(int(seed)), int(seed)


def sample_zero_frequency(dist, n_shots: int, seed) -> ShotRecord:
    """Binomial count of all-zero pointer readouts in ``n_shots`` runs.

    ``dist`` is a :class:`PointerDistribution` or a bare zero-outcome
    probability; ``seed`` is an integer or an existing generator.
    """
    if n_shots < 1:
        raise InvalidInputError("n_shots must be >= 1")
    p0 = dist.p_zero if isinstance(dist, PointerDistribution) else float(dist)
    rng, s = _rng(seed)
    n0 = int(rng.binomial(n_shots, min(max(p0, 0.0), 1.0)))
    return ShotRecord(n_shots=n_shots, n_zero=n0, rel_freq=n0 / n_shots, rng_seed=s)


def sample_outcomes(dist: PointerDistribution, n_shots: int, seed) -> np.ndarray:
    """Multinomial counts over all pointer outcomes."""
    if n_shots < 1:
        raise InvalidInputError("n_shots must be >= 1")
    rng, _ = _rng(seed)
    return rng.multinomial(n_shots, dist.probs)


def exact_target_fidelity(obs: ObjectiveObservable, psi) -> float:
    if obs.null_space_dimension() != 1:
        raise AmbiguityError(f"null space has dimension {obs.null_space_dimension()}, expected 1")
    psi = _check_state(obs, psi)
    return float(np.abs(np.vdot(obs.null_vector, psi)) ** 2)
