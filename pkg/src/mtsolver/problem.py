"""Linear systems, the zero-eigenvalue observable and solution read-out."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .errors import (
    GenerationError,
    InvalidInputError,
    NonConvergenceError,
    ResolutionWarning,
    SingularMatrixError,
)

DEFAULT_GUARD_QUBITS = 2
DEFAULT_KAPPA_MAX = 100.0
MAX_GENERATION_ATTEMPTS = 1000


@dataclass(frozen=True)
class LinearSystem:
    """A real system ``m @ x = b`` with ``m`` of size ``2**n``."""

    m: np.ndarray
    b: np.ndarray
    seed: int | None = None
    kappa: float = field(init=False)

    def __post_init__(self):
        m = linalg.as_matrix(np.array(self.m, dtype=float))
        b = np.array(self.b, dtype=float).reshape(-1)
        size = m.shape[0]
        if size < 2 or size & (size - 1):
            raise InvalidInputError(f"matrix dimension {size} is not a power of two >= 2")
        if b.shape != (size,):
            raise InvalidInputError(f"rhs length {b.size} does not match matrix dimension {size}")
        if np.linalg.norm(b) <= 0.0:
            raise InvalidInputError("rhs must be nonzero")
        m.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "kappa", linalg.condition_number(m))

    @property
    def size(self) -> int:
        return self.m.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.size.bit_length() - 1

    @property
    def b_norm(self) -> float:
        return float(np.linalg.norm(self.b))

    @property
    def b_hat(self) -> np.ndarray:
        return self.b / self.b_norm

    def to_json(self) -> dict:
        doc = {
            "n": self.n_qubits,
            "matrix": self.m.tolist(),
            "b": self.b.tolist(),
            "kappa": self.kappa,
        }
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "LinearSystem":
        system = cls(np.array(doc["matrix"], dtype=float), np.array(doc["b"], dtype=float), seed=doc.get("seed"))
        if "n" in doc and doc["n"] != system.n_qubits:
            raise InvalidInputError(f"declared n={doc['n']} but matrix has n={system.n_qubits}")
        return system

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LinearSystem":
        return cls.from_json(json.loads(Path(path).read_text()))

    @classmethod
    def from_csv(cls, matrix_path: str | Path, rhs_path: str | Path) -> "LinearSystem":
        m = linalg.load_csv_matrix(matrix_path)
        b = linalg.load_csv_matrix(rhs_path).reshape(-1)
        return cls(m, b)


@dataclass(frozen=True)
class ObjectiveObservable:
    """The PSD operator ``M^† (I - |b><b|) M`` rescaled into the pointer window.

    ``a`` is the scaled operator, whose largest eigenvalue equals
    ``1 - 2**-m_qubits``. ``scale_factor`` is the ``s`` of ``M -> M / s``.
    """

    a: np.ndarray
    spectrum: linalg.SpectralDecomposition
    scale_factor: float
    m_qubits: int

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def lambda1(self) -> float:
        return float(self.spectrum.eigenvalues[1])

    @property
    def null_vector(self) -> np.ndarray:
        return self.spectrum.eigenvectors[:, 0]

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def null_space_dimension(self, rtol: float = 1e-10) -> int:
        w = self.spectrum.eigenvalues
        return int(np.sum(w <= rtol * max(w[-1], 1e-300)))


def required_pointer_qubits(kappa: float, guard: int = DEFAULT_GUARD_QUBITS) -> int:
    """Pointer-register size that resolves ``lambda_1 ~ 1/kappa**2``, plus guard qubits."""
    if kappa < 1.0:
        raise InvalidInputError(f"condition number must be >= 1, got {kappa}")
    base = math.ceil(2.0 * math.log2(kappa) - 1e-12)
    return max(1, base + guard)


def objective_from_matrix(m, b_hat, m_qubits: int) -> ObjectiveObservable:
    """Build and scale the observable from an arbitrary square ``m`` and unit ``b_hat``.

    ``m`` may be complex here; it only has to be nonsingular.
    """
    if m_qubits < 1:
        raise InvalidInputError("m_qubits must be >= 1")
    m = linalg.as_matrix(m)
    b_hat = np.asarray(b_hat).reshape(-1)
    linalg.condition_number(m)
    proj = np.eye(m.shape[0]) - np.outer(b_hat, b_hat.conj())
    a = m.conj().T @ proj @ m
    a = 0.5 * (a + a.conj().T)
    top = float(np.linalg.eigvalsh(a)[-1])
    if top <= 0.0:
        raise SingularMatrixError("observable vanishes identically")
    target = 1.0 - 2.0**-m_qubits
    a = a * (target / top)
    scale = math.sqrt(top / target)
    spectrum = linalg.hermitian_eig(a)
    obs = ObjectiveObservable(a=a, spectrum=spectrum, scale_factor=scale, m_qubits=m_qubits)
    if obs.lambda1 < 2.0**-m_qubits:
        warnings.warn(
            f"lambda_1={obs.lambda1:.3g} is below the pointer resolution 2^-{m_qubits}; "
            "the zero outcome will not be separated from the next eigenvalue",
            ResolutionWarning,
            stacklevel=2,
        )
    return obs


def build_objective(system: LinearSystem, m_qubits: int) -> ObjectiveObservable:
    if m_qubits < 1:
        raise InvalidInputError("m_qubits must be >= 1")
    if m_qubits < 2.0 * math.log2(system.kappa):
        warnings.warn(
            f"m={m_qubits} pointer qubits is below 2*log2(kappa)={2 * math.log2(system.kappa):.2f}",
            ResolutionWarning,
            stacklevel=2,
        )
    return objective_from_matrix(system.m, system.b_hat, m_qubits)


@dataclass(frozen=True)
class SolutionRecord:
    y: np.ndarray
    z: complex
    x: np.ndarray
    relative_residual: float
    imag_norm: float

    def to_json(self) -> dict:
        return {
            "x": self.x.tolist(),
            "z": [self.z.real, self.z.imag],
            "relative_residual": self.relative_residual,
            "imag_norm": self.imag_norm,
            "y_real": self.y.real.tolist(),
            "y_imag": self.y.imag.tolist(),
        }


def reconstruct_solution(y, system: LinearSystem, *, min_overlap: float = 1e-12) -> SolutionRecord:
    """Rescale a unit state on the solution ray into the solution vector.

    The unscaled matrix is used, so ``x`` solves the original system.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.shape != (system.size,):
        raise InvalidInputError(f"state length {y.size} does not match system size {system.size}")
    overlap = complex(system.b_hat @ (system.m @ y))
    if abs(overlap) <= min_overlap:
        raise NonConvergenceError(f"<b|M|y> = {abs(overlap):.3g}: state is not near the solution ray")
    z = system.b_norm / overlap
    xc = z * y
    x = xc.real.copy()
    resid = float(np.linalg.norm(system.m @ x - system.b) / system.b_norm)
    return SolutionRecord(y=y, z=z, x=x, relative_residual=resid, imag_norm=float(np.linalg.norm(xc.imag)))


def random_instance(n_qubits: int, seed: int, kappa_max: float = DEFAULT_KAPPA_MAX) -> LinearSystem:
    """Random dense symmetric system with entries uniform on [-1, 1]."""
    if n_qubits < 1:
        raise InvalidInputError("n_qubits must be >= 1")
    size = 2**n_qubits
    rng = np.random.default_rng([n_qubits, seed])
    for _ in range(MAX_GENERATION_ATTEMPTS):
        raw = rng.uniform(-1.0, 1.0, size=(size, size))
        m = 0.5 * (raw + raw.T)
        b = rng.uniform(-1.0, 1.0, size=size)
        if np.linalg.norm(b) < 1e-6:
            continue
        try:
            kappa = linalg.condition_number(m)
        except SingularMatrixError:
            continue
        if kappa <= kappa_max:
            return LinearSystem(m, b, seed=seed)
    raise GenerationError(f"no instance with kappa <= {kappa_max} after {MAX_GENERATION_ATTEMPTS} attempts")


def conditioned_instance(n_qubits: int, kappa: float, seed: int) -> LinearSystem:
    """Random symmetric system whose condition number is exactly ``kappa``.

    Eigenvalue magnitudes span ``[1, kappa]`` (both ends included) with random
    signs, rotated by a random orthogonal matrix.
    """
    if kappa < 1.0:
        raise InvalidInputError("kappa must be >= 1")
    size = 2**n_qubits
    rng = np.random.default_rng([n_qubits, seed, 7919])
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    q = q * np.sign(np.diag(r))
    mags = np.concatenate([[1.0, kappa], rng.uniform(1.0, kappa, size=size - 2)])[:size]
    eigs = mags * rng.choice([-1.0, 1.0], size=size)
    m = (q * eigs) @ q.T
    m = 0.5 * (m + m.T)
    b = rng.uniform(-1.0, 1.0, size=size)
    return LinearSystem(m, b, seed=seed)
