"""Dense linear algebra used by the solver and its oracles.

Matrices are plain ``numpy.ndarray`` objects. The functions here validate
their inputs and add the determinism guarantees the rest of the package
relies on (sorted spectra, fixed eigenvector phases).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SingularMatrixError

HERMITIAN_ATOL = 1e-12
SINGULAR_RTOL = 1e-13


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted ascending and orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, a.conj().T, rtol=0.0, atol=atol)


def _require_hermitian(a) -> np.ndarray:
    a = as_matrix(a)
    # scale-aware tolerance, so large-norm inputs built in floating point pass
    atol = HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if not is_hermitian(a, atol=atol):
        raise InvalidInputError("matrix is not Hermitian")
    return a


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase of each column so its largest entry is real positive."""
    v = np.array(v, dtype=complex)
    single = v.ndim == 1
    if single:
        v = v[:, None]
    idx = np.argmax(np.abs(v) - 1e-12 * np.arange(v.shape[0])[:, None], axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1.0)
    v = v / phases
    return v[:, 0] if single else v


def hermitian_eig(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with a deterministic ordering.

    Eigenvalues are ascending. Each eigenvector has its largest-magnitude
    component made real and positive; vectors belonging to (numerically)
    degenerate eigenvalues are ordered lexicographically by their entries.
    """
    a = _require_hermitian(a)
    herm = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(herm)
    v = fix_phase(v)

    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    tie_tol = 1e-10 * scale
    order = list(range(len(w)))
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[start] <= tie_tol:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            block.sort(key=lambda j: tuple(np.round(np.column_stack([v[:, j].real, v[:, j].imag]).ravel(), 12)))
            order[start:stop] = block
        start = stop
    order = np.asarray(order)
    return SpectralDecomposition(eigenvalues=w[order].copy(), eigenvectors=v[:, order].copy())


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def condition_number(m) -> float:
    s = singular_values(m)
    if s[0] == 0.0 or s[-1] < SINGULAR_RTOL * s[0]:
        raise SingularMatrixError("matrix is singular to working precision")
    return float(s[0] / s[-1])


def unitary_exp(a, *, method: str = "spectral") -> np.ndarray:
    """Return ``exp(2*pi*i*a)`` for a Hermitian matrix ``a``.

    ``method="spectral"`` exponentiates the eigenvalues and is exact up to
    rounding. ``method="pade"`` uses scaling and squaring with a diagonal
    Padé approximant and works for any square matrix, but the Hermitian
    check is still applied here.
    """
    a = _require_hermitian(a)
    if method == "spectral":
        spec = hermitian_eig(a)
        v = spec.eigenvectors
        return (v * np.exp(2j * np.pi * spec.eigenvalues)) @ v.conj().T
    if method == "pade":
        return expm_pade(2j * np.pi * a)
    raise InvalidInputError(f"unknown method {method!r}")


def _pade_coefficients(q: int) -> list[float]:
    c = [1.0]
    for j in range(1, q + 1):
        c.append(c[-1] * (q - j + 1) / (j * (2 * q - j + 1)))
    return c


def expm_pade(x, q: int = 6) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a [q/q] Padé approximant."""
    x = as_matrix(x).astype(complex)
    norm = np.linalg.norm(x, 1)
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    y = x / 2.0**s
    c = _pade_coefficients(q)
    ident = np.eye(x.shape[0], dtype=complex)
    power = ident
    num = c[0] * ident
    den = c[0] * ident
    for j in range(1, q + 1):
        power = power @ y
        num = num + c[j] * power
        den = den + ((-1) ** j) * c[j] * power
    result = np.linalg.solve(den, num)
    for _ in range(s):
        result = result @ result
    return result


def classical_solve(m, b) -> np.ndarray:
    """Direct solve by LU factorisation with partial pivoting."""
    m = as_matrix(m)
    b = np.asarray(b)
    if b.shape != (m.shape[0],):
        raise InvalidInputError(f"rhs shape {b.shape} does not match matrix {m.shape}")
    condition_number(m)
    x = np.linalg.solve(m, b)
    if np.isrealobj(m) and np.isrealobj(b):
        return np.real(x)
    return x


def load_csv_matrix(path: str | Path) -> np.ndarray:
    """Read a real matrix (one row per line) or vector (one value per line)."""
    text = Path(path).read_text().strip()
    if "j" in text.lower():
        raise InvalidInputError(f"{path}: complex entries are not supported")
    rows = [[float(tok) for tok in line.split(",")] for line in text.splitlines() if line.strip()]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInputError(f"{path}: ragged rows")
    return np.array(rows, dtype=float)


def save_csv_matrix(path: str | Path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    lines = [",".join(repr(float(v)) for v in row) for row in a]
    Path(path).write_text("\n".join(lines) + "\n")
