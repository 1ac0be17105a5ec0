"""Parameterised state preparation on an n-qubit statevector.

Qubit 0 is the most significant bit of the basis-state index, so the
statevector is the tensor product ``q0 (x) q1 (x) ... (x) q_{n-1}``.

One module of the circuit is

1. an Euler layer ``Rz, Ry, Rz`` on every qubit (``3n`` angles, all ``Rz``
   of the first sweep, then all ``Ry``, then all ``Rz``);
2. an entangling ring: for each edge ``(i, i+1 mod n)``::

       CX(i -> i+1); Rz(i); Ry(i+1); CX(i+1 -> i); Ry(i+1); CX(i -> i+1)

   contributing 3 angles per edge, ``3n`` in total;
3. a second Euler layer (``3n`` angles).

For four qubits this gives 36 angles per module. A single qubit has no ring
and 6 angles per module. Angle indices follow gate order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class Gate:
    kind: str  # "rz", "ry" or "cx"
    qubits: tuple[int, ...]
    param: int | None = None


def angles_per_module(n_qubits: int) -> int:
    if n_qubits < 1:
        raise InvalidInputError("n_qubits must be >= 1")
    return 6 if n_qubits == 1 else 9 * n_qubits


def ring_edges(n_qubits: int) -> list[tuple[int, int]]:
    if n_qubits == 1:
        return []
    return [(i, (i + 1) % n_qubits) for i in range(n_qubits)]


def _euler_layer(n: int, offset: int) -> list[Gate]:
    gates = []
    for sweep, kind in enumerate(("rz", "ry", "rz")):
        for q in range(n):
            gates.append(Gate(kind, (q,), offset + sweep * n + q))
    return gates


@lru_cache(maxsize=None)
def circuit_gates(n_qubits: int, k_modules: int) -> tuple[Gate, ...]:
    gates: list[Gate] = []
    p = 0
    for _ in range(k_modules):
        gates += _euler_layer(n_qubits, p)
        p += 3 * n_qubits
        for i, j in ring_edges(n_qubits):
            gates += [
                Gate("cx", (i, j)),
                Gate("rz", (i,), p),
                Gate("ry", (j,), p + 1),
                Gate("cx", (j, i)),
                Gate("ry", (j,), p + 2),
                Gate("cx", (i, j)),
            ]
            p += 3
        gates += _euler_layer(n_qubits, p)
        p += 3 * n_qubits
    assert p == k_modules * angles_per_module(n_qubits)
    return tuple(gates)


def wrap_angles(angles) -> np.ndarray:
    """Map angles into (-pi, pi]."""
    a = np.asarray(angles, dtype=float)
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


@dataclass(frozen=True)
class AnsatzParameters:
    n_qubits: int
    k_modules: int
    angles: np.ndarray

    def __post_init__(self):
        angles = np.array(self.angles, dtype=float).reshape(-1)
        expected = self.k_modules * angles_per_module(self.n_qubits)
        if self.k_modules < 1 or angles.size != expected:
            raise InvalidInputError(
                f"expected {expected} angles for n={self.n_qubits}, k={self.k_modules}; got {angles.size}"
            )
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @property
    def n_params(self) -> int:
        return self.angles.size

    def reduced(self) -> np.ndarray:
        return wrap_angles(self.angles)

    def with_angles(self, angles) -> "AnsatzParameters":
        return AnsatzParameters(self.n_qubits, self.k_modules, angles)

    @classmethod
    def random(cls, n_qubits: int, k_modules: int, seed: int) -> "AnsatzParameters":
        rng = np.random.default_rng(seed)
        count = k_modules * angles_per_module(n_qubits)
        # uniform on (-pi, pi]
        return cls(n_qubits, k_modules, -rng.uniform(-np.pi, np.pi, size=count))

    @classmethod
    def zeros(cls, n_qubits: int, k_modules: int) -> "AnsatzParameters":
        return cls(n_qubits, k_modules, np.zeros(k_modules * angles_per_module(n_qubits)))

    def to_json(self) -> dict:
        return {"n": self.n_qubits, "k": self.k_modules, "angles": self.reduced().tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "AnsatzParameters":
        return cls(int(doc["n"]), int(doc["k"]), np.asarray(doc["angles"], dtype=float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")


class Ansatz:
    """Compiled circuit for fixed ``(n_qubits, k_modules)``.

    States are arrays of shape ``(2**n,)`` or ``(2**n, batch)``; gates act on
    axis 0, so a batch of columns is transformed at once.
    """

    def __init__(self, n_qubits: int, k_modules: int):
        self.n_qubits = n_qubits
        self.k_modules = k_modules
        self.dim = 2**n_qubits
        self.gates = circuit_gates(n_qubits, k_modules)
        self.n_params = k_modules * angles_per_module(n_qubits)
        self.param_position = np.empty(self.n_params, dtype=int)
        for pos, g in enumerate(self.gates):
            if g.param is not None:
                self.param_position[g.param] = pos

        idx = np.arange(self.dim)
        shifts = [n_qubits - 1 - q for q in range(n_qubits)]
        self._bit = [((idx >> s) & 1).astype(bool) for s in shifts]
        self._flip = [idx ^ (1 << s) for s in shifts]
        self._sign = [np.where(bit, 1.0, -1.0) for bit in self._bit]
        self._cx = {}
        for i in range(n_qubits):
            for j in range(n_qubits):
                if i != j:
                    ctrl = self._bit[i]
                    self._cx[(i, j)] = np.where(ctrl, self._flip[j], idx)

    def apply_gate(self, psi: np.ndarray, gate: Gate, theta: float = 0.0) -> np.ndarray:
        if gate.kind == "cx":
            return psi[self._cx[gate.qubits]]
        q = gate.qubits[0]
        c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
        if gate.kind == "rz":
            ph = np.where(self._bit[q], c + 1j * s, c - 1j * s)
            return psi * (ph if psi.ndim == 1 else ph[:, None])
        # ry: |0> -> c|0> + s|1>, |1> -> -s|0> + c|1>
        sg = self._sign[q] if psi.ndim == 1 else self._sign[q][:, None]
        return c * psi + s * sg * psi[self._flip[q]]

    def apply_generator(self, psi: np.ndarray, gate: Gate) -> np.ndarray:
        """Apply ``-i * sigma`` for the rotation generator ``sigma`` of ``gate``."""
        q = gate.qubits[0]
        if gate.kind == "rz":
            ph = np.where(self._bit[q], 1j, -1j)
            return psi * (ph if psi.ndim == 1 else ph[:, None])
        sg = self._sign[q] if psi.ndim == 1 else self._sign[q][:, None]
        return sg * psi[self._flip[q]]

    def run(self, psi: np.ndarray, angles, start: int = 0, stop: int | None = None) -> np.ndarray:
        for g in self.gates[start:stop]:
            psi = self.apply_gate(psi, g, 0.0 if g.param is None else angles[g.param])
        return psi

    def zero_state(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi

    def state(self, angles) -> np.ndarray:
        angles = np.asarray(angles, dtype=float)
        if angles.size != self.n_params:
            raise InvalidInputError(f"expected {self.n_params} angles, got {angles.size}")
        return self.run(self.zero_state(), angles)

    def coordinate_pair(self, angles, d: int) -> tuple[np.ndarray, np.ndarray]:
        """States ``u, v`` with ``psi(theta_d = t) = cos(t/2) u + sin(t/2) v``."""
        pos = int(self.param_position[d])
        gate = self.gates[pos]
        prefix = self.run(self.zero_state(), angles, 0, pos)
        pair = np.stack([prefix, self.apply_generator(prefix, gate)], axis=1)
        pair = self.run(pair, angles, pos + 1)
        return pair[:, 0], pair[:, 1]


@lru_cache(maxsize=32)
def get_ansatz(n_qubits: int, k_modules: int) -> Ansatz:
    return Ansatz(n_qubits, k_modules)


def prepare_state(params: AnsatzParameters) -> np.ndarray:
    """Statevector ``V(angles)|0...0>`` for the given parameters."""
    psi = get_ansatz(params.n_qubits, params.k_modules).state(params.angles)
    return psi / np.linalg.norm(psi)


def state_overlap(psi, phi) -> complex:
    """Return ``<phi|psi>``."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != phi.shape:
        raise InvalidInputError(f"state shapes differ: {psi.shape} vs {phi.shape}")
    return complex(np.vdot(phi, psi))


class CoordinateSweep:
    """Incremental :meth:`Ansatz.coordinate_pair` for coordinates visited in order.

    Keeps the state before the current rotation and the adjoint of the
    circuit after it; moving to the next coordinate costs only the gates in
    between. Any other access pattern falls back to a full rebuild.
    """

    def __init__(self, ansatz: Ansatz, angles):
        self.ansatz = ansatz
        self.angles = np.array(angles, dtype=float)
        self._d: int | None = None
        self._prefix = None
        self._suffix_adj = None

    def set_angle(self, d: int, value: float) -> None:
        self.angles[d] = value
        if self._d != d:
            self._d = None

    def _rebuild(self, d: int) -> None:
        a = self.ansatz
        pos = int(a.param_position[d])
        self._prefix = a.run(a.zero_state(), self.angles, 0, pos)
        suffix = a.run(np.eye(a.dim, dtype=complex), self.angles, pos + 1)
        self._suffix_adj = suffix.conj().T
        self._d = d

    def _advance(self, d: int) -> None:
        a = self.ansatz
        old = int(a.param_position[self._d])
        new = int(a.param_position[d])
        self._prefix = a.run(self._prefix, self.angles, old, new)
        self._suffix_adj = a.run(self._suffix_adj, self.angles, old + 1, new + 1)
        self._d = d

    def pair(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        if self._d is not None and d == self._d + 1:
            self._advance(d)
        elif self._d != d:
            self._rebuild(d)
        gate = self.ansatz.gates[int(self.ansatz.param_position[d])]
        uv = np.stack([self._prefix, self.ansatz.apply_generator(self._prefix, gate)], axis=1)
        out = self._suffix_adj.conj().T @ uv
        return out[:, 0], out[:, 1]

    def state(self) -> np.ndarray:
        return self.ansatz.state(self.angles)
