"""Experiment configuration: YAML document plus command-line overrides."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import InvalidInputError
from ..optimizer import ScheduleConfig

MODES = ("solve", "convergence", "scaling", "variance-compare", "fig5", "gen-instance")
OUT_ENV = "MTSOLVER_OUT"

# nested YAML sections whose keys map one-to-one onto flat fields
SECTIONS = ("system", "ansatz", "pointer", "schedule", "run", "scaling", "fig5", "variance")


def default_out() -> str:
    return os.environ.get(OUT_ENV, "results")


@dataclass
class ExperimentConfig:
    mode: str = "solve"
    # system source: either both CSV paths or an instance seed
    matrix: str | None = None
    rhs: str | None = None
    seed: int | None = 0
    n: int = 4
    kappa_max: float = 100.0
    kappa: float | None = None  # build an instance with exactly this condition number
    # ansatz and measurement
    modules: int = 3
    m_qubits: int | str = "auto"
    guard: int = 2
    backend: str = "spectral"
    # schedule
    shots: int = 1000
    shots_escalated: int | None = None
    escalate_after_stall: int = 1500
    max_iters: int = 10_000
    terminate_window: int = 1000
    terminate_threshold: float = 0.005
    # orchestration
    replicas: int = 1
    root_seed: int = 0
    workers: int = 1
    out: str = field(default_factory=default_out)
    # scaling
    shots_list: list[int] = field(default_factory=lambda: [100, 1000, 10_000])
    # fig5
    p0_grid: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    repetitions: int = 500
    # variance-compare
    pauli_terms: list[int] = field(default_factory=lambda: [2, 4, 8, 16])
    matrices_per_term: int = 10
    vqls_repetitions: int = 50
    shot_budget: int = 100_000
    probe_fidelity: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.replicas < 1:
            raise InvalidInputError("replicas must be >= 1")
        if (self.matrix is None) != (self.rhs is None):
            raise InvalidInputError("--matrix and --rhs must be given together")
        if self.matrix is None and self.seed is None:
            raise InvalidInputError("give either --matrix/--rhs or --seed")
        if self.m_qubits != "auto":
            self.m_qubits = int(self.m_qubits)
        if self.mode == "convergence" and self.replicas < 2:
            raise InvalidInputError("convergence mode needs at least two replicas")
        if self.mode == "scaling" and not self.shots_list:
            raise InvalidInputError("scaling mode needs a nonempty shot list")

    def schedule(self, shots: int | None = None, escalate: bool = True, full_length: bool = False) -> ScheduleConfig:
        return ScheduleConfig(
            shots_initial=shots or self.shots,
            shots_escalated=self.shots_escalated if escalate else None,
            escalate_after_stall=self.escalate_after_stall,
            max_iterations=self.max_iters,
            terminate_window=self.terminate_window,
            terminate_threshold=self.terminate_threshold,
            min_iterations=self.max_iters if full_length else 0,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, doc: dict | None, **overrides) -> "ExperimentConfig":
        flat: dict = {}
        for key, value in (doc or {}).items():
            key = key.replace("-", "_")
            if key in SECTIONS and isinstance(value, dict):
                flat.update({k.replace("-", "_"): v for k, v in value.items()})
            else:
                flat[key] = value
        flat.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise InvalidInputError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**flat)

    @classmethod
    def load(cls, path: str | Path | None, **overrides) -> "ExperimentConfig":
        doc = yaml.safe_load(Path(path).read_text()) if path else None
        return cls.from_mapping(doc, **overrides)
