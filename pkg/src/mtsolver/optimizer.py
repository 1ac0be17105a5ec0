"""Rotosolve maximisation of the zero-outcome frequency."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import curve_fit

from .ansatz import AnsatzParameters, CoordinateSweep, get_ansatz, wrap_angles
from .errors import InsufficientDataError, InvalidInputError
from .measurement import PointerConfig, make_backend
from .problem import ObjectiveObservable

EPS_FLAT = 1e-12


@dataclass(frozen=True)
class ScheduleConfig:
    """Shot budget, escalation and termination settings.

    Escalation is disabled when ``shots_escalated`` is ``None`` or equal to
    ``shots_initial``. The termination test is skipped before
    ``min_iterations``.
    """

    shots_initial: int = 1000
    shots_escalated: int | None = 100_000
    escalate_after_stall: int = 1500
    max_iterations: int = 10_000
    terminate_window: int = 1000
    terminate_threshold: float = 0.005
    min_iterations: int = 0

    def __post_init__(self):
        counts = [self.shots_initial, self.escalate_after_stall, self.max_iterations, self.terminate_window]
        if self.shots_escalated is not None:
            counts.append(self.shots_escalated)
        if min(counts) < 1:
            raise InvalidInputError("schedule counts must be >= 1")
        if not 0.0 < self.terminate_threshold <= 1.0:
            raise InvalidInputError("terminate_threshold must lie in (0, 1]")

    @property
    def escalates(self) -> bool:
        return self.shots_escalated is not None and self.shots_escalated != self.shots_initial


@dataclass
class OptimizerTrace:
    iters: list[int] = field(default_factory=list)
    param_index: list[int] = field(default_factory=list)
    rel_freq: list[float] = field(default_factory=list)
    fidelity: list[float] = field(default_factory=list)
    shots: list[int] = field(default_factory=list)
    initial_fidelity: float = float("nan")
    stop_reason: str = ""
    escalated_at: int | None = None

    def __len__(self) -> int:
        return len(self.iters)

    def append(self, t: int, d: int, r: float, f: float, n: int) -> None:
        self.iters.append(t)
        self.param_index.append(d)
        self.rel_freq.append(r)
        self.fidelity.append(f)
        self.shots.append(n)

    @property
    def converged(self) -> bool:
        return self.stop_reason == "converged"

    def asymptotic_fidelity(self, fraction: float = 0.1, start: int = 0, stop: int | None = None) -> float:
        """Mean exact fidelity over the final ``fraction`` of ``[start, stop)``."""
        f = np.asarray(self.fidelity[start:stop])
        if f.size == 0:
            raise InsufficientDataError("empty trace")
        tail = max(1, int(round(fraction * f.size)))
        return float(f[-tail:].mean())

    def rows(self):
        return zip(self.iters, self.param_index, self.rel_freq, self.fidelity, self.shots)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            write_trace_header(fh)
            w = csv.writer(fh)
            for row in self.rows():
                w.writerow(format_trace_row(*row))


TRACE_COLUMNS = ("iter", "param_index", "r", "F_T", "N")


def write_trace_header(fh) -> None:
    csv.writer(fh).writerow(TRACE_COLUMNS)


def format_trace_row(t, d, r, f, n) -> list:
    return [t, d, repr(float(r)), repr(float(f)), n]


def rotosolve_step(angles, d: int, evaluate: Callable[[float], float], eps_flat: float = EPS_FLAT) -> float:
    """Return the analytic maximiser of a sinusoidal single-angle objective.

    ``evaluate(theta)`` gives the objective with angle ``d`` set to ``theta``
    and all others fixed. Samples are taken at the current angle and at
    +-pi/2 from it. A flat direction leaves the angle unchanged.
    """
    phi0 = float(angles[d])
    f0 = evaluate(phi0)
    fp = evaluate(phi0 + 0.5 * np.pi)
    fm = evaluate(phi0 - 0.5 * np.pi)
    a = 0.5 * (fp + fm)
    b = f0 - a
    c = 0.5 * (fp - fm)
    if abs(b) < eps_flat and abs(c) < eps_flat:
        return phi0
    return float(wrap_angles(phi0 + np.arctan2(c, b)))


def optimize(
    obs: ObjectiveObservable,
    params0: AnsatzParameters,
    schedule: ScheduleConfig | None = None,
    pointer: PointerConfig | None = None,
    seed: int = 0,
    *,
    backend: str = "spectral",
    exact: bool = False,
    on_record: Callable | None = None,
) -> tuple[OptimizerTrace, AnsatzParameters]:
    """Cycle Rotosolve updates over all angles until termination.

    Each iteration updates one angle from three fresh shot estimates of the
    zero-outcome probability (or the probability itself when ``exact``).
    The iteration is logged with the estimate at the current angle, the
    exact target fidelity after the update and the shot count.
    """
    schedule = schedule or ScheduleConfig()
    pointer = pointer or PointerConfig(obs.m_qubits)
    if params0.n_qubits != obs.n_qubits:
        raise InvalidInputError(f"ansatz has {params0.n_qubits} qubits, observable {obs.n_qubits}")
    meas = make_backend(backend, obs, pointer)
    ans = get_ansatz(params0.n_qubits, params0.k_modules)
    sweep = CoordinateSweep(ans, params0.angles)
    rng = np.random.default_rng(seed)
    target = obs.null_vector.conj()
    n_params = ans.n_params

    trace = OptimizerTrace(initial_fidelity=float(abs(target @ sweep.state()) ** 2))
    shots = schedule.shots_initial
    pending_escalation = schedule.escalates
    window = schedule.terminate_window
    hits: list[bool] = []
    run_sum = 0.0
    best_proxy = -np.inf
    last_improved = 0

    for t in range(1, schedule.max_iterations + 1):
        d = (t - 1) % n_params
        u, v = sweep.pair(d)
        seen: list[float] = []

        def evaluate(theta: float) -> float:
            psi = np.cos(0.5 * theta) * u + np.sin(0.5 * theta) * v
            p = float(meas.zero_probability(psi))
            val = p if exact else rng.binomial(shots, p) / shots
            seen.append(val)
            return val

        theta = rotosolve_step(sweep.angles, d, evaluate)
        sweep.set_angle(d, theta)
        psi = np.cos(0.5 * theta) * u + np.sin(0.5 * theta) * v
        fid = float(abs(target @ psi) ** 2)
        r0 = seen[0]
        trace.append(t, d, r0, fid, shots)
        if on_record is not None:
            on_record(t, d, r0, fid, shots)

        hits.append(r0 >= 1.0)
        run_sum += r0
        if len(hits) > window:
            run_sum -= trace.rel_freq[-window - 1]
        since = len(hits)
        if since >= window:
            proxy = run_sum / window
            if proxy > best_proxy:
                best_proxy, last_improved = proxy, t
        else:
            last_improved = t

        saturated = since >= window and sum(hits[-window:]) >= schedule.terminate_threshold * window
        stalled = t - last_improved >= schedule.escalate_after_stall
        if pending_escalation and (saturated or stalled):
            shots = schedule.shots_escalated
            pending_escalation = False
            trace.escalated_at = t
            hits, run_sum, best_proxy = [], 0.0, -np.inf
            continue
        if saturated and t >= schedule.min_iterations:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max_iterations"

    return trace, params0.with_angles(wrap_angles(sweep.angles))


def _rise(t, gamma):
    return 1.0 - np.exp(-gamma * t)


def fit_exponential_rise(trace, saturation: float = 0.99, min_points: int = 10) -> tuple[float, float]:
    """Least-squares fit of ``F(t) = 1 - exp(-gamma t)`` before saturation.

    ``trace`` is an :class:`OptimizerTrace` or a sequence of fidelities for
    iterations ``t = 1, 2, ...``. Only the leading segment with ``F <
    saturation`` is fitted. Returns ``(gamma, rms_residual)``.
    """
    if isinstance(trace, OptimizerTrace):
        f = np.asarray(trace.fidelity, dtype=float)
        t = np.asarray(trace.iters, dtype=float)
    else:
        f = np.asarray(trace, dtype=float)
        t = np.arange(1, f.size + 1, dtype=float)
    above = np.nonzero(f >= saturation)[0]
    end = above[0] if above.size else f.size
    f, t = f[:end], t[:end]
    if f.size < min_points:
        raise InsufficientDataError(f"{f.size} pre-saturation points, need at least {min_points}")
    # log-linear initial guess
    mask = f < 1.0
    guess = -np.polyfit(t[mask], np.log(1.0 - f[mask]), 1)[0] if mask.sum() >= 2 else 1.0 / t.mean()
    guess = guess if np.isfinite(guess) and guess > 0 else 1.0 / t.mean()
    (gamma,), _ = curve_fit(_rise, t, f, p0=[guess], bounds=(0.0, np.inf))
    rms = float(np.sqrt(np.mean((f - _rise(t, gamma)) ** 2)))
    return float(gamma), rms
