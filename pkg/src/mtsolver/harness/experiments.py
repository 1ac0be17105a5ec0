"""Experiment drivers behind the command-line subcommands.

Every driver takes an :class:`ExperimentConfig`, returns a plain result
object and, when ``write`` is true, emits CSV/JSON artifacts into
``cfg.out``. Outputs carry no timestamps, so a fixed config and root seed
reproduce them byte for byte.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .. import linalg, vqls
from ..ansatz import AnsatzParameters, prepare_state
from ..errors import InsufficientDataError, NonConvergenceError, SingularMatrixError
from ..measurement import PointerConfig, PointerDistribution, derive_seed, sample_zero_frequency
from ..optimizer import OptimizerTrace, fit_exponential_rise, format_trace_row, optimize, write_trace_header
from ..problem import (
    LinearSystem,
    ObjectiveObservable,
    SolutionRecord,
    build_objective,
    conditioned_instance,
    objective_from_matrix,
    random_instance,
    reconstruct_solution,
    required_pointer_qubits,
)
from .config import ExperimentConfig

log = logging.getLogger(__name__)

EXIT_CONVERGED = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2


def inferred_a(fidelity: float, shots: int) -> float:
    """Multiple of the binomial standard deviation implied by ``F = N / (N + a^2)``."""
    return math.sqrt(shots * (1.0 - fidelity) / fidelity)


def load_system(cfg: ExperimentConfig, seed: int | None = None) -> LinearSystem:
    if cfg.matrix is not None:
        return LinearSystem.from_csv(cfg.matrix, cfg.rhs)
    seed = cfg.seed if seed is None else seed
    if cfg.kappa is not None:
        return conditioned_instance(cfg.n, cfg.kappa, seed)
    return random_instance(cfg.n, seed, cfg.kappa_max)


def pointer_qubits(cfg: ExperimentConfig, system: LinearSystem) -> int:
    if cfg.m_qubits == "auto":
        return required_pointer_qubits(system.kappa, cfg.guard)
    return int(cfg.m_qubits)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _instance_summary(system: LinearSystem, obs: ObjectiveObservable) -> dict:
    return {
        "n": system.n_qubits,
        "seed": system.seed,
        "kappa": system.kappa,
        "m_qubits": obs.m_qubits,
        "resolution": 2.0**-obs.m_qubits,
        "lambda1": obs.lambda1,
        "scale_factor": obs.scale_factor,
    }


@dataclass
class RunResult:
    """One optimisation run and the quantities derived from it."""

    system: LinearSystem
    obs: ObjectiveObservable
    trace: OptimizerTrace
    params: AnsatzParameters
    asymptotic_fidelity: float
    a: float
    solution: SolutionRecord | None = None
    classical_error: float | None = None
    resolution_warnings: list[str] = field(default_factory=list)


def run_single(
    cfg: ExperimentConfig,
    system: LinearSystem,
    *,
    shots: int | None = None,
    escalate: bool = True,
    full_length: bool = False,
    init_seed: int = 0,
    opt_seed: int = 0,
    on_record=None,
) -> RunResult:
    """Build the observable, optimise from random angles and read out ``x``."""
    m = pointer_qubits(cfg, system)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        obs = build_objective(system, m)
    notes = [str(w.message) for w in caught]
    for msg in notes:
        log.warning("resolution: %s", msg)
    params0 = AnsatzParameters.random(system.n_qubits, cfg.modules, init_seed)
    schedule = cfg.schedule(shots, escalate=escalate, full_length=full_length)
    trace, params = optimize(obs, params0, schedule, PointerConfig(m), opt_seed, backend=cfg.backend, on_record=on_record)
    fid = trace.asymptotic_fidelity()
    final_shots = trace.shots[-1]
    result = RunResult(system, obs, trace, params, fid, inferred_a(fid, final_shots), resolution_warnings=notes)
    try:
        result.solution = reconstruct_solution(prepare_state(params), system)
        x_ref = linalg.classical_solve(system.m, system.b)
        result.classical_error = float(np.linalg.norm(result.solution.x - x_ref) / np.linalg.norm(x_ref))
    except NonConvergenceError as exc:
        log.warning("solution read-out failed: %s", exc)
    return result


def _run_summary(res: RunResult) -> dict:
    tr = res.trace
    doc = {
        "iterations": len(tr),
        "stop_reason": tr.stop_reason,
        "escalated_at": tr.escalated_at,
        "initial_fidelity": tr.initial_fidelity,
        "final_fidelity": tr.fidelity[-1],
        "asymptotic_fidelity": res.asymptotic_fidelity,
        "final_shots": tr.shots[-1],
        "a": res.a,
        "resolution_warnings": res.resolution_warnings,
    }
    if res.solution is not None:
        doc["relative_residual"] = res.solution.relative_residual
        doc["classical_relative_error"] = res.classical_error
    return doc


def run_solve(cfg: ExperimentConfig, write: bool = True) -> tuple[RunResult, int]:
    """Solve one system; returns the result and the process exit status."""
    system = load_system(cfg)
    init_seed, opt_seed = derive_seed(cfg.root_seed, 0), derive_seed(cfg.root_seed, 1)
    if not write:
        res = run_single(cfg, system, init_seed=init_seed, opt_seed=opt_seed)
    else:
        out = _out_dir(cfg)
        with open(out / "trace.csv", "w", newline="") as fh:
            write_trace_header(fh)
            writer = csv.writer(fh)
            res = run_single(
                cfg, system, init_seed=init_seed, opt_seed=opt_seed,
                on_record=lambda *row: writer.writerow(format_trace_row(*row)),
            )
        report = {
            "mode": "solve",
            "config": cfg.to_dict(),
            "instance": _instance_summary(system, res.obs),
            "run": _run_summary(res),
        }
        try:
            gamma, rms = fit_exponential_rise(res.trace)
            report["run"].update(gamma=gamma, fit_rms=rms)
        except InsufficientDataError:
            pass
        _write_json(out / "report.json", report)
        if res.solution is not None:
            _write_json(out / "solution.json", res.solution.to_json())
        res.params.save(out / "params.json")
    status = EXIT_CONVERGED if res.trace.converged and res.solution is not None else EXIT_NOT_CONVERGED
    if status != EXIT_CONVERGED:
        log.warning("not converged: stop_reason=%s", res.trace.stop_reason)
    return res, status


def _replica_job(args) -> tuple[int, OptimizerTrace, float]:
    cfg, index = args
    seed = cfg.seed + index if cfg.matrix is None else None
    system = load_system(cfg, seed)
    res = run_single(
        cfg, system,
        init_seed=derive_seed(cfg.root_seed, 2 * index),
        opt_seed=derive_seed(cfg.root_seed, 2 * index + 1),
    )
    return index, res.trace, res.obs.m_qubits


def run_replicas(cfg: ExperimentConfig) -> list[OptimizerTrace]:
    """Independent replicas, merged by replica index whatever the completion order."""
    jobs = [(cfg, i) for i in range(cfg.replicas)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            done = list(pool.map(_replica_job, jobs))
    else:
        done = [_replica_job(job) for job in jobs]
    done.sort(key=lambda item: item[0])
    return [trace for _, trace, _ in done]


def pad_curves(traces: list[OptimizerTrace], attr: str) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-replica series, padding short ones with their final value.

    Returns the padded matrix and a boolean mask marking padded entries.
    """
    length = max(len(t) for t in traces)
    data = np.empty((len(traces), length))
    padded = np.zeros_like(data, dtype=bool)
    for i, tr in enumerate(traces):
        values = np.asarray(getattr(tr, attr), dtype=float)
        data[i, : values.size] = values
        data[i, values.size :] = values[-1]
        padded[i, values.size :] = True
    return data, padded


@dataclass
class ConvergenceResult:
    traces: list[OptimizerTrace]
    mean_fidelity: np.ndarray
    mean_rel_freq: np.ndarray
    active: np.ndarray
    gamma: float
    fit_rms: float


def run_convergence(cfg: ExperimentConfig, write: bool = True) -> ConvergenceResult:
    traces = run_replicas(cfg)
    fid, padded = pad_curves(traces, "fidelity")
    rel, _ = pad_curves(traces, "rel_freq")
    mean_f, mean_r = fid.mean(axis=0), rel.mean(axis=0)
    active = (~padded).sum(axis=0)
    gamma, rms = fit_exponential_rise(mean_f)
    result = ConvergenceResult(traces, mean_f, mean_r, active, gamma, rms)
    if write:
        out = _out_dir(cfg)
        with open(out / "curves.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "mean_F_T", "mean_r", "replicas_active"])
            for t in range(mean_f.size):
                w.writerow([t + 1, repr(float(mean_f[t])), repr(float(mean_r[t])), int(active[t])])
        with open(out / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replica", "iter", "param_index", "r", "F_T", "N"])
            for i, tr in enumerate(traces):
                for row in tr.rows():
                    w.writerow([i, *format_trace_row(*row)])
        _write_json(out / "report.json", {
            "mode": "convergence",
            "config": cfg.to_dict(),
            "gamma": gamma,
            "fit_rms": rms,
            "padded": bool(padded.any()),
            "replicas": [
                {"iterations": len(tr), "stop_reason": tr.stop_reason,
                 "asymptotic_fidelity": tr.asymptotic_fidelity()}
                for tr in traces
            ],
            "mean_asymptotic_fidelity": float(np.mean([tr.asymptotic_fidelity() for tr in traces])),
            "instance_note": "random symmetric instances, entries uniform on [-1, 1], resampled until kappa <= kappa_max",
        })
    return result


@dataclass
class ScalingRow:
    shots: int
    fidelity: float
    heisenberg: float  # 1 - 4/N
    a: float
    iterations: int
    stop_reason: str


def run_scaling(cfg: ExperimentConfig, write: bool = True) -> list[ScalingRow]:
    """Asymptotic fidelity for each shot count on one instance.

    Escalation is off and every run lasts ``max_iters`` iterations, so the
    asymptotic mean is taken over a long stationary tail.
    """
    system = load_system(cfg)
    rows = []
    for j, shots in enumerate(cfg.shots_list):
        fids, lengths, reasons = [], [], []
        for rep in range(cfg.replicas):
            stream = 1000 * j + 2 * rep
            res = run_single(
                cfg, system, shots=shots, escalate=False, full_length=True,
                init_seed=derive_seed(cfg.root_seed, stream),
                opt_seed=derive_seed(cfg.root_seed, stream + 1),
            )
            fids.append(res.asymptotic_fidelity)
            lengths.append(len(res.trace))
            reasons.append(res.trace.stop_reason)
        f = float(np.mean(fids))
        rows.append(ScalingRow(shots, f, 1.0 - 4.0 / shots, inferred_a(f, shots), int(np.max(lengths)),
                               ",".join(sorted(set(reasons)))))
    if write:
        out = _out_dir(cfg)
        with open(out / "scaling.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["N", "F_T", "one_minus_4_over_N", "a", "iterations", "stop_reason"])
            for r in rows:
                w.writerow([r.shots, repr(r.fidelity), repr(r.heisenberg), repr(r.a), r.iterations, r.stop_reason])
        _write_json(out / "report.json", {
            "mode": "scaling",
            "config": cfg.to_dict(),
            "instance": {"kappa": system.kappa, "seed": system.seed, "n": system.n_qubits},
            "rows": [r.__dict__ for r in rows],
        })
    return rows


@dataclass
class Fig5Row:
    p0: float
    sigma: float
    sigma_theory: float
    mean: float


def run_fig5(cfg: ExperimentConfig, write: bool = True) -> list[Fig5Row]:
    """Empirical spread of the zero-outcome frequency against the binomial law."""
    rows = []
    for idx, p0 in enumerate(cfg.p0_grid):
        dist = PointerDistribution(np.array([p0, 1.0 - p0]))
        rng = np.random.default_rng(derive_seed(cfg.root_seed, idx))
        r = np.array([sample_zero_frequency(dist, cfg.shots, rng).rel_freq for _ in range(cfg.repetitions)])
        sigma = float(r.std(ddof=1)) if r.size > 1 else 0.0
        rows.append(Fig5Row(p0, sigma, math.sqrt(p0 * (1.0 - p0) / cfg.shots), float(r.mean())))
    if write:
        out = _out_dir(cfg)
        with open(out / "fig5.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p0", "sigma_empirical", "sigma_theory", "mean_r", "N", "repetitions"])
            for r in rows:
                w.writerow([repr(r.p0), repr(r.sigma), repr(r.sigma_theory), repr(r.mean), cfg.shots, cfg.repetitions])
    return rows


@dataclass
class VarianceCompareResult:
    rows: list[vqls.VarianceReport]
    medians: list[vqls.VarianceReport]
    spearman_mta: float
    spearman_vqls: float
    excluded: int


def _pauli_instance(cfg: ExperimentConfig, n_terms: int, index: int):
    """Well-conditioned random Pauli-sum matrix and right-hand side for one sweep slot."""
    for attempt in range(1000):
        seed = derive_seed(cfg.root_seed, 1_000_000 * n_terms + 1000 * index + attempt)
        m = vqls.random_pauli_matrix(cfg.n, n_terms, seed)
        try:
            kappa = linalg.condition_number(m)
        except SingularMatrixError:
            continue
        if kappa <= cfg.kappa_max:
            b = np.random.default_rng(seed).uniform(-1.0, 1.0, size=m.shape[0])
            return m, b / np.linalg.norm(b), kappa, seed
    raise SingularMatrixError(f"no usable matrix with {n_terms} Pauli terms")


def run_variance_compare(cfg: ExperimentConfig, write: bool = True) -> VarianceCompareResult:
    """Relative spread of both cost estimators across Pauli-term counts.

    Each matrix is probed with a state of fixed fidelity ``probe_fidelity``
    to its solution ray. The VQLS side decomposes both the numerator
    ``M^+ (I - |b><b|) M`` and the denominator ``M^+ M`` into Pauli strings.
    """
    rows, medians, excluded = [], [], 0
    for n_terms in cfg.pauli_terms:
        per_t = []
        for j in range(cfg.matrices_per_term):
            m, b, kappa, seed = _pauli_instance(cfg, n_terms, j)
            mq = required_pointer_qubits(kappa, cfg.guard) if cfg.m_qubits == "auto" else int(cfg.m_qubits)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                obs = objective_from_matrix(m, b, mq)
            psi = vqls.state_with_fidelity(obs.null_vector, cfg.probe_fidelity, seed)
            mta = vqls.estimate_mta_sigma(obs, psi, PointerConfig(mq), cfg.shot_budget, cfg.vqls_repetitions,
                                          derive_seed(seed, 1), backend=cfg.backend)
            vq = vqls.estimate_vqls_cost_sigma(m, b, psi, cfg.shot_budget, cfg.vqls_repetitions, derive_seed(seed, 2))
            excluded += vq.excluded
            per_t.append(vqls.VarianceReport(n_terms, mta.sigma_rel, vq.sigma_rel, cfg.vqls_repetitions,
                                             cfg.shot_budget, j))
        rows += per_t
        medians.append(vqls.VarianceReport(
            n_terms,
            float(np.median([r.sigma_rel_mta for r in per_t])),
            float(np.median([r.sigma_rel_vqls for r in per_t])),
            cfg.vqls_repetitions, cfg.shot_budget, None,
        ))
    ts = [r.n_pauli_terms for r in medians]
    rho_mta = _spearman(ts, [r.sigma_rel_mta for r in medians])
    rho_vqls = _spearman(ts, [r.sigma_rel_vqls for r in medians])
    result = VarianceCompareResult(rows, medians, rho_mta, rho_vqls, excluded)
    if write:
        out = _out_dir(cfg)
        with open(out / "variance.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "matrix", "sigma_rel_mta", "sigma_rel_vqls", "repetitions", "N_total"])
            for n_terms in cfg.pauli_terms:
                for r in [r for r in rows if r.n_pauli_terms == n_terms] + [
                    r for r in medians if r.n_pauli_terms == n_terms
                ]:
                    label = "median" if r.matrix_index is None else r.matrix_index
                    w.writerow([r.n_pauli_terms, label, repr(r.sigma_rel_mta), repr(r.sigma_rel_vqls),
                                r.repetitions, r.shot_budget])
        _write_json(out / "report.json", {
            "mode": "variance-compare",
            "config": cfg.to_dict(),
            "spearman_mta": rho_mta,
            "spearman_vqls": rho_vqls,
            "excluded_repetitions": excluded,
            "decomposed_operators": "VQLS numerator M^+(I-|b><b|)M and denominator M^+M; identity terms cost no shots",
            "probe_state": f"fixed fidelity {cfg.probe_fidelity} to the solution ray",
        })
    return result


def _spearman(x, y) -> float:
    # nan for constant input
    return float(spearmanr(x, y)[0])


def run_gen_instance(cfg: ExperimentConfig) -> LinearSystem:
    system = load_system(cfg)
    out = _out_dir(cfg)
    system.save(out / "instance.json")
    linalg.save_csv_matrix(out / "matrix.csv", system.m)
    linalg.save_csv_matrix(out / "rhs.csv", system.b.reshape(-1, 1))
    return system
