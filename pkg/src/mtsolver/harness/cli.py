"""``mtsolver`` command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys

from ..errors import InvalidInputError
from . import experiments as ex
from .config import ExperimentConfig


def _m_qubits(text: str):
    return text if text == "auto" else int(text)


def _int_list(text: str) -> list[int]:
    return [int(float(tok)) for tok in text.split(",") if tok]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment configuration")
    common.add_argument("--matrix", help="CSV file with the system matrix")
    common.add_argument("--rhs", help="CSV file with the right-hand side")
    common.add_argument("--seed", type=int, help="instance seed")
    common.add_argument("--n", type=int, help="number of system qubits")
    common.add_argument("--kappa-max", type=float, dest="kappa_max")
    common.add_argument("--kappa", type=float, help="generate an instance with exactly this condition number")
    common.add_argument("--shots", type=int)
    common.add_argument("--escalate-to", type=int, dest="shots_escalated", help="shot count after a stall")
    common.add_argument("--modules", type=int)
    common.add_argument("--m-qubits", type=_m_qubits, dest="m_qubits", help="pointer qubits or 'auto'")
    common.add_argument("--guard", type=int)
    common.add_argument("--backend", choices=["projective", "spectral", "circuit"])
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--replicas", type=int)
    common.add_argument("--root-seed", type=int, dest="root_seed")
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output directory (default $MTSOLVER_OUT or ./results)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mtsolver", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("solve", parents=[common], help="solve one linear system")
    sub.add_parser("convergence", parents=[common], help="replica-averaged convergence curves")
    p = sub.add_parser("scaling", parents=[common], help="asymptotic fidelity versus shot count")
    p.add_argument("--shots-list", type=_int_list, dest="shots_list")
    p = sub.add_parser("fig5", parents=[common], help="estimator spread versus p0")
    p.add_argument("--p0-grid", type=_float_list, dest="p0_grid")
    p.add_argument("--repetitions", type=int)
    p = sub.add_parser("variance-compare", parents=[common], help="MTA versus VQLS estimator spread")
    p.add_argument("--pauli-terms", type=_int_list, dest="pauli_terms")
    p.add_argument("--matrices", type=int, dest="matrices_per_term")
    p.add_argument("--repetitions", type=int, dest="vqls_repetitions")
    p.add_argument("--shot-budget", type=int, dest="shot_budget")
    sub.add_parser("gen-instance", parents=[common], help="write a seeded instance to disk")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    logging.basicConfig(
        level=logging.INFO if args.pop("verbose") else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config_path = args.pop("config")
    try:
        cfg = ExperimentConfig.load(config_path, **args)
    except (InvalidInputError, OSError) as exc:
        print(f"mtsolver: {exc}", file=sys.stderr)
        return ex.EXIT_USAGE

    try:
        if cfg.mode == "solve":
            res, status = ex.run_solve(cfg)
            r = res.solution.relative_residual if res.solution is not None else float("nan")
            print(f"F_T={res.asymptotic_fidelity:.6f} iterations={len(res.trace)} "
                  f"stop={res.trace.stop_reason} residual={r:.3g}")
            return status
        if cfg.mode == "convergence":
            res = ex.run_convergence(cfg)
            print(f"gamma={res.gamma:.5g} rms={res.fit_rms:.3g} final mean F_T={res.mean_fidelity[-1]:.6f}")
        elif cfg.mode == "scaling":
            for row in ex.run_scaling(cfg):
                print(f"N={row.shots:<8d} F_T={row.fidelity:.6f} 1-4/N={row.heisenberg:.6f} a={row.a:.3f}")
        elif cfg.mode == "fig5":
            for row in ex.run_fig5(cfg):
                print(f"p0={row.p0:.3f} sigma={row.sigma:.5f} theory={row.sigma_theory:.5f}")
        elif cfg.mode == "variance-compare":
            res = ex.run_variance_compare(cfg)
            for row in res.medians:
                print(f"T={row.n_pauli_terms:<3d} mta={row.sigma_rel_mta:.5f} vqls={row.sigma_rel_vqls:.5f}")
            print(f"spearman mta={res.spearman_mta:.2f} vqls={res.spearman_vqls:.2f}")
        elif cfg.mode == "gen-instance":
            system = ex.run_gen_instance(cfg)
            print(f"wrote n={system.n_qubits} kappa={system.kappa:.4g} to {cfg.out}")
    except (InvalidInputError, OSError, ValueError) as exc:
        print(f"mtsolver: {exc}", file=sys.stderr)
        return ex.EXIT_USAGE
    return ex.EXIT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
