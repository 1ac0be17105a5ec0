"""Variational linear-system solver driven by a simulated phase-estimation measurement.

The system ``M x = b`` is recast as finding the null vector of the PSD
observable ``A = M^+ (I - |b><b|) M``. An ansatz state is tuned with
Rotosolve to maximise the shot-estimated probability that phase estimation
of ``A`` reads out the zero eigenvalue; ``x`` is then read off the
optimised state.
"""
from .ansatz import AnsatzParameters, prepare_state, state_overlap
from .linalg import classical_solve, condition_number, hermitian_eig, unitary_exp
from .measurement import (
    PointerConfig,
    PointerDistribution,
    ShotRecord,
    exact_target_fidelity,
    pointer_distribution_circuit,
    pointer_distribution_projective,
    pointer_distribution_spectral,
    sample_zero_frequency,
)
from .optimizer import OptimizerTrace, ScheduleConfig, fit_exponential_rise, optimize, rotosolve_step
from .problem import (
    LinearSystem,
    ObjectiveObservable,
    SolutionRecord,
    build_objective,
    random_instance,
    reconstruct_solution,
    required_pointer_qubits,
)

__version__ = "0.1.0"
