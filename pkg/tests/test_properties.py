"""Randomised invariants, 100 cases each."""
import warnings

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mtsolver import linalg
from mtsolver.ansatz import AnsatzParameters, get_ansatz, prepare_state
from mtsolver.errors import ResolutionWarning
from mtsolver.measurement import PointerConfig, make_backend
from mtsolver.optimizer import ScheduleConfig, optimize, rotosolve_step
from mtsolver.problem import build_objective, objective_from_matrix, random_instance, reconstruct_solution
from mtsolver.vqls import pauli_decompose

CASES = settings(max_examples=100, deadline=None, derandomize=True)
seeds = st.integers(min_value=0, max_value=2**31 - 1)
qubits = st.integers(min_value=1, max_value=3)


def rng_hermitian(rng, dim):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


def quiet_objective(system, m):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        return build_objective(system, m)


@CASES
@given(seed=seeds, dim=st.integers(1, 16))
def test_eig_reconstructs_hermitian(seed, dim):
    a = rng_hermitian(np.random.default_rng(seed), dim)
    spec = linalg.hermitian_eig(a)
    assert np.isrealobj(spec.eigenvalues)
    assert np.linalg.norm(spec.reconstruct() - a) <= 1e-9 * max(np.linalg.norm(a), 1e-300)
    v = spec.eigenvectors
    assert np.allclose(v.conj().T @ v, np.eye(dim), atol=1e-10)


@CASES
@given(seed=seeds, dim=st.integers(1, 8))
def test_unitary_exp_commutes(seed, dim):
    a = rng_hermitian(np.random.default_rng(seed), dim)
    u = linalg.unitary_exp(a)
    assert np.linalg.norm(u @ a - a @ u) <= 1e-9
    assert np.allclose(u @ u.conj().T, np.eye(dim), atol=1e-10)


@CASES
@given(seed=seeds, scale=st.floats(1e-3, 1e3).flatmap(lambda s: st.sampled_from([s, -s])))
def test_condition_number_scale_invariant(seed, scale):
    m = np.random.default_rng(seed).standard_normal((8, 8))
    assert abs(linalg.condition_number(scale * m) / linalg.condition_number(m) - 1.0) <= 1e-10


@CASES
@given(seed=seeds, n=qubits, m=st.integers(3, 12))
def test_objective_hermitian_psd_annihilates_solution(seed, n, m):
    system = random_instance(n, seed)
    obs = quiet_objective(system, m)
    assert linalg.is_hermitian(obs.a, atol=1e-12)
    lam_max = obs.eigenvalues[-1]
    assert obs.eigenvalues[0] >= -1e-10 * lam_max
    assert lam_max <= 1.0 - 2.0**-m + 1e-12
    y = linalg.classical_solve(system.m, system.b)
    y = y / np.linalg.norm(y)
    assert np.linalg.norm(obs.a @ y) <= 1e-9 * lam_max


@CASES
@given(seed=seeds, n=qubits, s=st.floats(1e-3, 1e3))
def test_null_space_scale_invariant(seed, n, s):
    system = random_instance(n, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        base = objective_from_matrix(system.m, system.b_hat, 6).null_vector
        scaled = objective_from_matrix(system.m / s, system.b_hat, 6).null_vector
    assert np.allclose(linalg.fix_phase(base), linalg.fix_phase(scaled), atol=1e-9)


@CASES
@given(seed=seeds, n=qubits, phi=st.floats(-np.pi, np.pi))
def test_reconstruction_exact_and_phase_free(seed, n, phi):
    system = random_instance(n, seed)
    x_ref = linalg.classical_solve(system.m, system.b)
    y = x_ref / np.linalg.norm(x_ref)
    rec = reconstruct_solution(np.exp(1j * phi) * y, system)
    assert np.linalg.norm(rec.x - x_ref) <= 1e-8 * np.linalg.norm(x_ref)


@CASES
@given(seed=seeds, n=st.integers(1, 4), k=st.integers(1, 3))
def test_ansatz_normalised(seed, n, k):
    psi = prepare_state(AnsatzParameters.random(n, k, seed))
    assert abs(np.linalg.norm(psi) - 1.0) <= 1e-10


@CASES
@given(seed=seeds, n=st.integers(1, 3), m=st.integers(1, 5), backend=st.sampled_from(["projective", "spectral", "circuit"]))
def test_distributions_normalised(seed, n, m, backend):
    rng = np.random.default_rng(seed)
    obs = quiet_objective(random_instance(n, seed), m)
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    psi /= np.linalg.norm(psi)
    probs = make_backend(backend, obs, PointerConfig(m)).distribution(psi).probs
    assert np.all(probs >= 0.0)
    assert abs(probs.sum() - 1.0) <= 1e-10


@CASES
@given(seed=seeds, n=st.integers(1, 3), m=st.integers(1, 5))
def test_spectral_equals_circuit(seed, n, m):
    rng = np.random.default_rng(seed)
    obs = quiet_objective(random_instance(n, seed), m)
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    psi /= np.linalg.norm(psi)
    cfg = PointerConfig(m)
    p = make_backend("spectral", obs, cfg).distribution(psi).probs
    q = make_backend("circuit", obs, cfg).distribution(psi).probs
    assert 0.5 * np.abs(p - q).sum() <= 1e-9


@CASES
@given(seed=seeds, n=st.integers(1, 3), d_frac=st.floats(0.0, 1.0, exclude_max=True))
def test_sinusoid_fit(seed, n, d_frac):
    system = random_instance(n, seed)
    obs = quiet_objective(system, 6)
    ans = get_ansatz(n, 2)
    angles = AnsatzParameters.random(n, 2, seed).angles
    d = int(d_frac * ans.n_params)
    u, v = ans.coordinate_pair(angles, d)
    thetas = np.arange(5) * 2 * np.pi / 5
    states = np.outer(u, np.cos(thetas / 2)) + np.outer(v, np.sin(thetas / 2))
    f = np.abs(obs.null_vector.conj() @ states) ** 2
    design = np.column_stack([np.ones(5), np.cos(thetas), np.sin(thetas)])
    coef, *_ = np.linalg.lstsq(design, f, rcond=None)
    assert np.abs(design @ coef - f).max() <= 1e-9


@CASES
@given(seed=seeds, n=st.integers(1, 3), d_frac=st.floats(0.0, 1.0, exclude_max=True))
def test_rotosolve_never_decreases(seed, n, d_frac):
    obs = quiet_objective(random_instance(n, seed), 5)
    backend = make_backend("spectral", obs, PointerConfig(5))
    ans = get_ansatz(n, 1)
    angles = AnsatzParameters.random(n, 1, seed).angles
    d = int(d_frac * ans.n_params)
    u, v = ans.coordinate_pair(angles, d)

    def f(t):
        return float(backend.zero_probability(np.cos(t / 2) * u + np.sin(t / 2) * v))

    theta = rotosolve_step(angles, d, f)
    assert f(theta) >= f(angles[d]) - 1e-10


@CASES
@given(seed=seeds, n=st.integers(1, 2))
def test_optimize_deterministic(seed, n):
    obs = quiet_objective(random_instance(n, seed), 4)
    params = AnsatzParameters.random(n, 1, seed)
    cfg = ScheduleConfig(shots_initial=50, max_iterations=30)
    t1, p1 = optimize(obs, params, cfg, seed=seed)
    t2, p2 = optimize(obs, params, cfg, seed=seed)
    assert list(t1.rows()) == list(t2.rows())
    assert np.array_equal(p1.angles, p2.angles)


@CASES
@given(seed=seeds, n=st.integers(1, 3))
def test_pauli_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    dim = 2**n
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    assert np.linalg.norm(pauli_decompose(m).matrix() - m) <= 1e-10 * np.linalg.norm(m)


@CASES
@given(seed=seeds)
def test_instance_deterministic(seed):
    a, b = random_instance(2, seed), random_instance(2, seed)
    assert np.array_equal(a.m, b.m) and np.array_equal(a.b, b.b)
