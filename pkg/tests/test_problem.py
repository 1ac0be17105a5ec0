import json

import numpy as np
import pytest

from mtsolver import linalg
from mtsolver.errors import InvalidInputError, NonConvergenceError, ResolutionWarning, SingularMatrixError
from mtsolver.problem import (
    LinearSystem,
    build_objective,
    conditioned_instance,
    random_instance,
    reconstruct_solution,
    required_pointer_qubits,
)


def unit(v):
    v = np.asarray(v, dtype=complex)
    return v / np.linalg.norm(v)


def parallel(u, v, tol):
    return abs(abs(np.vdot(unit(u), unit(v))) - 1.0) <= tol


class TestLinearSystem:
    def test_fields(self):
        s = LinearSystem(np.diag([1.0, 2.0]), [0.0, 3.0])
        assert s.size == 2 and s.n_qubits == 1
        assert s.b_norm == 3.0 and s.kappa == pytest.approx(2.0)
        np.testing.assert_allclose(s.b_hat, [0.0, 1.0])

    def test_rejects_non_power_of_two(self):
        with pytest.raises(InvalidInputError):
            LinearSystem(np.eye(3), np.ones(3))

    def test_rejects_zero_rhs(self):
        with pytest.raises(InvalidInputError):
            LinearSystem(np.eye(2), np.zeros(2))

    def test_rejects_singular(self):
        with pytest.raises(SingularMatrixError):
            LinearSystem(np.ones((2, 2)), np.ones(2))

    def test_immutable(self):
        s = random_instance(2, 0)
        with pytest.raises(ValueError):
            s.m[0, 0] = 5.0

    def test_json_round_trip(self, tmp_path):
        s = random_instance(2, 7)
        s.save(tmp_path / "s.json")
        doc = json.loads((tmp_path / "s.json").read_text())
        assert set(doc) == {"n", "seed", "matrix", "b", "kappa"}
        t = LinearSystem.load(tmp_path / "s.json")
        np.testing.assert_array_equal(t.m, s.m)
        np.testing.assert_array_equal(t.b, s.b)
        assert t.seed == 7

    def test_from_csv(self, tmp_path):
        s = random_instance(2, 1)
        linalg.save_csv_matrix(tmp_path / "m.csv", s.m)
        linalg.save_csv_matrix(tmp_path / "b.csv", s.b[:, None])
        t = LinearSystem.from_csv(tmp_path / "m.csv", tmp_path / "b.csv")
        np.testing.assert_array_equal(t.m, s.m)
        np.testing.assert_array_equal(t.b, s.b)


class TestBuildObjective:
    def test_identity(self):
        obs = build_objective(LinearSystem(np.eye(2), [1.0, 0.0]), 3)
        np.testing.assert_allclose(obs.a, np.diag([0.0, 0.875]), atol=1e-15)
        np.testing.assert_allclose(obs.eigenvalues, [0.0, 0.875], atol=1e-15)

    def test_diag_example(self):
        obs = build_objective(LinearSystem(np.diag([1.0, 2.0]), [0.0, 1.0]), 3)
        # unscaled A = diag(1, 0); scaling divides by s^2
        np.testing.assert_allclose(obs.a * obs.scale_factor**2, np.diag([1.0, 0.0]), atol=1e-14)
        np.testing.assert_allclose(np.abs(obs.null_vector), [0.0, 1.0], atol=1e-14)

    def test_random_16(self):
        s = random_instance(4, 0)
        obs = build_objective(s, required_pointer_qubits(s.kappa))
        w = obs.eigenvalues
        assert np.linalg.matrix_rank(obs.a, tol=1e-10 * w[-1]) == 15
        assert obs.null_space_dimension() == 1
        assert parallel(obs.null_vector, linalg.classical_solve(s.m, s.b), 1e-10)

    def test_spectrum_window(self):
        s = random_instance(3, 2)
        m = 9
        obs = build_objective(s, m)
        assert abs(obs.eigenvalues[0]) <= 1e-10 * obs.eigenvalues[-1]
        assert obs.eigenvalues[-1] == pytest.approx(1.0 - 2.0**-m, abs=1e-12)
        assert obs.lambda1 == obs.eigenvalues[1]
        assert np.all(obs.eigenvalues >= -1e-12)

    def test_resolution_warning(self):
        s = conditioned_instance(2, 8.0, 0)
        with pytest.warns(ResolutionWarning):
            build_objective(s, 3)

    def test_no_warning_with_enough_qubits(self, recwarn):
        s = conditioned_instance(2, 8.0, 0)
        build_objective(s, required_pointer_qubits(s.kappa))
        assert not [w for w in recwarn if issubclass(w.category, ResolutionWarning)]

    def test_rejects_bad_m(self):
        with pytest.raises(InvalidInputError):
            build_objective(random_instance(1, 0), 0)


class TestRequiredPointerQubits:
    @pytest.mark.parametrize("kappa, guard, expected", [(1.0, 0, 1), (4.0, 0, 4), (10.0, 2, 9), (2.0, 2, 4)])
    def test_examples(self, kappa, guard, expected):
        assert required_pointer_qubits(kappa, guard) == expected

    def test_default_guard(self):
        assert required_pointer_qubits(10.0) == 9

    def test_rejects_kappa_below_one(self):
        with pytest.raises(InvalidInputError):
            required_pointer_qubits(0.5)


class TestReconstruct:
    def test_identity(self):
        rec = reconstruct_solution([1.0, 0.0], LinearSystem(np.eye(2), [3.0, 0.0]))
        assert rec.z == pytest.approx(3.0)
        np.testing.assert_allclose(rec.x, [3.0, 0.0])
        assert rec.relative_residual == pytest.approx(0.0, abs=1e-15)

    def test_diag(self):
        s = LinearSystem(np.diag([1.0, 2.0]), [0.0, 1.0])
        rec = reconstruct_solution([0.0, 1.0], s)
        assert rec.z == pytest.approx(0.5)
        np.testing.assert_allclose(rec.x, [0.0, 0.5])
        np.testing.assert_allclose(s.m @ rec.x, s.b, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_state_recovers_solution(self, seed):
        s = random_instance(4, seed)
        x_ref = linalg.classical_solve(s.m, s.b)
        rec = reconstruct_solution(unit(x_ref), s)
        assert np.linalg.norm(rec.x - x_ref) <= 1e-8 * np.linalg.norm(x_ref)
        assert rec.imag_norm <= 1e-10 * np.linalg.norm(x_ref)

    def test_phase_invariance(self):
        s = random_instance(3, 4)
        y = unit(linalg.classical_solve(s.m, s.b) + 0.01)
        base = reconstruct_solution(y, s).x
        for phi in (0.3, 1.7, -2.9):
            np.testing.assert_allclose(reconstruct_solution(np.exp(1j * phi) * y, s).x, base, atol=1e-10)

    def test_uses_unscaled_matrix(self):
        s = random_instance(2, 3)
        obs = build_objective(s, 6)
        rec = reconstruct_solution(obs.null_vector, s)
        np.testing.assert_allclose(rec.x, linalg.classical_solve(s.m, s.b), rtol=1e-8)

    def test_vanishing_overlap(self):
        with pytest.raises(NonConvergenceError):
            reconstruct_solution([0.0, 1.0], LinearSystem(np.eye(2), [1.0, 0.0]))

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            reconstruct_solution([1.0, 0.0, 0.0], LinearSystem(np.eye(2), [1.0, 0.0]))


class TestGenerators:
    def test_deterministic(self):
        a, b = random_instance(4, 12, 50.0), random_instance(4, 12, 50.0)
        np.testing.assert_array_equal(a.m, b.m)
        np.testing.assert_array_equal(a.b, b.b)

    def test_shape_and_kappa(self):
        s = random_instance(4, 3, kappa_max=20.0)
        assert s.m.shape == (16, 16)
        assert s.kappa <= 20.0
        np.testing.assert_array_equal(s.m, s.m.T)

    def test_seed_sweep(self):
        for seed in range(100):
            s = random_instance(4, seed)
            assert np.abs(s.m - s.m.T).max() <= 1e-15
            assert np.isfinite(s.kappa) and s.kappa <= 100.0
            assert np.abs(s.m).max() <= 1.0 and np.abs(s.b).max() <= 1.0

    def test_conditioned_kappa(self):
        for kappa in (1.0, 8.0, 50.0):
            s = conditioned_instance(3, kappa, 2)
            assert s.kappa == pytest.approx(kappa, rel=1e-10)
            np.testing.assert_array_equal(s.m, s.m.T)

    def test_rejects_bad_n(self):
        with pytest.raises(InvalidInputError):
            random_instance(0, 0)
