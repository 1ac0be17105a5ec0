import numpy as np
import pytest
import scipy.linalg

from mtsolver import linalg
from mtsolver.errors import InvalidInputError, SingularMatrixError


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


class TestHermitianEig:
    def test_diagonal(self):
        spec = linalg.hermitian_eig(np.diag([0.0, 1.0]))
        np.testing.assert_allclose(spec.eigenvalues, [0.0, 1.0])
        np.testing.assert_allclose(spec.eigenvectors, np.eye(2), atol=1e-15)

    def test_rank_one(self):
        spec = linalg.hermitian_eig([[1.0, 1.0], [1.0, 1.0]])
        np.testing.assert_allclose(spec.eigenvalues, [0.0, 2.0], atol=1e-14)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(spec.eigenvectors), [[s, s], [s, s]], atol=1e-14)

    def test_reconstruction_16(self):
        a = random_hermitian(16, 3)
        spec = linalg.hermitian_eig(a)
        assert np.linalg.norm(spec.reconstruct() - a) <= 1e-9 * np.linalg.norm(a)
        v = spec.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(16), atol=1e-12)
        assert np.all(np.diff(spec.eigenvalues) >= 0)

    def test_phase_convention(self):
        spec = linalg.hermitian_eig(random_hermitian(8, 5))
        for col in spec.eigenvectors.T:
            pivot = col[np.argmax(np.abs(col))]
            assert abs(pivot.imag) < 1e-14 and pivot.real > 0

    def test_degenerate_ordering_is_deterministic(self):
        a = np.diag([1.0, 1.0, 2.0, 1.0])
        first = linalg.hermitian_eig(a)
        second = linalg.hermitian_eig(a.copy())
        np.testing.assert_array_equal(first.eigenvectors, second.eigenvectors)
        np.testing.assert_allclose(first.eigenvalues, [1, 1, 1, 2])
        # ties sorted lexicographically on the entries
        keys = [tuple(np.round(first.eigenvectors[:, j].real, 12)) for j in range(3)]
        assert keys == sorted(keys)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            linalg.hermitian_eig([[0.0, 1.0], [0.0, 0.0]])

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            linalg.hermitian_eig(np.zeros((2, 3)))


class TestConditionNumber:
    def test_identity(self):
        assert linalg.condition_number(np.eye(4)) == pytest.approx(1.0, abs=1e-14)

    def test_diag(self):
        assert linalg.condition_number(np.diag([1.0, 2.0])) == pytest.approx(2.0, rel=1e-14)

    def test_matches_gram_eigenvalue_oracle(self):
        rng = np.random.default_rng(11)
        m = rng.uniform(-1, 1, (16, 16))
        # singular values from the eigenvalues of M^T M, independent of the SVD routine
        gram = np.linalg.eigvalsh(m.T @ m)
        oracle = np.sqrt(gram[-1] / gram[0])
        assert linalg.condition_number(m) == pytest.approx(oracle, rel=1e-8)

    def test_scale_invariance(self):
        m = np.random.default_rng(2).standard_normal((8, 8))
        assert linalg.condition_number(-37.5 * m) == pytest.approx(linalg.condition_number(m), rel=1e-10)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            linalg.condition_number([[1.0, 2.0], [2.0, 4.0]])


class TestUnitaryExp:
    def test_zero(self):
        np.testing.assert_allclose(linalg.unitary_exp(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_half_phase(self):
        np.testing.assert_allclose(linalg.unitary_exp(np.diag([0.0, 0.5])), np.diag([1.0, -1.0]), atol=1e-14)

    def test_unitary(self):
        u = linalg.unitary_exp(random_hermitian(4, 8))
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-10)

    def test_commutes(self):
        a = random_hermitian(6, 9)
        u = linalg.unitary_exp(a)
        assert np.linalg.norm(u @ a - a @ u) <= 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_pade_agrees(self, seed):
        a = random_hermitian(8, seed)
        spectral = linalg.unitary_exp(a)
        pade = linalg.unitary_exp(a, method="pade")
        assert np.abs(spectral - pade).max() <= 1e-8
        np.testing.assert_allclose(spectral, scipy.linalg.expm(2j * np.pi * a), atol=1e-8)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            linalg.unitary_exp([[0.0, 1.0], [0.0, 0.0]])

    def test_unknown_method(self):
        with pytest.raises(InvalidInputError):
            linalg.unitary_exp(np.eye(2), method="taylor")


class TestClassicalSolve:
    def test_identity(self):
        np.testing.assert_array_equal(linalg.classical_solve(np.eye(4), [1.0, 0, 0, 0]), [1, 0, 0, 0])

    def test_diag(self):
        np.testing.assert_allclose(linalg.classical_solve(np.diag([1.0, 2.0]), np.array([0.0, 1.0])), [0.0, 0.5])

    def test_residual_16(self):
        rng = np.random.default_rng(4)
        m = rng.uniform(-1, 1, (16, 16))
        b = rng.uniform(-1, 1, 16)
        x = linalg.classical_solve(m, b)
        assert x.dtype == float
        assert np.linalg.norm(m @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            linalg.classical_solve(np.zeros((2, 2)), np.ones(2))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            linalg.classical_solve(np.eye(2), np.ones(3))


class TestCsv:
    def test_round_trip(self, tmp_path):
        m = np.random.default_rng(0).uniform(-1, 1, (4, 4))
        linalg.save_csv_matrix(tmp_path / "m.csv", m)
        np.testing.assert_array_equal(linalg.load_csv_matrix(tmp_path / "m.csv"), m)

    def test_rejects_complex(self, tmp_path):
        (tmp_path / "c.csv").write_text("1+2j,0\n0,1\n")
        with pytest.raises(InvalidInputError):
            linalg.load_csv_matrix(tmp_path / "c.csv")

    def test_rejects_ragged(self, tmp_path):
        (tmp_path / "r.csv").write_text("1,0\n0\n")
        with pytest.raises(InvalidInputError):
            linalg.load_csv_matrix(tmp_path / "r.csv")
