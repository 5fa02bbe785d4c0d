import numpy as np
import pytest

from sketchkit.calibration import SingularHessianError, build_hessian, synth_calibration
from sketchkit.numerics import make_rng


def test_identity_calibration():
    hf = build_hessian(np.eye(2), damp=0)
    np.testing.assert_array_equal(hf.h, 2 * np.eye(2))
    np.testing.assert_allclose(hf.h_inv, 0.5 * np.eye(2), atol=1e-15)
    np.testing.assert_allclose(hf.inv_diag, [0.5, 0.5], atol=1e-15)


def test_two_by_two_direct():
    x = np.array([[1.0, 1.0], [1.0, -1.0]])
    hf = build_hessian(x, damp=0)
    np.testing.assert_allclose(hf.h, 2 * x @ x.T)
    np.testing.assert_allclose(hf.h, [[4, 0], [0, 4]])
    np.testing.assert_allclose(hf.h_inv, 0.25 * np.eye(2), atol=1e-15)


def test_zero_row_needs_dampening():
    x = np.array([[1.0, 2.0, 0.5], [0.0, 0.0, 0.0], [0.3, -1.0, 2.0]])
    hf = build_hessian(x, damp=0.01)
    assert np.all(hf.inv_diag > 0)
    with pytest.raises(SingularHessianError, match="increase dampening"):
        build_hessian(x, damp=0)


def test_dampening_form():
    x = make_rng(0).standard_normal((5, 3))
    hf = build_hessian(x, damp=0.1)
    base = 2 * x @ x.T
    np.testing.assert_allclose(hf.h, base + 0.1 * np.mean(np.diag(base)) * np.eye(5))


def test_factor_consistency():
    hf = build_hessian(make_rng(1).standard_normal((16, 64)))
    u = hf.chol_upper
    assert np.allclose(np.tril(u, -1), 0)
    assert np.linalg.norm(u.T @ u - hf.h_inv) / np.linalg.norm(hf.h_inv) < 1e-8
    np.testing.assert_allclose(hf.h, hf.h.T)
    np.testing.assert_array_equal(hf.inv_diag, np.diag(hf.h_inv))


@pytest.mark.parametrize("seed", range(10))
def test_positive_inverse_diagonal_with_damp(seed):
    rng = make_rng(seed)
    c, m = int(rng.integers(1, 20)), int(rng.integers(1, 20))
    hf = build_hessian(rng.standard_normal((c, m)), damp=0.01)
    assert np.all(hf.inv_diag > 0)


def test_scaling():
    x = make_rng(2).standard_normal((6, 30))
    gamma = 3.0
    a, b = build_hessian(x, 0.01), build_hessian(gamma * x, 0.01)
    np.testing.assert_allclose(b.h, gamma ** 2 * a.h, rtol=1e-12)
    np.testing.assert_allclose(b.h_inv, a.h_inv / gamma ** 2, rtol=1e-9, atol=1e-15)


def test_identity_has_diagonal_factor():
    hf = build_hessian(np.eye(8))
    u = hf.chol_upper
    assert np.array_equal(u - np.diag(np.diag(u)), np.zeros((8, 8)))


def test_negative_damp_rejected():
    with pytest.raises(ValueError):
        build_hessian(np.eye(2), damp=-1)


class TestSynthetic:
    def test_deterministic(self):
        a = synth_calibration(4, 8, make_rng(7))
        b = synth_calibration(4, 8, make_rng(7))
        assert np.array_equal(a, b)

    def test_gaussian_covariance(self):
        x = synth_calibration(4, 100_000, make_rng(8))
        cov = x @ x.T / x.shape[1]
        assert np.max(np.abs(cov - np.eye(4))) < 0.05

    def test_heavy_tail_column_outliers(self):
        x = synth_calibration(16, 200, make_rng(9), "heavy_tail")
        norms = np.linalg.norm(x, axis=0)
        assert norms.max() / np.median(norms) >= 5

    def test_unknown_distribution(self):
        with pytest.raises(ValueError):
            synth_calibration(2, 2, make_rng(0), "uniform")
