import numpy as np
import pytest

from stablespline import (
    ConfigError,
    NumericError,
    KernelOrder,
    KernelSpec,
    build_kernel,
    kernel_factor,
    kernel_quadratic_form,
)
from stablespline.kernels import JITTER_BASE, JITTER_MAX


class TestBuildKernel:
    def test_first_order_entries(self):
        K = build_kernel(KernelSpec("first", 0.5, 2)).K
        assert np.array_equal(K, [[0.5, 0.25], [0.25, 0.25]])

    def test_first_order_beta_zero_is_zero_matrix(self):
        K = build_kernel(KernelSpec("first", 0.0, 5)).K
        assert np.array_equal(K, np.zeros((5, 5)))

    def test_second_order_beta_near_one_limit(self):
        K = build_kernel(KernelSpec("second", 1.0 - 1e-9, 5)).K
        assert np.allclose(K, 1.0 / 3.0, atol=1e-7)

    def test_second_order_formula(self):
        beta, n = 0.7, 4
        K = build_kernel(KernelSpec("second", beta, n)).K
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                m = max(i, j)
                expected = beta ** (i + j) * beta**m / 2.0 - beta ** (3 * m) / 6.0
                assert K[i - 1, j - 1] == pytest.approx(expected, rel=1e-15)

    def test_symmetry_bitwise(self):
        for order in ("first", "second"):
            K = build_kernel(KernelSpec(order, 0.83, 17)).K
            assert np.array_equal(K, K.T)

    def test_rejects_beta_out_of_range(self):
        with pytest.raises(ConfigError):
            KernelSpec("first", 1.0, 3)
        with pytest.raises(ConfigError):
            KernelSpec("first", -0.1, 3)

    def test_first_order_diagonal_strictly_decreasing(self):
        K = build_kernel(KernelSpec("first", 0.9, 30)).K
        d = np.diag(K)
        assert np.all(np.diff(d) < 0)

    def test_psd_property_200_random_specs(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            order = KernelOrder.FIRST if rng.random() < 0.5 else KernelOrder.SECOND
            beta = rng.uniform(0.01, 0.99)
            n = int(rng.integers(1, 61))
            K = build_kernel(KernelSpec(order, beta, n)).K
            floor = -1e-10 * np.trace(K) / n
            assert np.linalg.eigvalsh(K).min() >= floor

    def test_second_order_entries_nonnegative(self):
        for beta in np.linspace(0.0, 0.99, 34):
            K = build_kernel(KernelSpec("second", beta, 25)).K
            assert np.all(K >= 0.0)


class TestKernelFactor:
    def test_diagonal_matrix(self):
        d = np.array([4.0, 9.0, 0.25])
        L = kernel_factor(np.diag(d))
        eps_max = JITTER_MAX * d.sum() / 3
        assert np.allclose(L, np.diag(np.sqrt(d)), atol=np.sqrt(eps_max))
        assert np.all(np.triu(L, 1) == 0.0)

    def test_reconstruction_within_jitter(self):
        K = build_kernel(KernelSpec("second", 0.6, 40)).K
        L = kernel_factor(K)
        eps_max = JITTER_MAX * np.trace(K) / 40
        dev = np.abs(L @ L.T - K).max()
        assert dev <= eps_max + 1e-12 * np.linalg.norm(K)

    def test_first_order_large_n_strictly_pd(self):
        # first-order kernel is strictly PD for 0 < beta < 1, so the base
        # jitter suffices: the plain Cholesky already succeeds
        K = build_kernel(KernelSpec("first", 0.9, 50)).K
        np.linalg.cholesky(K)
        L = kernel_factor(K)
        eps_base = JITTER_BASE * np.trace(K) / 50
        assert np.abs(L @ L.T - K).max() <= eps_base + 1e-12 * np.linalg.norm(K)

    def test_degenerate_kernel_errors(self):
        K = build_kernel(KernelSpec("first", 0.0, 4))
        with pytest.raises(NumericError):
            kernel_factor(K)
        with pytest.raises(NumericError):
            kernel_quadratic_form(K, np.ones(4))


class TestKernelQuadraticForm:
    def test_identity_injection(self):
        assert kernel_quadratic_form(np.eye(2), [3.0, 4.0]) == pytest.approx(25.0)

    def test_zero_vector(self):
        K = build_kernel(KernelSpec("first", 0.5, 3))
        assert kernel_quadratic_form(K, np.zeros(3)) == 0.0

    def test_matches_dense_solve_oracle(self):
        K = build_kernel(KernelSpec("first", 0.5, 2))
        g = np.array([1.0, 1.0])
        x = np.linalg.solve(K.K, g)
        assert kernel_quadratic_form(K, g) == pytest.approx(float(g @ x), rel=1e-10)

    def test_dense_oracle_random_specs(self):
        # restricted to well-conditioned kernels: for near-singular K the
        # jitter ladder intentionally departs from the bare inverse
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 16))
            beta = rng.uniform(0.55, 0.95)
            K = build_kernel(KernelSpec("first", beta, n))
            g = rng.standard_normal(n)
            oracle = float(g @ np.linalg.solve(K.K, g))
            assert kernel_quadratic_form(K, g) == pytest.approx(oracle, rel=1e-8)

    def test_nonnegative(self):
        rng = np.random.default_rng(12)
        K = build_kernel(KernelSpec("second", 0.85, 12))
        for _ in range(50):
            assert kernel_quadratic_form(K, rng.standard_normal(12)) >= 0.0
