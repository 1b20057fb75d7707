import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addlssvm import _accel
from addlssvm.kernels import (
    RBF,
    LINEAR,
    KernelEntry,
    KernelSpec,
    build_grams,
    eval_kernel,
    full_rbf_gram,
    kernel_vector,
    mixed_library,
)


class TestEvalKernel:
    def test_rbf_zero_distance_is_one(self):
        for sigma in (0.1, 1.0, 42.0):
            assert eval_kernel(KernelEntry(RBF, sigma), 0.3, 0.3) == 1.0

    def test_linear_is_product(self):
        assert eval_kernel(KernelEntry(LINEAR), 2.0, 3.0) == 6.0

    def test_rbf_unit_distance(self):
        got = eval_kernel(KernelEntry(RBF, 1.0), 0.0, 1.0)
        assert got == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_symmetry_and_range(self, rng):
        entry = KernelEntry(RBF, 0.7)
        for _ in range(50):
            u, v = rng.normal(size=2)
            k1, k2 = eval_kernel(entry, u, v), eval_kernel(entry, v, u)
            assert k1 == k2
            assert 0.0 < k1 <= 1.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelEntry(RBF, 1.0), np.nan, 0.0)
        with pytest.raises(ValueError):
            eval_kernel(KernelEntry(LINEAR), 1.0, np.inf)


class TestKernelSpec:
    def test_rbf_needs_positive_sigma(self):
        with pytest.raises(ValueError):
            KernelEntry(RBF, 0.0)
        with pytest.raises(ValueError):
            KernelEntry(RBF, None)

    def test_linear_takes_no_sigma(self):
        with pytest.raises(ValueError):
            KernelEntry(LINEAR, 1.0)

    def test_entry_count_must_match_inputs(self, rng):
        X = rng.random((3, 5))
        with pytest.raises(ValueError, match="entries"):
            build_grams(X, KernelSpec.shared_rbf(2, 0.5))

    def test_json_round_trip(self):
        spec = KernelSpec.from_families([RBF, LINEAR, RBF], 0.3)
        assert KernelSpec.from_json(spec.to_json()) == spec


class TestBuildGrams:
    def test_identical_points_give_diagonal_of_component_count(self):
        X = np.full((2, 4), 0.7)
        g = build_grams(X, KernelSpec.shared_rbf(2, 0.5))
        assert np.allclose(g.omega, 2.0)
        assert np.allclose(np.diag(g.omega), 2.0)

    def test_linear_outer_product(self):
        X = np.array([[1.0, 2.0, 3.0]])
        g = build_grams(X, KernelSpec.from_families([LINEAR], 0.5))
        expect = np.array([[1, 2, 3], [2, 4, 6], [3, 6, 9]], dtype=float)
        assert np.array_equal(g.omega, expect)

    def test_random_gram_symmetric_psd(self, rng):
        # independent check through an eigendecomposition
        X = rng.random((3, 6))
        g = build_grams(X, KernelSpec.shared_rbf(3, 0.4))
        assert np.allclose(g.omega, g.omega.T)
        assert np.linalg.eigvalsh(g.omega).min() >= -1e-8

    def test_sum_matches_componentwise_double_loop(self, rng):
        # the summed kernel equals evaluating the modified kernel directly
        X = rng.random((2, 7))
        spec = KernelSpec.from_families([RBF, LINEAR], 0.6)
        g = build_grams(X, spec)
        N = X.shape[1]
        direct = np.zeros((N, N))
        for k in range(N):
            for l in range(N):
                direct[k, l] = sum(
                    eval_kernel(spec.entries[d], X[d, k], X[d, l]) for d in range(2)
                )
        assert np.allclose(g.omega, direct, atol=1e-12)
        assert np.allclose(g.omega, sum(g.omegas), atol=0)

    def test_permutation_consistency(self, rng):
        X = rng.random((2, 8))
        spec = KernelSpec.shared_rbf(2, 0.5)
        perm = rng.permutation(8)
        g = build_grams(X, spec)
        gp = build_grams(X[:, perm], spec)
        assert np.allclose(gp.omega, g.omega[np.ix_(perm, perm)], atol=1e-14)

    def test_validation_blocks(self, rng):
        X = rng.random((2, 5))
        Xv = rng.random((2, 3))
        spec = KernelSpec.shared_rbf(2, 0.5)
        g = build_grams(X, spec, X_val=Xv)
        assert g.val_omegas.shape == (2, 3, 5)
        for d in range(2):
            for j in range(3):
                for k in range(5):
                    assert g.val_omegas[d, j, k] == pytest.approx(
                        eval_kernel(spec.entries[d], Xv[d, j], X[d, k]), abs=1e-14
                    )
        assert np.allclose(g.val_omega, g.val_omegas.sum(axis=0))

    def test_non_finite_rejected(self, rng):
        X = rng.random((2, 5))
        X[0, 0] = np.nan
        with pytest.raises(ValueError):
            build_grams(X, KernelSpec.shared_rbf(2, 0.5))

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=2, max_value=50),
        d=st.integers(min_value=1, max_value=4),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_component_grams_psd_property(self, n, d, seed):
        X = np.random.default_rng(seed).normal(size=(d, n))
        g = build_grams(X, KernelSpec.shared_rbf(d, 0.8))
        for k in range(d):
            assert np.linalg.eigvalsh(g.omegas[k]).min() >= -1e-8


class TestAccelBackends:
    @pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba backend disabled")
    def test_numba_matches_numpy(self, rng):
        X = rng.random((3, 40))
        Z = rng.random((3, 17))
        fams = np.array([0, 1, 0], dtype=np.int64)
        sigs = np.array([0.5, 1.0, 1.5])
        o1, t1 = _accel.component_grams(X, Z, fams, sigs)
        o2, t2 = _accel.component_grams_numpy(X, Z, fams, sigs)
        assert np.allclose(o1, o2, atol=1e-13)
        assert np.allclose(t1, t2, atol=1e-13)


class TestHelpers:
    def test_full_rbf_gram(self, rng):
        X = rng.random((4, 6))
        K = full_rbf_gram(X, 0.9)
        for i in range(6):
            for j in range(6):
                sq = float(((X[:, i] - X[:, j]) ** 2).sum())
                assert K[i, j] == pytest.approx(np.exp(-sq / 0.81), rel=1e-12)

    def test_kernel_vector_shape_mismatch(self, rng):
        X = rng.random((3, 5))
        spec = KernelSpec.shared_rbf(3, 0.5)
        with pytest.raises(ValueError, match="components"):
            kernel_vector(spec, X, np.zeros(2))

    def test_mixed_library_duplicates_inputs(self, rng):
        X = rng.random((3, 5))
        Xe, spec, labels = mixed_library(X, 0.4)
        assert Xe.shape == (6, 5)
        assert [e.family for e in spec.entries] == [RBF] * 3 + [LINEAR] * 3
        assert labels[0] == (RBF, 1) and labels[3] == (LINEAR, 1)
        assert np.array_equal(Xe[:3], X) and np.array_equal(Xe[3:], X)
