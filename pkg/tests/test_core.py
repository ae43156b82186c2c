import numpy as np
import pytest
from hypothesis import given, strategies as st

from csmdc.core import (
    GenConfig,
    Measurements,
    SensingMatrix,
    SparseSignal,
    coherence,
    derive_seed,
    gen_sensing_matrix,
    gen_sparse_signal,
    relative_distortion,
    sense,
)
from csmdc.errors import DegenerateMatrixError, DimensionMismatchError, InvalidConfigError


class TestSignalGeneration:
    def test_sparsity_at_reference_parameters(self):
        sig = gen_sparse_signal(GenConfig(n=256, k=10, sigma_x2=1.0, seed=1))
        assert np.count_nonzero(sig.theta) == 10
        assert np.array_equal(np.flatnonzero(sig.theta), sig.support)
        assert np.all(np.diff(sig.support) > 0)

    def test_empty_support_gives_zero_vector(self):
        sig = gen_sparse_signal(GenConfig(n=4, k=0, sigma_x2=2.0, seed=99))
        assert np.all(sig.theta == 0.0)
        assert sig.support.size == 0

    def test_full_support_forced(self):
        sig = gen_sparse_signal(GenConfig(n=8, k=8, sigma_x2=1.0, seed=7))
        assert np.array_equal(sig.support, np.arange(8))

    def test_k_greater_than_n_rejected(self):
        with pytest.raises(InvalidConfigError):
            GenConfig(n=4, k=5, sigma_x2=1.0, seed=0)

    def test_deterministic(self):
        a = gen_sparse_signal(GenConfig(n=64, k=5, sigma_x2=1.0, seed=3))
        b = gen_sparse_signal(GenConfig(n=64, k=5, sigma_x2=1.0, seed=3))
        assert np.array_equal(a.theta, b.theta)

    def test_nonzero_variance_tracks_config(self):
        # pooled over many draws the sample variance must approach sigma_x2
        values = np.concatenate(
            [
                gen_sparse_signal(GenConfig(n=64, k=32, sigma_x2=4.0, seed=s)).theta
                for s in range(40)
            ]
        )
        nonzero = values[values != 0.0]
        assert abs(nonzero.var() - 4.0) / 4.0 < 0.15


class TestSensingMatrix:
    def test_entry_variance_near_reciprocal_m(self):
        phi = gen_sensing_matrix(50, 256, seed=3)
        sample_var = phi.entries.var()
        assert abs(sample_var - 1.0 / 50) / (1.0 / 50) < 0.10

    def test_single_entry_matrix(self):
        phi = gen_sensing_matrix(1, 1, seed=0)
        assert phi.entries.shape == (1, 1)
        assert np.isfinite(phi.entries[0, 0])

    def test_bit_identical_regeneration(self):
        a = gen_sensing_matrix(50, 256, seed=3)
        b = gen_sensing_matrix(50, 256, seed=3)
        assert np.array_equal(a.entries, b.entries)

    def test_column_norm_concentration(self):
        # Gaussian concentration sanity check: squared column norms live in
        # [0.5, 1.5] with overwhelming frequency once m is large enough
        in_range = 0
        total = 0
        for seed in range(1000):
            phi = gen_sensing_matrix(100, 16, seed=seed)
            sq = np.sum(phi.entries**2, axis=0)
            in_range += int(np.count_nonzero((sq >= 0.5) & (sq <= 1.5)))
            total += sq.size
        assert in_range / total >= 0.99

    def test_size_validation(self):
        with pytest.raises(InvalidConfigError):
            gen_sensing_matrix(0, 4, seed=1)


class TestSense:
    def test_scalar_product(self):
        phi = SensingMatrix(m=1, n=1, seed=0, entries=np.array([[2.0]]))
        x = SparseSignal(n=1, k=1, support=np.array([0]), theta=np.array([3.0]))
        assert sense(phi, x).y[0] == pytest.approx(6.0)

    def test_zero_signal_maps_to_zero(self):
        phi = gen_sensing_matrix(5, 16, seed=2)
        x = gen_sparse_signal(GenConfig(n=16, k=0, sigma_x2=1.0, seed=0))
        assert np.all(sense(phi, x).y == 0.0)

    def test_operator_norm_bound(self):
        # independent oracle: the largest singular value bounds the gain
        phi = gen_sensing_matrix(20, 64, seed=11)
        x = gen_sparse_signal(GenConfig(n=64, k=6, sigma_x2=1.0, seed=12))
        sigma_max = np.linalg.svd(phi.entries, compute_uv=False)[0]
        y = sense(phi, x)
        assert np.linalg.norm(y.y) <= sigma_max * np.linalg.norm(x.theta) + 1e-12

    def test_dimension_mismatch(self):
        phi = gen_sensing_matrix(5, 16, seed=2)
        x = gen_sparse_signal(GenConfig(n=8, k=2, sigma_x2=1.0, seed=0))
        with pytest.raises(DimensionMismatchError):
            sense(phi, x)


def _brute_force_coherence(entries: np.ndarray) -> float:
    worst = 0.0
    n = entries.shape[1]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ci, cj = entries[:, i], entries[:, j]
            val = abs(ci @ cj) / (np.linalg.norm(ci) * np.linalg.norm(cj))
            worst = max(worst, val)
    return worst


class TestCoherence:
    def test_orthonormal_columns(self):
        phi = SensingMatrix(m=4, n=4, seed=0, entries=np.eye(4))
        assert coherence(phi) == pytest.approx(0.0)

    def test_duplicated_column(self):
        entries = np.random.default_rng(0).normal(size=(5, 3))
        entries[:, 2] = entries[:, 0]
        phi = SensingMatrix(m=5, n=3, seed=0, entries=entries)
        assert coherence(phi) == pytest.approx(1.0)

    def test_matches_brute_force_scan(self):
        entries = np.random.default_rng(5).normal(size=(3, 4))
        phi = SensingMatrix(m=3, n=4, seed=0, entries=entries)
        assert coherence(phi) == pytest.approx(_brute_force_coherence(entries), abs=1e-12)

    def test_zero_column_rejected(self):
        entries = np.ones((3, 3))
        entries[:, 1] = 0.0
        with pytest.raises(DegenerateMatrixError):
            coherence(SensingMatrix(m=3, n=3, seed=0, entries=entries))

    def test_in_unit_interval(self):
        phi = gen_sensing_matrix(30, 60, seed=4)
        assert 0.0 <= coherence(phi) <= 1.0


class TestRelativeDistortion:
    def test_exact_reconstruction(self):
        x = np.array([1.0, -2.0, 3.0])
        assert relative_distortion(x, x) == 0.0

    def test_zero_reconstruction(self):
        assert relative_distortion(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(1.0)

    def test_hand_computed_quotient(self):
        assert relative_distortion(np.array([3.0, 4.0]), np.array([3.0, 0.0])) == pytest.approx(0.8)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            relative_distortion(np.zeros(3), np.ones(3))

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=8),
        st.floats(min_value=0.01, max_value=50.0),
        st.booleans(),
    )
    def test_scale_invariance(self, values, alpha, negate):
        x = np.asarray(values) + 1.0  # keep the reference away from zero
        x_hat = np.asarray(values[::-1])
        a = -alpha if negate else alpha
        rd1 = relative_distortion(x, x_hat)
        rd2 = relative_distortion(a * x, a * x_hat)
        assert rd2 == pytest.approx(rd1, rel=1e-12, abs=1e-12)


class TestSeedDerivation:
    def test_pure_function(self):
        assert derive_seed(42, 7, 1) == derive_seed(42, 7, 1)

    def test_streams_differ(self):
        seeds = {derive_seed(42, t, p) for t in range(4) for p in range(4)}
        assert len(seeds) == 16

    def test_measurements_length_checked(self):
        with pytest.raises(DimensionMismatchError):
            Measurements(y=np.zeros(3), matrix_seed=0, m=4, n=8)
