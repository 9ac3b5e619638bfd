import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rolloutid.errors import IncompleteDatasetError, LengthOrderError, UnderExcitationError
from rolloutid.estimators import (
    assemble_data_matrices,
    error_decomposition_check,
    ols_final_sample,
    ols_full,
    ols_unequal_length,
    toeplitz_block,
)
from rolloutid.lti import NoiseConfig, Rollout, RolloutDataset, SystemModel, simulate_dataset, true_markov
from rolloutid.numerics import spectral_norm

NOISY = NoiseConfig(sigma_u=1.0, sigma_w=0.2, sigma_v=0.5)
QUIET = NoiseConfig(sigma_u=1.0)


def test_toeplitz_examples():
    u = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(toeplitz_block(u, 3), [[1, 2, 3], [0, 1, 2], [0, 0, 1]])
    np.testing.assert_array_equal(toeplitz_block(u, 2), [[1, 2, 3], [0, 1, 2]])


def test_zero_noise_gives_zero_W_V(unstable):
    dm = assemble_data_matrices(simulate_dataset(unstable, QUIET, 3, 5, seed=0), 5)
    assert np.all(dm.W == 0) and np.all(dm.V == 0)
    assert dm.X0 is None


def test_length_order(newton):
    ds = simulate_dataset(newton, QUIET, 3, 5)
    with pytest.raises(LengthOrderError):
        assemble_data_matrices(ds, 6)


@pytest.mark.parametrize("which", ["newton", "unstable"])
def test_noiseless_recovery(which, request):
    sys = request.getfixturevalue(which)
    G = true_markov(sys, 10)
    full = ols_full(assemble_data_matrices(simulate_dataset(sys, QUIET, 50, 10, seed=1), 10), G)
    assert full.spectral_error <= 1e-8
    assert full.method_tag == "full"
    final = ols_final_sample(simulate_dataset(sys, QUIET, 200, 10, seed=2), G)
    assert final.spectral_error <= 1e-8
    assert final.method_tag == "final_sample"


def test_single_rollout_triangular_solve():
    sys = SystemModel.from_matrices([[0.5]], [[2.0]], [[3.0]], [[1.0]])
    u = np.array([[1.0, 0.0]])
    y = np.array([[1.0, 6.0]])  # [D u0, CB u0]
    ds = RolloutDataset([Rollout(u, y, None, None, np.zeros(1))])
    res = ols_full(assemble_data_matrices(ds, 2))
    np.testing.assert_allclose(res.G_hat.block_row, [[1.0, 6.0]], atol=1e-14)
    np.testing.assert_allclose(res.G_hat.block_row, true_markov(sys, 2).block_row, atol=1e-14)


def test_final_sample_under_excited(newton):
    ds = simulate_dataset(newton, QUIET, 9, 10)
    with pytest.raises(UnderExcitationError):
        ols_final_sample(ds)


def test_degenerate_inputs_under_excited(newton):
    rs = [Rollout(np.zeros((1, 4)), np.zeros((1, 4)), None, None, np.zeros(2)) for _ in range(5)]
    with pytest.raises(UnderExcitationError):
        ols_full(assemble_data_matrices(RolloutDataset(rs), 4))


def test_result_invariants(unstable):
    res = ols_full(assemble_data_matrices(simulate_dataset(unstable, NOISY, 60, 8, seed=4), 8), true_markov(unstable, 8))
    assert res.spectral_error >= 0 and res.min_eig_UUT > 0
    G = true_markov(unstable, 8).block_row
    assert res.normalized_error == pytest.approx(res.spectral_error / spectral_norm(G))


@pytest.mark.parametrize("which", ["newton", "unstable"])
@pytest.mark.parametrize("T1", [10, 6])
@pytest.mark.parametrize("sigma_0", [0.0, 1.0])
def test_error_decomposition(which, T1, sigma_0, request):
    sys = request.getfixturevalue(which)
    noise = NoiseConfig(1.0, 0.2, 0.5, sigma_0)
    ds = simulate_dataset(sys, noise, 100, 10, seed=5)
    dm = assemble_data_matrices(ds, T1)
    res = ols_full(dm)
    scale = max(1.0, spectral_norm(true_markov(sys, T1).block_row))
    assert error_decomposition_check(dm, sys, res.G_hat) <= 1e-8 * scale


def test_decomposition_zero_when_noiseless(newton):
    dm = assemble_data_matrices(simulate_dataset(newton, QUIET, 30, 6), 6)
    assert error_decomposition_check(dm, newton, ols_full(dm).G_hat) <= 1e-12


def test_decomposition_needs_noise_records(newton):
    ds = simulate_dataset(newton, QUIET, 30, 6)
    stripped = RolloutDataset([Rollout(r.inputs, r.outputs, None, None, r.initial_state) for r in ds.rollouts])
    dm = assemble_data_matrices(stripped, 6)
    with pytest.raises(IncompleteDatasetError):
        error_decomposition_check(dm, newton, ols_full(dm).G_hat)


def test_equal_length_paths_identical(unstable):
    ds = simulate_dataset(unstable, NOISY, 40, 7, seed=9)
    a = ols_full(assemble_data_matrices(ds, 7)).G_hat.block_row
    b = ols_unequal_length(ds, 7).G_hat.block_row
    np.testing.assert_array_equal(a, b)


def test_unequal_length_tag(unstable):
    res = ols_unequal_length(simulate_dataset(unstable, NOISY, 40, 9, seed=1), 5)
    assert res.method_tag == "unequal_length"
    assert res.G_hat.horizon == 5


def test_consistency_in_N(newton):
    def mean_err(N, method):
        G = true_markov(newton, 10)
        errs = []
        for s in range(20):
            ds = simulate_dataset(newton, NOISY, N, 10, seed=1000 + s)
            if method == "full":
                errs.append(ols_full(assemble_data_matrices(ds, 10), G).spectral_error)
            else:
                errs.append(ols_final_sample(ds, G).spectral_error)
        return np.mean(errs)

    for method in ("full", "final"):
        assert mean_err(500, method) < mean_err(50, method)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 5), st.integers(0, 3))
def test_toeplitz_structure(seed, m, T1, extra):
    T2 = T1 + extra
    sig = np.random.default_rng(seed).standard_normal((m, T2))
    blk = toeplitz_block(sig, T1)
    assert blk.shape == (m * T1, T2)
    for j in range(T1):
        for k in range(T2):
            want = sig[:, k - j] if k >= j else np.zeros(m)
            np.testing.assert_array_equal(blk[j * m : (j + 1) * m, k], want)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(0, 2))
def test_data_matrix_structure(seed, T1, extra):
    T2 = T1 + extra
    sys = SystemModel.from_matrices([[0.5, 0.1], [0.0, 0.3]], [[1.0], [0.5]], [[1.0, 0.0]])
    ds = simulate_dataset(sys, NoiseConfig(1, 0.1, 0.1, 1.0), 3, T2, seed=seed)
    dm = assemble_data_matrices(ds, T1)
    for i, r in enumerate(ds.rollouts):
        cols = slice(i * T2, (i + 1) * T2)
        np.testing.assert_array_equal(dm.U[:, cols], toeplitz_block(r.inputs, T1))
        np.testing.assert_array_equal(dm.W[:, cols], toeplitz_block(r.process_noise, T1))
        np.testing.assert_array_equal(dm.X0[:, cols], np.kron(np.eye(T2), r.initial_state.reshape(-1, 1)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ols_perturbation_optimality(seed):
    sys = SystemModel.from_matrices([[0.5, 0.1], [0.0, 0.3]], [[1.0], [0.5]], [[1.0, 0.0]])
    ds = simulate_dataset(sys, NOISY, 8, 4, seed=seed)
    dm = assemble_data_matrices(ds, 4)
    G_hat = ols_full(dm).G_hat.block_row
    base = np.sum((dm.Y - G_hat @ dm.U) ** 2)
    r = np.random.default_rng(seed)
    for _ in range(100):
        d = r.standard_normal(G_hat.shape)
        d /= np.linalg.norm(d)
        assert np.sum((dm.Y - (G_hat + 1e-4 * d) @ dm.U) ** 2) >= base - 1e-12 * max(1, base)
