"""Least-squares estimators of Markov parameters from multi-rollout data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IncompleteDatasetError,
    InvalidInputError,
    LengthOrderError,
    RankDeficiencyError,
    UnderExcitationError,
)
from .lti import (
    MarkovMatrix,
    RolloutDataset,
    SystemModel,
    init_state_markov_H,
    noise_markov_F,
    true_markov,
)
from .numerics import min_eigenvalue_sym, right_pseudo_inverse, spectral_norm

EXCITATION_RTOL = 1e-12
METHODS = ("full", "final_sample", "unequal_length")


def toeplitz_block(signal: np.ndarray, T1: int) -> np.ndarray:
    """Upper-triangular block Toeplitz matrix of a ``(k, T2)`` signal.

    Block ``(j, t)`` is ``signal[:, t - j]`` for ``t >= j`` and zero
    otherwise; the result is ``(k * T1, T2)``.
    """
    k, T2 = signal.shape
    out = np.zeros((T1, k, T2))
    for j in range(T1):
        out[j, :, j:] = signal[:, : T2 - j]
    return out.reshape(T1 * k, T2)


@dataclass(eq=False)
class DataMatrices:
    Y: np.ndarray
    U: np.ndarray
    W: np.ndarray | None
    V: np.ndarray | None
    X0: np.ndarray | None
    T1: int
    T2: int
    N: int
    sigma_u: float
    # Raw per-rollout records, shape (N, channels, T2), kept for residual checks.
    inputs: np.ndarray
    process_noise: np.ndarray | None
    initial_states: np.ndarray


@dataclass(eq=False)
class EstimationResult:
    G_hat: MarkovMatrix
    min_eig_UUT: float
    method_tag: str
    N: int
    T1: int
    T2: int
    spectral_error: float | None = None
    normalized_error: float | None = None

    def with_truth(self, G: MarkovMatrix) -> "EstimationResult":
        if G.block_row.shape != self.G_hat.block_row.shape:
            raise InvalidInputError(
                f"truth shape {G.block_row.shape} != estimate shape "
                f"{self.G_hat.block_row.shape}"
            )
        err = spectral_norm(self.G_hat.block_row - G.block_row)
        ref = spectral_norm(G.block_row)
        self.spectral_error = err
        self.normalized_error = err / ref if ref > 0 else float("nan")
        return self

    def summary(self) -> dict:
        return {
            "method_tag": self.method_tag,
            "N": self.N,
            "T1": self.T1,
            "T2": self.T2,
            "spectral_error": self.spectral_error,
            "normalized_error": self.normalized_error,
            "min_eig_UUT": self.min_eig_UUT,
        }


def assemble_data_matrices(ds: RolloutDataset, T1: int) -> DataMatrices:
    T2 = ds.T2
    if int(T1) != T1 or T1 < 1:
        raise InvalidInputError(f"T1 must be a positive integer, got {T1}")
    T1 = int(T1)
    if T1 > T2:
        raise LengthOrderError(f"T1={T1} exceeds the rollout length T2={T2}")

    rs = ds.rollouts
    inputs = np.stack([r.inputs for r in rs])
    Y = np.hstack([r.outputs for r in rs])
    U = np.hstack([toeplitz_block(r.inputs, T1) for r in rs])
    W = V = w_raw = None
    if ds.has_noise_records:
        w_raw = np.stack([r.process_noise for r in rs])
        W = np.hstack([toeplitz_block(r.process_noise, T1) for r in rs])
        V = np.hstack([r.measurement_noise for r in rs])
    x0s = np.stack([r.initial_state for r in rs])
    X0 = None
    if np.any(x0s != 0):
        eye = np.eye(T2)
        X0 = np.hstack([np.kron(eye, x.reshape(-1, 1)) for x in x0s])
    sigma_u = ds.noise.sigma_u
    if sigma_u <= 0:
        sigma_u = float(np.sqrt(np.mean(inputs**2)))
    return DataMatrices(Y, U, W, V, X0, T1, T2, ds.N, sigma_u, inputs, w_raw, x0s)


def _solve(Y: np.ndarray, U: np.ndarray, sigma_u: float, N: int, what: str):
    rows = U.shape[0]
    if U.shape[1] < rows:
        raise UnderExcitationError(
            f"{what}: {U.shape[1]} regression columns for {rows} unknowns; "
            f"need at least {rows} independently excited columns",
            required=rows,
        )
    lam = min_eigenvalue_sym(U @ U.T)
    cutoff = sigma_u**2 * N * EXCITATION_RTOL
    if lam <= cutoff:
        raise UnderExcitationError(
            f"{what}: lambda_min(UU^T) = {lam:.3e} <= {cutoff:.3e}; the inputs "
            f"do not excite all {rows} regressor directions",
            required=rows,
        )
    try:
        return Y @ right_pseudo_inverse(U), lam
    except RankDeficiencyError as exc:
        raise UnderExcitationError(str(exc), exc.condition, required=rows) from exc


def ols_full(dm: DataMatrices, truth: MarkovMatrix | None = None) -> EstimationResult:
    """``G_hat = Y U^+`` using every sample of every rollout.

    With ``dm.T1 < dm.T2`` this is the unequal-length estimator.
    """
    m = dm.inputs.shape[1]
    G_row, lam = _solve(dm.Y, dm.U, dm.sigma_u, dm.N, "OLS")
    tag = "full" if dm.T1 == dm.T2 else "unequal_length"
    res = EstimationResult(MarkovMatrix(G_row, m, dm.T1), lam, tag, dm.N, dm.T1, dm.T2)
    return res.with_truth(truth) if truth is not None else res


def ols_unequal_length(ds: RolloutDataset, T1: int, truth: MarkovMatrix | None = None):
    return ols_full(assemble_data_matrices(ds, T1), truth)


def ols_final_sample(ds: RolloutDataset, truth: MarkovMatrix | None = None) -> EstimationResult:
    """Regress the last output of each rollout on its reversed input history."""
    T = ds.T2
    m = ds.rollouts[0].inputs.shape[0]
    Yf = np.column_stack([r.outputs[:, -1] for r in ds.rollouts])
    Ubar = np.column_stack([r.inputs[:, ::-1].T.ravel() for r in ds.rollouts])
    if ds.N < m * T:
        raise UnderExcitationError(
            f"final-sample OLS needs N >= m*T = {m * T} rollouts, got {ds.N}",
            required=m * T,
        )
    sigma_u = ds.noise.sigma_u if ds.noise.sigma_u > 0 else float(np.sqrt(np.mean(Ubar**2)))
    G_row, lam = _solve(Yf, Ubar, sigma_u, ds.N, "final-sample OLS")
    res = EstimationResult(MarkovMatrix(G_row, m, T), lam, "final_sample", ds.N, T, T)
    return res.with_truth(truth) if truth is not None else res


def state_residual(dm: DataMatrices, sys: SystemModel) -> np.ndarray:
    """Output part driven by states older than the regression window.

    Column ``t >= T1`` of rollout ``i`` is ``C A^(T1-1) xz[t-T1+1]``, where
    ``xz`` is the state started from zero and driven by the stored inputs
    and process noise. All columns vanish when ``T1 == T2``.
    """
    T1, T2, N = dm.T1, dm.T2, dm.N
    E = np.zeros((sys.p, N * T2))
    if T1 == T2:
        return E
    gain = sys.C @ np.linalg.matrix_power(sys.A, T1 - 1)
    x = np.zeros((N, sys.n))
    states = np.empty((N, sys.n, T2))
    for t in range(T2):
        states[:, :, t] = x
        x = x @ sys.A.T + dm.inputs[:, :, t] @ sys.B.T + dm.process_noise[:, :, t] @ sys.Bw.T
    for i in range(N):
        cols = slice(i * T2 + T1, (i + 1) * T2)
        E[:, cols] = gain @ states[i, :, 1 : T2 - T1 + 1]
    return E


def error_decomposition_check(
    dm: DataMatrices, sys: SystemModel, G_hat: MarkovMatrix
) -> float:
    """Spectral norm of ``(G_hat - G) - (F W + Dv V + H X0 + E) U^+``.

    The bracket is built from the stored noises, not from ``Y``, so a small
    result confirms the data model and the estimator together.
    """
    if dm.W is None or dm.V is None:
        raise IncompleteDatasetError("dataset has no stored process/measurement noise")
    G = true_markov(sys, dm.T1)
    F = noise_markov_F(sys, dm.T1)
    noise = F.block_row @ dm.W + sys.Dv @ dm.V
    if dm.X0 is not None:
        noise = noise + init_state_markov_H(sys, dm.T2).block_row @ dm.X0
    noise = noise + state_residual(dm, sys)
    predicted = noise @ right_pseudo_inverse(dm.U)
    return spectral_norm((G_hat.block_row - G.block_row) - predicted)
