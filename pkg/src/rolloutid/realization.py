"""Ho-Kalman realization, its robustness diagnostics, and FIR/H-infinity checks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InstabilityError, InvalidInputError
from .lti import MarkovMatrix, SystemModel, build_hankel, true_markov
from .numerics import spectral_norm, spectral_radius

logger = logging.getLogger(__name__)

AMBIGUOUS_GAP = 0.5
TAIL_STOP = 1e-12
TAIL_MAX_TERMS = 1_000_000


@dataclass(eq=False)
class Realization:
    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    D_hat: np.ndarray
    order: int
    T1: int = 0
    T2h: int = 0
    hankel_singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    observability: np.ndarray | None = None
    controllability: np.ndarray | None = None
    warning: str | None = None

    def as_system(self) -> SystemModel:
        p, n = self.C_hat.shape
        return SystemModel(
            self.A_hat, self.B_hat, self.C_hat, self.D_hat, np.eye(n), np.eye(p)
        )

    def markov(self, T: int) -> MarkovMatrix:
        return true_markov(self.as_system(), T)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "T1": self.T1,
            "T2": self.T2h,
            "A": self.A_hat.tolist(),
            "B": self.B_hat.tolist(),
            "C": self.C_hat.tolist(),
            "D": self.D_hat.tolist(),
            "hankel_singular_values": np.asarray(self.hankel_singular_values).tolist(),
            "warning": self.warning,
        }


def _fix_signs(u: np.ndarray, vt: np.ndarray):
    """Make the largest-magnitude entry of every left singular vector positive."""
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def ho_kalman(G: MarkovMatrix, n: int, T1: int, T2h: int) -> Realization:
    """Rank-``n`` Ho-Kalman realization from a Markov block row.

    ``G`` must hold at least ``T1 + T2h + 1`` blocks. The factors are
    ``O = U S^(1/2)`` and ``Ctrl = S^(1/2) V^T`` from the SVD of the
    Hankel matrix without its last block column; ``A_hat`` comes from the
    shifted Hankel matrix.
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"order must be a positive integer, got {n}")
    if min(T1, T2h) < n:
        raise InvalidInputError(f"need min(T1, T2)={min(T1, T2h)} >= order {n}")
    hk = build_hankel(G, T1, T2h)
    p, m = G.p, G.block_width

    u, s, vt = np.linalg.svd(hk.H_minus, full_matrices=False)
    u, vt = _fix_signs(u[:, :n], vt[:n])
    s_n = s[:n]
    if s_n[-1] <= 0:
        raise InvalidInputError(f"Hankel matrix has rank below {n}")
    warning = None
    if len(s) > n and s[n] > AMBIGUOUS_GAP * s[n - 1]:
        warning = (
            f"ambiguous order: singular value {n + 1} ({s[n]:.3e}) exceeds "
            f"{AMBIGUOUS_GAP} x singular value {n} ({s[n - 1]:.3e})"
        )
        logger.warning(warning)

    root = np.sqrt(s_n)
    O = u * root
    Ctrl = root[:, None] * vt
    A_hat = (u.T @ hk.H_plus @ vt.T) / np.outer(root, root)
    return Realization(
        A_hat=A_hat,
        B_hat=Ctrl[:, :m].copy(),
        C_hat=O[:p].copy(),
        D_hat=np.array(G.block(0)),
        order=int(n),
        T1=T1,
        T2h=T2h,
        hankel_singular_values=s,
        observability=O,
        controllability=Ctrl,
        warning=warning,
    )


def hankel_perturbation_bound(G_err_spec: float, T1: int, T2h: int) -> float:
    if G_err_spec < 0 or T1 < 0 or T2h < 0:
        raise InvalidInputError("inputs must be non-negative")
    return math.sqrt(min(T1, T2h + 1)) * G_err_spec


def hankel_error(G: MarkovMatrix, G_hat: MarkovMatrix, T1: int, T2h: int) -> float:
    """Measured ``||H - H_hat||`` for the full Hankel matrices."""
    return spectral_norm(build_hankel(G, T1, T2h).H - build_hankel(G_hat, T1, T2h).H)


@dataclass(eq=False)
class RobustnessReport:
    regime_entered: bool
    hankel_error: float
    sigma_min_H_minus: float
    H_norm: float
    bound_BC: float | None = None
    bound_A: float | None = None
    err_B: float | None = None
    err_C: float | None = None
    err_A: float | None = None
    S: np.ndarray | None = None
    message: str = ""

    @property
    def pass_B(self):
        return None if self.err_B is None else self.err_B <= self.bound_BC

    @property
    def pass_C(self):
        return None if self.err_C is None else self.err_C <= self.bound_BC

    @property
    def pass_A(self):
        return None if self.err_A is None else self.err_A <= self.bound_A

    @property
    def all_pass(self):
        if not self.regime_entered:
            return None
        return bool(self.pass_A and self.pass_B and self.pass_C)

    def to_dict(self) -> dict:
        return {
            "regime_entered": self.regime_entered,
            "hankel_error": self.hankel_error,
            "sigma_min_H_minus": self.sigma_min_H_minus,
            "H_norm": self.H_norm,
            "bound_BC": self.bound_BC,
            "bound_A": self.bound_A,
            "err_A": self.err_A,
            "err_B": self.err_B,
            "err_C": self.err_C,
            "pass_A": self.pass_A,
            "pass_B": self.pass_B,
            "pass_C": self.pass_C,
            "S": None if self.S is None else self.S.tolist(),
            "message": self.message,
        }


def realization_robustness_check(
    truth: SystemModel, est: Realization, H_spec_err: float
) -> RobustnessReport:
    """Check the Ho-Kalman perturbation inequalities for ``est``.

    The reference is the Ho-Kalman realization of the exact Markov
    parameters of ``truth`` (the balanced one the inequalities are stated
    for). The unitary ``S`` is the orthogonal Procrustes fit of the stacked
    observability and controllability factors.
    """
    n, T1, T2h = est.order, est.T1, est.T2h
    if truth.n != n:
        raise InvalidInputError(f"truth has order {truth.n}, estimate has {n}")
    G = true_markov(truth, T1 + T2h + 1)
    hk = build_hankel(G, T1, T2h)
    sigma_min = float(np.linalg.svd(hk.H_minus, compute_uv=False)[n - 1])
    H_norm = spectral_norm(hk.H)
    report = RobustnessReport(False, float(H_spec_err), sigma_min, H_norm)
    if not H_spec_err <= sigma_min / 4:
        report.message = (
            f"robustness regime not entered: ||H - H_hat|| = {H_spec_err:.3e} > "
            f"sigma_min(H-)/4 = {sigma_min / 4:.3e}"
        )
        return report

    ref = ho_kalman(G, n, T1, T2h)
    K = ref.observability.T @ est.observability + ref.controllability @ est.controllability.T
    u, _, vt = np.linalg.svd(K)
    S = vt.T @ u.T

    report.regime_entered = True
    report.S = S
    root = math.sqrt(n * H_spec_err)
    report.bound_BC = 5 * root
    report.bound_A = 50 * root * H_norm / sigma_min**1.5
    report.err_B = spectral_norm(est.B_hat - S @ ref.B_hat)
    report.err_C = spectral_norm(est.C_hat - ref.C_hat @ S.T)
    report.err_A = spectral_norm(est.A_hat - S @ ref.A_hat @ S.T)
    report.message = "robustness regime entered"
    return report


@dataclass(frozen=True)
class FirTruncationReport:
    ols_error_hinf: float
    tail_bound: float
    total_bound: float
    grid_points: int
    tail_terms: int = 0

    def to_dict(self) -> dict:
        return {
            "ols_error_hinf": self.ols_error_hinf,
            "tail_bound": self.tail_bound,
            "total_bound": self.total_bound,
            "grid_points": self.grid_points,
            "tail_terms": self.tail_terms,
        }


def fir_hinf_norm(blocks: np.ndarray, grid_points: int) -> float:
    """Grid estimate of ``max_w sigma_max(sum_k blocks[k] e^{-jwk})``.

    ``blocks`` has shape ``(T, p, m)``. The grid is ``w_j = pi j/(g-1)``,
    so the grid for ``2g - 1`` points contains the grid for ``g``.
    """
    T = blocks.shape[0]
    omega = np.linspace(0.0, np.pi, grid_points)
    phase = np.exp(-1j * np.outer(omega, np.arange(T)))
    response = np.einsum("wk,kpm->wpm", phase, blocks)
    return float(np.max(np.linalg.svd(response, compute_uv=False)[:, 0]))


def fir_tail_bound(truth: SystemModel, T: int) -> tuple[float, int]:
    """``sum_{k>=T} ||C A^(k-1) B||`` and the number of terms summed.

    Summation stops once ``||C|| ||A^(k-1)|| ||B||`` (an upper bound on the
    current term) drops below 1e-12.
    """
    scale = spectral_norm(truth.C) * spectral_norm(truth.B)
    power = np.linalg.matrix_power(truth.A, T - 1)
    total = 0.0
    for k in range(TAIL_MAX_TERMS):
        if scale * spectral_norm(power) < TAIL_STOP:
            return total, k
        total += spectral_norm(truth.C @ power @ truth.B)
        power = truth.A @ power
    raise ConvergenceError(f"FIR tail did not decay within {TAIL_MAX_TERMS} terms")


def fir_hinf_report(
    truth: SystemModel, G_hat: MarkovMatrix, grid_points: int | None = None
) -> FirTruncationReport:
    T = G_hat.horizon
    if grid_points is None:
        grid_points = 8 * T
    if grid_points < 8 * T:
        raise InvalidInputError(f"grid_points must be >= 8*T = {8 * T}, got {grid_points}")
    rho = spectral_radius(truth.A)
    if rho >= 1:
        raise InstabilityError(f"FIR tail bound needs rho(A) < 1, got {rho:.6g}")
    G = true_markov(truth, T)
    p, m = G.p, G.block_width
    diff = (G.block_row - G_hat.block_row).reshape(p, T, m).transpose(1, 0, 2)
    hinf = fir_hinf_norm(diff, grid_points)
    tail, terms = fir_tail_bound(truth, T)
    return FirTruncationReport(hinf, tail, hinf + tail, int(grid_points), terms)
