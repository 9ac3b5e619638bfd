"""Dense matrix primitives used by the estimators and realization code.

Everything here is a pure function of its inputs. Matrices are plain 2-D
``numpy`` float arrays; :func:`as_matrix` is the single validation point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericFailureError, RankDeficiencyError

PINV_RCOND = 1e-12
SYMMETRY_RTOL = 1e-12
GELFAND_MAX_SQUARINGS = 24
GELFAND_TOL = 1e-8


def as_matrix(a, name="matrix") -> np.ndarray:
    """Coerce ``a`` to a finite, non-empty 2-D float array.

    Scalars become 1x1 and 1-D arrays become a single row.
    """
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got {arr.ndim} dimensions")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def svd(a) -> SvdResult:
    """Thin SVD with ``V`` returned column-wise, so ``a = U diag(s) V^T``."""
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdResult(u, s, vt.T)


def spectral_norm(a) -> float:
    a = as_matrix(a)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def min_eigenvalue_sym(a) -> float:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise InvalidInputError(
            f"matrix is not symmetric (max asymmetry {asym:.3e}, scale {scale:.3e})"
        )
    return float(scipy.linalg.eigvalsh(a, subset_by_index=[0, 0])[0])


def right_pseudo_inverse(u) -> np.ndarray:
    """Return ``U^T (U U^T)^{-1}`` for a full-row-rank ``U``.

    The Gram matrix is Cholesky-factored first. If that fails, fall back to
    an SVD pseudo-inverse, which refuses singular values below
    ``sigma_max * 1e-12``.
    """
    u = as_matrix(u, "U")
    rows, cols = u.shape
    if rows > cols:
        raise RankDeficiencyError(
            f"U has more rows ({rows}) than columns ({cols}); no right inverse"
        )
    gram = u @ u.T
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(factor, u, check_finite=False).T
    except np.linalg.LinAlgError:
        pass

    left, s, vt = np.linalg.svd(u, full_matrices=False)
    cutoff = s[0] * PINV_RCOND
    if s[-1] <= cutoff:
        cond = math.inf if s[-1] == 0 else float(s[0] / s[-1])
        raise RankDeficiencyError(
            f"U is rank deficient: smallest singular value {s[-1]:.3e} "
            f"below cutoff {cutoff:.3e}",
            condition=cond,
        )
    return (vt.T / s) @ left.T


def spectral_radius(a) -> float:
    """Gelfand estimate ``||A^(2^k)||^(1/2^k)`` by repeated squaring.

    The iterate is renormalised after every squaring and the scale factors
    are accumulated in log space, so no intermediate power overflows.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"spectral radius needs a square matrix, got {a.shape}")
    norm0 = spectral_norm(a)
    if norm0 == 0.0:
        return 0.0
    m = a / norm0
    log_norm = math.log(norm0)
    power = 1
    estimate = norm0
    for _ in range(GELFAND_MAX_SQUARINGS):
        m = m @ m
        power *= 2
        log_norm *= 2.0
        if not np.all(np.isfinite(m)):
            raise NumericFailureError("overflow in Gelfand iteration despite scaling")
        nrm = float(np.linalg.norm(m, 2))
        if nrm == 0.0:
            return 0.0
        m /= nrm
        log_norm += math.log(nrm)
        new = math.exp(log_norm / power)
        if not math.isfinite(new):
            raise NumericFailureError("spectral radius estimate overflowed")
        if abs(new - estimate) <= GELFAND_TOL * max(abs(new), np.finfo(float).tiny):
            return new
        estimate = new
    return estimate
