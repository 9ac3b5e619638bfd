"""High-probability error bounds for the multi-rollout OLS estimator.

All logarithms are natural. Rollout-count thresholds are rounded up to
the next integer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidInputError
from .estimators import assemble_data_matrices, ols_full
from .lti import (
    NoiseConfig,
    SystemModel,
    init_state_markov_H,
    noise_markov_F,
    simulate_dataset,
    true_markov,
)
from .numerics import min_eigenvalue_sym, spectral_norm

PROPOSITIONS = ("P1", "P2", "P3", "P4")


def _cubic(T: int) -> float:
    return T**3 / 3 + T**2 / 2 + T / 6


def _check_args(T, N, delta, noise: NoiseConfig):
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    if int(T) != T or T < 1:
        raise InvalidInputError(f"T must be a positive integer, got {T}")
    if int(N) != N or N < 1:
        raise InvalidInputError(f"N must be a positive integer, got {N}")
    if noise.sigma_u <= 0:
        raise InvalidInputError("the bounds need sigma_u > 0")


@dataclass
class BoundReport:
    kind: str
    delta: float
    N: int
    T: int
    N_threshold: int
    C0: float
    C1: float
    C2: float
    bound_value: float
    F_norm: float
    Dv_norm: float
    H_norm: float = 0.0

    @property
    def valid(self) -> bool:
        return self.N >= self.N_threshold

    def to_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        return d


def theorem1_bound(
    sys: SystemModel, noise: NoiseConfig, T: int, N: int, delta: float
) -> BoundReport:
    """Bound on ``||G_hat - G||`` for zero initial state."""
    _check_args(T, N, delta, noise)
    m, q, l = sys.m, sys.q, sys.l
    F_norm = spectral_norm(noise_markov_F(sys, T).block_row)
    Dv_norm = spectral_norm(sys.Dv)
    log_term = math.log(27 * T / delta)
    C1 = 8 * Dv_norm * math.sqrt(2 * T * (T + 1) * (m + l) * log_term)
    C2 = 16 * F_norm * math.sqrt(_cubic(T) * 2 * (m + q) * log_term)
    threshold = math.ceil(8 * m * T + 4 * (m + q + l + 4) * math.log(3 * T / delta))
    value = (noise.sigma_v * C1 + noise.sigma_w * C2) / (noise.sigma_u * math.sqrt(N))
    return BoundReport("theorem1", delta, int(N), int(T), threshold, 0.0, C1, C2, value, F_norm, Dv_norm)


def corollary2_bound(
    sys: SystemModel, noise: NoiseConfig, T: int, N: int, delta: float
) -> BoundReport:
    """Bound with a random Gaussian initial state of std ``sigma_0``."""
    _check_args(T, N, delta, noise)
    n, m, q, l = sys.n, sys.m, sys.q, sys.l
    F_norm = spectral_norm(noise_markov_F(sys, T).block_row)
    Dv_norm = spectral_norm(sys.Dv)
    H_norm = spectral_norm(init_state_markov_H(sys, T).block_row)
    log_term = math.log(36 * T / delta)
    C0 = 16 * H_norm * math.sqrt(T * (T + 1) * (m + n) * log_term)
    C1 = 8 * Dv_norm * math.sqrt(2 * T * (T + 1) * (m + l) * log_term)
    C2 = 16 * F_norm * math.sqrt(_cubic(T) * 2 * (m + q) * log_term)
    threshold = math.ceil(8 * m * T + 4 * (m + n + q + l + 4) * math.log(4 * T / delta))
    value = (noise.sigma_0 * C0 + noise.sigma_v * C1 + noise.sigma_w * C2) / (
        noise.sigma_u * math.sqrt(N)
    )
    return BoundReport(
        "corollary2", delta, int(N), int(T), threshold, C0, C1, C2, value, F_norm, Dv_norm, H_norm
    )


def proposition_threshold(prop_id: str, sys: SystemModel, T: int, delta: float) -> int:
    """Smallest integer ``N`` meeting the proposition's rollout-count condition."""
    lg = math.log(T / delta)
    n, m, q, l = sys.n, sys.m, sys.q, sys.l
    raw = {
        "P1": 8 * m * T + 16 * lg,
        "P2": 2 * (m + l) * lg,
        "P3": 4 * (m + q) * lg,
        "P4": 4 * (n + m) * lg,
    }[prop_id]
    return max(1, math.ceil(raw))


def proposition_rhs(prop_id: str, sys: SystemModel, noise: NoiseConfig, T: int, N: int, delta: float) -> float:
    n, m, q, l = sys.n, sys.m, sys.q, sys.l
    su = noise.sigma_u
    lg = math.log(9 * T / delta)
    if prop_id == "P1":
        return su**2 * N / 4
    if prop_id == "P2":
        return 2 * noise.sigma_v * su * math.sqrt(2 * T * (T + 1) * N * (m + l) * lg)
    if prop_id == "P3":
        return 4 * noise.sigma_w * su * math.sqrt(_cubic(T) * 2 * N * (m + q) * lg)
    if prop_id == "P4":
        return 4 * noise.sigma_0 * su * math.sqrt(T * (T + 1) * N * (m + n) * lg)
    raise InvalidInputError(f"unknown proposition {prop_id!r}")


def proposition_lhs(prop_id: str, dm) -> float:
    if prop_id == "P1":
        return min_eigenvalue_sym(dm.U @ dm.U.T)
    if prop_id == "P2":
        return spectral_norm(dm.V @ dm.U.T)
    if prop_id == "P3":
        return spectral_norm(dm.W @ dm.U.T)
    if prop_id == "P4":
        return 0.0 if dm.X0 is None else spectral_norm(dm.X0 @ dm.U.T)
    raise InvalidInputError(f"unknown proposition {prop_id!r}")


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1)[0])


@dataclass
class ConcentrationCheck:
    proposition_id: str
    trials: int
    hold_fraction: float
    delta: float
    threshold_inequality_satisfied: bool
    N: int = 0
    N_threshold: int = 0
    rhs: float = 0.0
    lhs: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.hold_fraction >= 1 - self.delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lhs_max"] = max(self.lhs) if self.lhs else None
        d["lhs_min"] = min(self.lhs) if self.lhs else None
        del d["lhs"]
        return d


def _normalize_prop(prop_id) -> str:
    key = str(prop_id).upper()
    if not key.startswith("P"):
        key = "P" + key
    if key not in PROPOSITIONS:
        raise InvalidInputError(f"unknown proposition {prop_id!r}")
    return key


def check_proposition(
    prop_id,
    sys: SystemModel,
    noise: NoiseConfig,
    T: int,
    N: int,
    delta: float,
    trials: int,
    seed: int = 0,
) -> ConcentrationCheck:
    """Monte Carlo frequency with which a concentration inequality holds.

    Each trial simulates a fresh dataset of ``N`` rollouts of length ``T``.
    """
    prop = _normalize_prop(prop_id)
    if int(trials) != trials or trials < 1:
        raise InvalidInputError(f"trials must be a positive integer, got {trials}")
    _check_args(T, N, delta, noise)
    threshold = proposition_threshold(prop, sys, T, delta)
    rhs = proposition_rhs(prop, sys, noise, T, N, delta)
    lhs = []
    holds = 0
    for k in range(int(trials)):
        ds = simulate_dataset(sys, noise, N, T, seed=trial_seed(seed, k))
        value = proposition_lhs(prop, assemble_data_matrices(ds, T))
        lhs.append(value)
        ok = value >= rhs if prop == "P1" else value <= rhs
        holds += int(ok)
    return ConcentrationCheck(
        prop, int(trials), holds / trials, delta, N >= threshold, int(N), threshold, rhs, lhs
    )


def theorem1_coverage(
    sys: SystemModel,
    noise: NoiseConfig,
    T: int,
    N: int,
    delta: float,
    trials: int,
    seed: int = 0,
    use_corollary2: bool = False,
) -> tuple[float, BoundReport, list]:
    """Fraction of simulated datasets whose OLS error is within the bound."""
    bound = (corollary2_bound if use_corollary2 else theorem1_bound)(sys, noise, T, N, delta)
    G = true_markov(sys, T)
    errors = []
    for k in range(int(trials)):
        ds = simulate_dataset(sys, noise, N, T, seed=trial_seed(seed, k))
        errors.append(ols_full(assemble_data_matrices(ds, T), G).spectral_error)
    frac = float(np.mean(np.array(errors) <= bound.bound_value))
    return frac, bound, errors
