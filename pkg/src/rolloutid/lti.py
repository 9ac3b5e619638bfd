"""Discrete-time LTI systems, rollout simulation and derived block matrices.

The model is::

    x[t+1] = A x[t] + B u[t] + Bw w[t]
    y[t]   = C x[t] + D u[t] + Dv v[t]

Signals are stored channel-major: an input record is ``(m, T2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InstabilityOverflowError,
    InsufficientHorizonError,
    InvalidInputError,
)
from .numerics import as_matrix

OVERFLOW_LIMIT = 1e150


@dataclass(frozen=True, eq=False)
class SystemModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Bw: np.ndarray
    Dv: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "Bw", "Dv"):
            arr = as_matrix(getattr(self, name), name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise InvalidInputError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise InvalidInputError(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise InvalidInputError(f"C must have {n} columns, got {self.C.shape}")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise InvalidInputError(
                f"D must be {self.C.shape[0]}x{self.B.shape[1]}, got {self.D.shape}"
            )
        if self.Bw.shape[0] != n:
            raise InvalidInputError(f"Bw must have {n} rows, got {self.Bw.shape}")
        if self.Dv.shape[0] != self.C.shape[0]:
            raise InvalidInputError(
                f"Dv must have {self.C.shape[0]} rows, got {self.Dv.shape}"
            )

    @classmethod
    def from_matrices(cls, A, B, C, D=None, Bw=None, Dv=None):
        """Build a model, defaulting ``D`` to zero and both noise gains to identity."""
        A = as_matrix(A, "A")
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        C = as_matrix(C, "C")
        n, p = A.shape[0], C.shape[0]
        m = B.shape[1] if B.ndim == 2 else 1
        if D is None:
            D = np.zeros((p, m))
        if Bw is None:
            Bw = np.eye(n)
        elif np.ndim(Bw) == 1:
            Bw = np.reshape(Bw, (-1, 1))
        if Dv is None:
            Dv = np.eye(p)
        return cls(A, B, C, D, Bw, Dv)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.Bw.shape[1]

    @property
    def l(self) -> int:  # noqa: E743
        return self.Dv.shape[1]

    def with_A(self, A) -> "SystemModel":
        return SystemModel(A, self.B, self.C, self.D, self.Bw, self.Dv)

    def transformed(self, S) -> "SystemModel":
        """Apply the similarity ``x -> S x``."""
        S = as_matrix(S, "S")
        S_inv = np.linalg.inv(S)
        return SystemModel(
            S @ self.A @ S_inv, S @ self.B, self.C @ S_inv, self.D, S @ self.Bw, self.Dv
        )

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("A", "B", "C", "D", "Bw", "Dv")}

    @classmethod
    def from_dict(cls, d: dict) -> "SystemModel":
        return cls(*(np.array(d[k], dtype=float) for k in ("A", "B", "C", "D", "Bw", "Dv")))


@dataclass(frozen=True)
class NoiseConfig:
    sigma_u: float = 1.0
    sigma_w: float = 0.0
    sigma_v: float = 0.0
    sigma_0: float = 0.0

    def __post_init__(self):
        for name in ("sigma_u", "sigma_w", "sigma_v", "sigma_0"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise InvalidInputError(f"{name} must be finite and >= 0, got {value}")
            object.__setattr__(self, name, value)

    def to_dict(self) -> dict:
        return {
            "sigma_u": self.sigma_u,
            "sigma_w": self.sigma_w,
            "sigma_v": self.sigma_v,
            "sigma_0": self.sigma_0,
        }


@dataclass(eq=False)
class Rollout:
    """One trajectory. Noise records are ``None`` for externally measured data."""

    inputs: np.ndarray
    outputs: np.ndarray
    process_noise: np.ndarray
    measurement_noise: np.ndarray
    initial_state: np.ndarray

    def __post_init__(self):
        records = (self.inputs, self.outputs, self.process_noise, self.measurement_noise)
        lengths = {a.shape[1] for a in records if a is not None}
        if len(lengths) != 1:
            raise InvalidInputError(f"rollout fields disagree on length: {sorted(lengths)}")
        self.initial_state = np.asarray(self.initial_state, dtype=float).ravel()

    @property
    def length(self) -> int:
        return self.inputs.shape[1]


@dataclass(eq=False)
class RolloutDataset:
    rollouts: list
    system_tag: str = "custom"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 0
    # Present when the dataset came from simulation; used for error checks.
    system: SystemModel | None = None

    def __post_init__(self):
        if len(self.rollouts) < 1:
            raise InvalidInputError("a dataset needs at least one rollout")
        lengths = {r.length for r in self.rollouts}
        if len(lengths) != 1:
            raise InvalidInputError(f"rollouts have different lengths: {sorted(lengths)}")

    @property
    def N(self) -> int:
        return len(self.rollouts)

    @property
    def T2(self) -> int:
        return self.rollouts[0].length

    @property
    def has_noise_records(self) -> bool:
        return all(
            r.process_noise is not None and r.measurement_noise is not None
            for r in self.rollouts
        )


@dataclass(frozen=True, eq=False)
class MarkovMatrix:
    """A ``p x (block_width * horizon)`` row of impulse-response blocks."""

    block_row: np.ndarray
    block_width: int
    horizon: int

    def __post_init__(self):
        arr = np.array(self.block_row, dtype=float)
        if arr.ndim != 2:
            raise InvalidInputError("block_row must be 2-D")
        if arr.shape[1] != self.block_width * self.horizon:
            raise InvalidInputError(
                f"block_row has {arr.shape[1]} columns, expected "
                f"{self.block_width} * {self.horizon}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "block_row", arr)

    @property
    def p(self) -> int:
        return self.block_row.shape[0]

    def block(self, k: int) -> np.ndarray:
        w = self.block_width
        return self.block_row[:, k * w : (k + 1) * w]

    def truncate(self, horizon: int) -> "MarkovMatrix":
        if horizon > self.horizon:
            raise InsufficientHorizonError(
                f"cannot truncate horizon {self.horizon} to {horizon}"
            )
        return MarkovMatrix(self.block_row[:, : horizon * self.block_width], self.block_width, horizon)


@dataclass(frozen=True, eq=False)
class HankelTriple:
    H: np.ndarray
    H_minus: np.ndarray
    H_plus: np.ndarray
    T1: int
    T2h: int


def _check_count(value, name, minimum=1):
    if int(value) != value or value < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value}")
    return int(value)


def _impulse_blocks(sys: SystemModel, right: np.ndarray, count: int) -> list:
    """Return ``[C right, C A right, ..., C A^(count-1) right]``."""
    blocks = []
    M = right
    for _ in range(count):
        blocks.append(sys.C @ M)
        M = sys.A @ M
    return blocks


def true_markov(sys: SystemModel, T: int) -> MarkovMatrix:
    """``[D, CB, CAB, ..., CA^(T-2) B]``."""
    T = _check_count(T, "T")
    blocks = [sys.D] + _impulse_blocks(sys, sys.B, T - 1)
    return MarkovMatrix(np.hstack(blocks), sys.m, T)


def noise_markov_F(sys: SystemModel, T: int) -> MarkovMatrix:
    """``[0, C Bw, C A Bw, ..., C A^(T-2) Bw]``."""
    T = _check_count(T, "T")
    blocks = [np.zeros((sys.p, sys.q))] + _impulse_blocks(sys, sys.Bw, T - 1)
    return MarkovMatrix(np.hstack(blocks), sys.q, T)


def init_state_markov_H(sys: SystemModel, T: int) -> MarkovMatrix:
    """``[C, CA, ..., CA^(T-1)]``."""
    T = _check_count(T, "T")
    return MarkovMatrix(np.hstack(_impulse_blocks(sys, np.eye(sys.n), T)), sys.n, T)


def observability_matrix(sys: SystemModel, rows: int) -> np.ndarray:
    return np.vstack(_impulse_blocks(sys, np.eye(sys.n), rows))


def controllability_matrix(sys: SystemModel, cols: int) -> np.ndarray:
    blocks = []
    M = sys.B
    for _ in range(cols):
        blocks.append(M)
        M = sys.A @ M
    return np.hstack(blocks)


def build_hankel(G: MarkovMatrix, T1: int, T2h: int) -> HankelTriple:
    """Hankel matrix of ``CB, CAB, ...`` (the ``D`` block is skipped).

    Block ``(i, j)`` of ``H`` is Markov block ``i + j + 1``; ``H`` has
    ``T1`` block rows and ``T2h + 1`` block columns.
    """
    T1 = _check_count(T1, "T1")
    T2h = _check_count(T2h, "T2h")
    if G.horizon < T1 + T2h + 1:
        raise InsufficientHorizonError(
            f"Hankel with T1={T1}, T2={T2h} needs horizon >= {T1 + T2h + 1}, "
            f"got {G.horizon}"
        )
    rows = [np.hstack([G.block(i + j + 1) for j in range(T2h + 1)]) for i in range(T1)]
    H = np.vstack(rows)
    m = G.block_width
    return HankelTriple(H, H[:, : m * T2h], H[:, m:], T1, T2h)


def new_rng(seed, *key) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def simulate_rollout(
    sys: SystemModel,
    noise: NoiseConfig,
    T2: int,
    rng: np.random.Generator,
    inputs=None,
) -> Rollout:
    """Simulate one rollout of length ``T2``.

    Draw order from ``rng`` is fixed: ``x0`` (n), ``u`` (T2 x m), ``w``
    (T2 x q), ``v`` (T2 x l). Standard normals are always drawn and then
    scaled, so changing a noise level never shifts the other streams.
    ``inputs`` overrides the Gaussian input with a deterministic ``(m, T2)``
    signal.
    """
    T2 = _check_count(T2, "T2")
    x0, u, w, v = _draw(sys, noise, T2, rng)
    if inputs is not None:
        u = np.array(inputs, dtype=float).reshape(sys.m, T2)
    y = run_dynamics(sys, u, w, v, x0)
    return Rollout(u, y, w, v, x0)


def run_dynamics(sys: SystemModel, u, w, v, x0, return_states=False):
    """Replay the recursion deterministically; returns outputs ``(p, T2)``.

    With ``return_states`` the ``(n, T2 + 1)`` state trajectory is returned too.
    """
    T2 = u.shape[1]
    x = np.array(x0, dtype=float).reshape(sys.n)
    y = np.empty((sys.p, T2))
    states = np.empty((sys.n, T2 + 1)) if return_states else None
    A, B, C, D, Bw, Dv = sys.A, sys.B, sys.C, sys.D, sys.Bw, sys.Dv
    for t in range(T2):
        if not np.all(np.abs(x) <= OVERFLOW_LIMIT):
            raise InstabilityOverflowError(
                f"state magnitude exceeded {OVERFLOW_LIMIT:g} at t={t}", time_index=t
            )
        if states is not None:
            states[:, t] = x
        y[:, t] = C @ x + D @ u[:, t] + Dv @ v[:, t]
        x = A @ x + B @ u[:, t] + Bw @ w[:, t]
    if states is not None:
        states[:, T2] = x
        return y, states
    return y


def _draw(sys: SystemModel, noise: NoiseConfig, T2: int, rng: np.random.Generator):
    x0 = noise.sigma_0 * rng.standard_normal(sys.n)
    u = noise.sigma_u * rng.standard_normal((T2, sys.m)).T
    w = noise.sigma_w * rng.standard_normal((T2, sys.q)).T
    v = noise.sigma_v * rng.standard_normal((T2, sys.l)).T
    return x0, u, w, v


def simulate_dataset(
    sys: SystemModel,
    noise: NoiseConfig,
    N: int,
    T2: int,
    seed: int = 0,
    system_tag: str = "custom",
) -> RolloutDataset:
    """``N`` independent rollouts; rollout ``i`` draws from the stream ``(seed, i)``.

    The draws match :func:`simulate_rollout` exactly; the recursion is run
    for all rollouts at once.
    """
    N = _check_count(N, "N")
    T2 = _check_count(T2, "T2")
    draws = [_draw(sys, noise, T2, new_rng(seed, i)) for i in range(N)]
    x0 = np.stack([d[0] for d in draws])
    u = np.stack([d[1] for d in draws])
    w = np.stack([d[2] for d in draws])
    v = np.stack([d[3] for d in draws])

    x = x0.copy()
    y = np.empty((N, sys.p, T2))
    for t in range(T2):
        if not np.all(np.abs(x) <= OVERFLOW_LIMIT):
            raise InstabilityOverflowError(
                f"state magnitude exceeded {OVERFLOW_LIMIT:g} at t={t}", time_index=t
            )
        y[:, :, t] = x @ sys.C.T + u[:, :, t] @ sys.D.T + v[:, :, t] @ sys.Dv.T
        x = x @ sys.A.T + u[:, :, t] @ sys.B.T + w[:, :, t] @ sys.Bw.T
    rollouts = [Rollout(u[i], y[i], w[i], v[i], x0[i]) for i in range(N)]
    return RolloutDataset(rollouts, system_tag, noise, int(seed), sys)
