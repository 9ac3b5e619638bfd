"""Benchmark systems and the seeded Monte Carlo sweep harness."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CannotRescaleError,
    InvalidInputError,
    NotFoundError,
    NumericFailureError,
    UnderExcitationError,
)
from .estimators import METHODS, assemble_data_matrices, ols_final_sample, ols_full
from .lti import NoiseConfig, SystemModel, new_rng, simulate_dataset, true_markov
from .numerics import spectral_norm, spectral_radius

logger = logging.getLogger(__name__)

SWEEP_TYPES = ("N", "T", "rho", "rollout_length")
METRICS = ("normalized", "absolute")


def newton_system(delta: float = 0.2) -> SystemModel:
    """Double integrator discretised with step ``delta``; both eigenvalues are 1."""
    A = [[1.0, delta], [0.0, 1.0]]
    B = [[0.0], [1.0]]
    return SystemModel(A, B, [[1.0, 0.0]], [[0.0]], B, [[1.0]])


def unstable_3x3() -> SystemModel:
    A = [[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]]
    return SystemModel(A, np.eye(3), [[1.0, 0.0, 0.0]], np.zeros((1, 3)), np.eye(3), [[1.0]])


_BUILTINS = {
    "newton_delta": newton_system,
    "newton": newton_system,
    "unstable_3x3": unstable_3x3,
}


def builtin_system(name: str, delta: float = 0.2) -> SystemModel:
    key = name.lower()
    if key not in _BUILTINS:
        raise NotFoundError(f"unknown built-in system {name!r}; known: {sorted(_BUILTINS)}")
    factory = _BUILTINS[key]
    return factory(delta) if factory is newton_system else factory()


def random_system(seed: int, n: int = 3, m: int = 2, p: int = 2) -> SystemModel:
    """Integer-entry system: ``A`` from {1..5}; ``B``, ``C``, ``D`` from {-2..2}.

    Noise gains are identities.
    """
    rng = new_rng(seed)
    A = rng.integers(1, 6, size=(n, n)).astype(float)
    B = rng.integers(-2, 3, size=(n, m)).astype(float)
    C = rng.integers(-2, 3, size=(p, n)).astype(float)
    D = rng.integers(-2, 3, size=(p, m)).astype(float)
    return SystemModel(A, B, C, D, np.eye(n), np.eye(p))


def rescale_to_radius(sys: SystemModel, target_rho: float) -> SystemModel:
    if not target_rho > 0:
        raise InvalidInputError(f"target_rho must be positive, got {target_rho}")
    rho = spectral_radius(sys.A)
    scale = spectral_norm(sys.A)
    if rho <= 1e-12 * max(scale, 1e-300):
        raise CannotRescaleError("A is nilpotent (spectral radius 0); cannot rescale")
    return sys.with_A((target_rho / rho) * sys.A)


def system_from_spec(spec: dict) -> SystemModel:
    kind = spec.get("kind", "explicit")
    if kind in ("newton_delta", "newton"):
        return newton_system(float(spec.get("delta", 0.2)))
    if kind == "unstable_3x3":
        return unstable_3x3()
    if kind == "random":
        sys = random_system(
            int(spec.get("seed", 0)), int(spec.get("n", 3)), int(spec.get("m", 2)), int(spec.get("p", 2))
        )
        if spec.get("target_rho") is not None:
            sys = rescale_to_radius(sys, float(spec["target_rho"]))
        return sys
    if kind == "explicit":
        return SystemModel.from_matrices(
            spec["A"], spec["B"], spec["C"], spec.get("D"), spec.get("Bw"), spec.get("Dv")
        )
    raise NotFoundError(f"unknown system kind {kind!r}")


@dataclass
class ScenarioConfig:
    system_spec: dict
    noise: NoiseConfig
    sweep_type: str
    values: list
    N: int | None = None
    T: int | None = None
    T1: int | None = None
    methods: list = field(default_factory=lambda: ["full", "final_sample"])
    seeds: int = 20
    root_seed: int = 0
    metric: str = "normalized"
    workers: int = 1
    output_dir: str | None = None
    name: str = "sweep"

    def __post_init__(self):
        if self.sweep_type not in SWEEP_TYPES:
            raise InvalidInputError(f"sweep type must be one of {SWEEP_TYPES}, got {self.sweep_type!r}")
        if not self.values:
            raise InvalidInputError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidInputError("sweep values must be strictly increasing")
        if int(self.seeds) != self.seeds or self.seeds < 1:
            raise InvalidInputError("seeds must be >= 1")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InvalidInputError(f"unknown methods {bad}; choose from {METHODS}")
        if self.metric not in METRICS:
            raise InvalidInputError(f"metric must be one of {METRICS}")
        needed = {"N": ("T",), "T": ("N",), "rho": ("N", "T"), "rollout_length": ("N", "T1")}
        for key in needed[self.sweep_type]:
            if getattr(self, key) is None:
                raise InvalidInputError(f"{self.sweep_type}-sweep needs a fixed {key}")
        if self.sweep_type in ("N", "T", "rollout_length"):
            if any(int(v) != v or v < 1 for v in self.values):
                raise InvalidInputError("sweep values must be positive integers")
            self.values = [int(v) for v in self.values]
        if self.sweep_type == "rollout_length" and self.values[0] < self.T1:
            raise InvalidInputError("rollout lengths must be >= T1")

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        try:
            sweep = d["sweep"]
            return cls(
                system_spec=dict(d["system"]),
                noise=NoiseConfig(**d.get("noise", {})),
                sweep_type=sweep["type"],
                values=list(sweep["values"]),
                N=sweep.get("N"),
                T=sweep.get("T"),
                T1=sweep.get("T1"),
                methods=list(d.get("methods", ["full", "final_sample"])),
                seeds=int(d.get("seeds", 20)),
                root_seed=int(d.get("root_seed", 0)),
                metric=d.get("metric", "normalized"),
                workers=int(d.get("workers", 1)),
                output_dir=d.get("output_dir"),
                name=d.get("name", "sweep"),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed scenario config: {exc}") from exc

    def to_dict(self) -> dict:
        sweep = {"type": self.sweep_type, "values": list(self.values)}
        for key in ("N", "T", "T1"):
            if getattr(self, key) is not None:
                sweep[key] = getattr(self, key)
        return {
            "name": self.name,
            "system": self.system_spec,
            "noise": self.noise.to_dict(),
            "sweep": sweep,
            "methods": list(self.methods),
            "seeds": self.seeds,
            "root_seed": self.root_seed,
            "metric": self.metric,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }

    def with_updates(self, **kw) -> "ScenarioConfig":
        """Copy with sweep fields (``values``, ``N``, ``T``, ``T1``) or top-level keys replaced."""
        d = self.to_dict()
        for key in ("values", "N", "T", "T1"):
            if key in kw:
                d["sweep"][key] = kw.pop(key)
        if "noise" in kw:
            d["noise"] = kw.pop("noise").to_dict()
        d.update(kw)
        return ScenarioConfig.from_dict(d)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    return ScenarioConfig.from_dict(data)


def cell_seed(root_seed: int, axis_value, seed_index: int) -> int:
    """Dataset seed for one sweep cell, keyed by the axis value itself.

    Keying by value (not position) keeps a cell's data unchanged when the
    sweep list is subset or reordered.
    """
    digest = hashlib.sha256(repr(float(axis_value)).encode()).digest()
    key = int.from_bytes(digest[:4], "little")
    ss = np.random.SeedSequence([int(root_seed), key, int(seed_index)])
    return int(ss.generate_state(1)[0])


@dataclass
class CellRow:
    axis: float
    method: str
    seed: int
    error: float
    normalized_error: float
    reason: str = ""

    @property
    def missing(self) -> bool:
        return bool(self.reason)


@dataclass
class SummaryRow:
    axis: float
    method: str
    mean: float
    std: float
    count: int


@dataclass
class SweepResult:
    config: ScenarioConfig
    rows: list
    summary: list

    @property
    def axis_values(self) -> list:
        return list(self.config.values)

    def means(self, method: str) -> np.ndarray:
        return np.array([s.mean for s in self.summary if s.method == method])

    def stds(self, method: str) -> np.ndarray:
        return np.array([s.std for s in self.summary if s.method == method])

    def raw(self, method: str, axis) -> np.ndarray:
        return np.array(
            [
                self._metric(r)
                for r in self.rows
                if r.method == method and r.axis == axis and not r.missing
            ]
        )

    def _metric(self, r: CellRow) -> float:
        return r.normalized_error if self.config.metric == "normalized" else r.error

    @property
    def missing(self) -> list:
        return [r for r in self.rows if r.missing]

    def results_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "method", "seed", "error", "normalized_error"])
        for r in self.rows:
            w.writerow([_fmt(r.axis), r.method, r.seed, _fmt(r.error), _fmt(r.normalized_error)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "method", "mean", "std"])
        for s in self.summary:
            w.writerow([_fmt(s.axis), s.method, _fmt(s.mean), _fmt(s.std)])
        return buf.getvalue()

    def write(self, output_dir) -> Path:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(self.results_csv())
        (out / "summary.csv").write_text(self.summary_csv())
        if self.missing:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["axis", "method", "seed", "reason"])
            for r in self.missing:
                w.writerow([_fmt(r.axis), r.method, r.seed, r.reason])
            (out / "missing.csv").write_text(buf.getvalue())
        (out / "config.json").write_text(json.dumps(self.config.to_dict(), indent=2) + "\n")
        from .plotting import sweep_svg

        (out / "plot.svg").write_text(sweep_svg(self))
        return out


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.17g}"


def _cell_system(cfg: ScenarioConfig, value) -> SystemModel:
    sys = system_from_spec(cfg.system_spec)
    if cfg.sweep_type == "rho":
        sys = rescale_to_radius(sys, float(value))
    return sys


def _cell_dims(cfg: ScenarioConfig, value):
    """``(N, T2, T1)`` for one axis value."""
    if cfg.sweep_type == "N":
        return int(value), cfg.T, cfg.T
    if cfg.sweep_type == "T":
        return cfg.N, int(value), int(value)
    if cfg.sweep_type == "rho":
        return cfg.N, cfg.T, cfg.T
    return cfg.N, int(value), cfg.T1


def run_cell(cfg: ScenarioConfig, value, seed_index: int) -> list:
    """All requested methods on one simulated dataset."""
    N, T2, T1 = _cell_dims(cfg, value)
    seed = cell_seed(cfg.root_seed, value, seed_index)
    rows = []
    try:
        sys = _cell_system(cfg, value)
        ds = simulate_dataset(sys, cfg.noise, N, T2, seed=seed)
    except (NumericFailureError, InvalidInputError) as exc:
        return [CellRow(value, m, seed_index, math.nan, math.nan, f"{type(exc).__name__}: {exc}") for m in cfg.methods]
    G1 = true_markov(sys, T1)
    for method in cfg.methods:
        try:
            if method == "full":
                est = ols_full(assemble_data_matrices(ds, T2)).G_hat.truncate(T1)
            elif method == "final_sample":
                est = ols_final_sample(ds).G_hat.truncate(T1)
            else:
                est = ols_full(assemble_data_matrices(ds, T1)).G_hat
        except (UnderExcitationError, NumericFailureError) as exc:
            rows.append(CellRow(value, method, seed_index, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
            continue
        err = spectral_norm(est.block_row - G1.block_row)
        ref = spectral_norm(G1.block_row)
        rows.append(CellRow(value, method, seed_index, err, err / ref if ref > 0 else math.nan))
    return rows


def _run_axis(args):
    cfg, value = args
    return [row for k in range(cfg.seeds) for row in run_cell(cfg, value, k)]


def summarize(cfg: ScenarioConfig, rows: list) -> list:
    out = []
    for value in cfg.values:
        for method in cfg.methods:
            vals = [
                (r.normalized_error if cfg.metric == "normalized" else r.error)
                for r in rows
                if r.axis == value and r.method == method and not r.missing
            ]
            if vals:
                arr = np.array(vals)
                mean = float(np.mean(arr))
                std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
            else:
                mean = std = math.nan
            out.append(SummaryRow(value, method, mean, std, len(vals)))
    return out


def run_sweep(cfg: ScenarioConfig, workers: int | None = None) -> SweepResult:
    """Run every ``(axis value, seed)`` cell; output order is fixed by the config."""
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, v) for v in cfg.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_axis, jobs))
    else:
        chunks = [_run_axis(job) for job in jobs]
    rows = [row for chunk in chunks for row in chunk]
    for r in rows:
        if r.missing:
            logger.warning("missing cell axis=%s method=%s seed=%s: %s", r.axis, r.method, r.seed, r.reason)
    return SweepResult(cfg, rows, summarize(cfg, rows))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


PRESETS = {
    "n_sweep_newton": {
        "name": "n_sweep_newton",
        "system": {"kind": "newton_delta", "delta": 0.2},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.2, "sigma_v": 0.5},
        "sweep": {"type": "N", "values": list(range(50, 501, 50)), "T": 10},
        "methods": ["full", "final_sample"],
    },
    "n_sweep_unstable": {
        "name": "n_sweep_unstable",
        "system": {"kind": "unstable_3x3"},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.2, "sigma_v": 0.5},
        "sweep": {"type": "N", "values": list(range(50, 501, 50)), "T": 10},
        "methods": ["full", "final_sample"],
    },
    "t_sweep_newton": {
        "name": "t_sweep_newton",
        "system": {"kind": "newton_delta", "delta": 0.2},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.2, "sigma_v": 0.5},
        "sweep": {"type": "T", "values": [10, 15, 20, 25, 30, 35, 40], "N": 500},
        "methods": ["full", "final_sample"],
    },
    "t_sweep_unstable": {
        "name": "t_sweep_unstable",
        "system": {"kind": "unstable_3x3"},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.2, "sigma_v": 0.5},
        "sweep": {"type": "T", "values": [10, 15, 20, 25, 30, 35, 40], "N": 500},
        "methods": ["full", "final_sample"],
    },
    "rho_sweep_random": {
        "name": "rho_sweep_random",
        "system": {"kind": "random", "seed": 0},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.0, "sigma_v": 0.5},
        "sweep": {"type": "rho", "values": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10], "N": 1000, "T": 9},
        "methods": ["full"],
        "metric": "absolute",
    },
    "length_sweep_unstable": {
        "name": "length_sweep_unstable",
        "system": {"kind": "unstable_3x3"},
        "noise": {"sigma_u": 1.0, "sigma_w": 0.0, "sigma_v": 0.5},
        "sweep": {"type": "rollout_length", "values": [10, 20, 30, 40], "N": 500, "T1": 10},
        "methods": ["full", "unequal_length"],
    },
}


def preset(name: str, **overrides) -> ScenarioConfig:
    if name not in PRESETS:
        raise NotFoundError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    d = json.loads(json.dumps(PRESETS[name]))
    d.update(overrides)
    return ScenarioConfig.from_dict(d)
