"""On-disk formats: rollout datasets, estimate exports and realization JSON.

A dataset directory holds ``metadata.json`` plus one CSV per rollout with
columns ``t, u_1..u_m, y_1..y_p, w_1..w_q, v_1..v_l``. Floats are written
with 17 significant digits so a save/load round trip is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .lti import MarkovMatrix, NoiseConfig, Rollout, RolloutDataset, SystemModel

FORMAT_VERSION = "1"
FLOAT_FMT = "%.17g"


def _rollout_name(i: int) -> str:
    return f"rollout_{i:05d}.csv"


def _header(m, p, q, l) -> list:
    cols = ["t"]
    for prefix, k in (("u", m), ("y", p), ("w", q), ("v", l)):
        cols += [f"{prefix}_{j + 1}" for j in range(k)]
    return cols


def save_dataset(ds: RolloutDataset, path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    r0 = ds.rollouts[0]
    m, p = r0.inputs.shape[0], r0.outputs.shape[0]
    q = r0.process_noise.shape[0] if r0.process_noise is not None else 0
    l = r0.measurement_noise.shape[0] if r0.measurement_noise is not None else 0
    header = ",".join(_header(m, p, q, l))
    files = []
    for i, r in enumerate(ds.rollouts):
        parts = [np.arange(ds.T2).reshape(1, -1), r.inputs, r.outputs]
        if q:
            parts.append(r.process_noise)
        if l:
            parts.append(r.measurement_noise)
        table = np.vstack(parts).T
        name = _rollout_name(i)
        fmt = ["%d"] + [FLOAT_FMT] * (table.shape[1] - 1)
        np.savetxt(out / name, table, fmt=fmt, delimiter=",", header=header, comments="")
        files.append(name)
    meta = {
        "format_version": FORMAT_VERSION,
        "system_tag": ds.system_tag,
        "system": ds.system.to_dict() if ds.system is not None else None,
        "noise": ds.noise.to_dict(),
        "N": ds.N,
        "T2": ds.T2,
        "seed": ds.seed,
        "dims": {"m": m, "p": p, "q": q, "l": l},
        "initial_states": [r.initial_state.tolist() for r in ds.rollouts],
        "rollout_files": files,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    return out


def load_dataset(path) -> RolloutDataset:
    root = Path(path)
    meta_path = root / "metadata.json"
    if not meta_path.exists():
        raise InvalidInputError(f"{root} has no metadata.json")
    meta = json.loads(meta_path.read_text())
    if str(meta.get("format_version")) != FORMAT_VERSION:
        raise InvalidInputError(f"unsupported dataset format {meta.get('format_version')!r}")
    system = SystemModel.from_dict(meta["system"]) if meta.get("system") else None
    files = meta.get("rollout_files") or sorted(p.name for p in root.glob("rollout_*.csv"))
    x0s = meta.get("initial_states")
    rollouts = []
    for i, name in enumerate(files):
        with open(root / name) as fh:
            header = fh.readline().strip().split(",")
        table = np.loadtxt(root / name, delimiter=",", skiprows=1, ndmin=2).T
        cols = {prefix: [k for k, h in enumerate(header) if h.startswith(prefix + "_")] for prefix in "uywv"}
        if not cols["u"] or not cols["y"]:
            raise InvalidInputError(f"{name}: header must contain u_* and y_* columns")
        w = table[cols["w"]] if cols["w"] else None
        v = table[cols["v"]] if cols["v"] else None
        if x0s is not None:
            x0 = np.array(x0s[i], dtype=float)
        else:
            x0 = np.zeros(system.n if system is not None else 0)
        rollouts.append(Rollout(table[cols["u"]], table[cols["y"]], w, v, x0))
    return RolloutDataset(
        rollouts,
        meta.get("system_tag", "custom"),
        NoiseConfig(**meta.get("noise", {})),
        int(meta.get("seed", 0)),
        system,
    )


def save_estimate(result, path) -> tuple:
    """Write ``<path>.csv`` (the block row) and ``<path>.json`` (diagnostics)."""
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
    np.savetxt(csv_path, result.G_hat.block_row, fmt=FLOAT_FMT, delimiter=",")
    meta = result.summary()
    meta["block_width"] = result.G_hat.block_width
    meta["horizon"] = result.G_hat.horizon
    json_path.write_text(json.dumps(meta, indent=2) + "\n")
    return csv_path, json_path


def load_estimate(path) -> MarkovMatrix:
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    meta = json.loads(base.with_suffix(".json").read_text())
    row = np.loadtxt(base.with_suffix(".csv"), delimiter=",", ndmin=2)
    return MarkovMatrix(row, int(meta["block_width"]), int(meta["horizon"]))


def save_json(obj: dict, path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(obj, indent=2) + "\n")
    return out
