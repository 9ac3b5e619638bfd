"""Self-contained SVG chart of a sweep's per-method mean errors."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_AXIS_LABELS = {
    "N": "number of rollouts N",
    "T": "rollout length T",
    "rho": "spectral radius of A",
    "rollout_length": "rollout length T2",
}
_MARKERS = {"full": "o", "final_sample": "D", "unequal_length": "s"}


def sweep_svg(result) -> str:
    cfg = result.config
    plt.rcParams["svg.hashsalt"] = "rolloutid"
    fig, ax = plt.subplots(figsize=(6, 4))
    x = np.asarray(cfg.values, dtype=float)
    for method in cfg.methods:
        y = result.means(method)
        ok = np.isfinite(y) & (y > 0)
        ax.plot(x[ok], y[ok], marker=_MARKERS.get(method, "o"), label=method)
    ax.set_yscale("log")
    if cfg.sweep_type == "N":
        ax.set_xscale("log")
    ax.set_xlabel(_AXIS_LABELS[cfg.sweep_type])
    ylabel = "normalized error" if cfg.metric == "normalized" else "spectral error"
    ax.set_ylabel(f"mean {ylabel} ({cfg.seeds} seeds)")
    ax.set_title(cfg.name)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
