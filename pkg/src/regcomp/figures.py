"""Self-contained SVG heatmaps for the levels sweep (convenience rendering;
the CSV is the canonical artifact)."""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

_LOG_FLOOR = 1e-17


def _grid(rows: List[dict], field: str):
    k1s = sorted({r["k1"] for r in rows})
    k2s = sorted({r["k2"] for r in rows})
    values = np.full((len(k2s), len(k1s)), np.nan)
    pos1 = {k: i for i, k in enumerate(k1s)}
    pos2 = {k: i for i, k in enumerate(k2s)}
    for r in rows:
        values[pos2[r["k2"]], pos1[r["k1"]]] = math.log10(max(r[field], _LOG_FLOOR))
    return k1s, k2s, values


def render_sweep_heatmaps(rows: List[dict], prefix: str) -> Tuple[str, str]:
    """Write log10(c1) and log10(c2) heatmaps to '<prefix>_c1.svg' and
    '<prefix>_c2.svg'; returns the two paths."""
    from matplotlib.figure import Figure

    paths = []
    for field, label in (("c1", "log10 weight-angle gap"), ("c2", "log10 threshold gap")):
        k1s, k2s, values = _grid(rows, field)
        fig = Figure(figsize=(5.0, 4.0))
        ax = fig.add_subplot()
        mesh = ax.pcolormesh(k1s, k2s, values, shading="nearest")
        ax.set_xlabel("k1")
        ax.set_ylabel("k2")
        ax.set_title(label)
        fig.colorbar(mesh, ax=ax)
        path = f"{prefix}_{field}.svg"
        fig.savefig(path, format="svg", bbox_inches="tight")
        paths.append(path)
    return paths[0], paths[1]
