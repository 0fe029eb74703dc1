"""Random samplers for ambient unit spheres and model sets."""

from __future__ import annotations

import numpy as np

from .models import Levels, LowRankSym, ModelSet, Sparse

__all__ = ["sphere_rows", "symmetric_sphere", "model_unit_rows"]


def sphere_rows(gen: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Uniform points on the unit sphere of R^dim, one per row."""
    g = gen.standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


def symmetric_sphere(gen: np.random.Generator, count: int, side: int) -> np.ndarray:
    """Uniform points on the Frobenius unit sphere of symmetric matrices,
    stacked as (count, side, side)."""
    g = gen.standard_normal((count, side, side))
    a = 0.5 * (g + g.transpose(0, 2, 1))  # isotropic in the symmetric space
    norms = np.linalg.norm(a, axis=(1, 2)).reshape(-1, 1, 1)
    norms[norms == 0.0] = 1.0
    return a / norms


def model_unit_rows(gen: np.random.Generator, count: int, model: ModelSet) -> np.ndarray:
    """Unit-norm model elements: random support, Gaussian on the support.

    Vector models only (sparse and levels); rows of the returned array.
    """
    if isinstance(model, LowRankSym):
        raise ValueError("model_unit_rows handles vector models only")
    if isinstance(model, Sparse):
        n, pieces = model.n, [(model.k, model.n, 0)]
    else:
        assert isinstance(model, Levels)
        n = model.n1 + model.n2
        pieces = [(model.k1, model.n1, 0), (model.k2, model.n2, model.n1)]
    out = np.zeros((count, n))
    for k, width, offset in pieces:
        cols = np.argsort(gen.random((count, width)), axis=1)[:, :k] + offset
        vals = gen.standard_normal((count, k))
        np.put_along_axis(out, cols, vals, axis=1)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return out / norms
