"""Monte Carlo estimation of sphere-volume compliance measures.

The uniform measure quantifies the share of the unit sphere left free by the
descent cone of a regularizer at a model set; the non-uniform variant takes
the worst single model point.  Sampling is chunked over counter-based
streams, so estimates are pure functions of (seed, sample counts) and are
identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .models import Levels, LowRankSym, ModelSet, Sparse, SymMatrix, Vector, ambient_dim
from .parallel import chunk_generator, chunk_sizes, map_chunks
from .regularizers import LevelsL1, Nuclear, Regularizer, WeightedL1
from .sampling import model_unit_rows, sphere_rows, symmetric_sphere

__all__ = [
    "VolumeEstimate",
    "wilson_interval",
    "descent_cone_mask",
    "point_cone_mask",
    "estimate_au",
    "estimate_anu",
    "experiment_3d_1sparse",
]

_SLACK = 1e-12


@dataclass(frozen=True)
class VolumeEstimate:
    """Share of the unit sphere outside the tested cone, with a Wilson 95%
    confidence interval."""

    estimate: float
    ci_low: float
    ci_high: float
    samples: int
    seed: int

    def to_obj(self) -> dict:
        return {
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "samples": self.samples,
            "seed": self.seed,
        }


def wilson_interval(successes: int, total: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion (robust near 0/1)."""
    if total < 1:
        raise ValueError("total must be >= 1")
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _require_exact(reg: Regularizer) -> None:
    if not isinstance(reg, (WeightedL1, LevelsL1, Nuclear)):
        raise ValueError("volume estimation needs a regularizer with an exact cone test")


def descent_cone_mask(model: ModelSet, reg: Regularizer, points) -> np.ndarray:
    """Vectorized membership of each sampled point in the descent cone of the
    regularizer at the model set (exact closed-form variants only).

    ``points`` holds one sample per row for vector models, or a stacked
    (count, n, n) array of symmetric matrices for the low-rank model.  The
    sorted-magnitude evaluation makes the mask invariant, bit for bit, under
    signed coordinate permutations applied jointly to points and weights.
    """
    _require_exact(reg)
    pts = np.asarray(points, dtype=float)
    if isinstance(model, Sparse):
        if not isinstance(reg, WeightedL1) or reg.n != model.n:
            raise ValueError("sparse models pair with a weighted l1 of the same length")
        s = np.sort(reg.weights * np.abs(pts), axis=1)[:, ::-1]
        head = s[:, : model.k].sum(axis=1)
        total = s.sum(axis=1)
        return head >= (total - head) - _SLACK * total
    if isinstance(model, Levels):
        if not isinstance(reg, LevelsL1) or (reg.n1, reg.n2) != (model.n1, model.n2):
            raise ValueError("levels models pair with a levels l1 of the same blocks")
        s1 = np.sort(reg.w1 * np.abs(pts[:, : model.n1]), axis=1)[:, ::-1]
        s2 = np.sort(reg.w2 * np.abs(pts[:, model.n1 :]), axis=1)[:, ::-1]
        head = s1[:, : model.k1].sum(axis=1) + s2[:, : model.k2].sum(axis=1)
        total = s1.sum(axis=1) + s2.sum(axis=1)
        return head >= (total - head) - _SLACK * total
    if isinstance(model, LowRankSym):
        if not isinstance(reg, Nuclear):
            raise ValueError("low-rank models pair with the nuclear norm")
        mags = np.sort(np.abs(np.linalg.eigvalsh(pts)), axis=1)[:, ::-1]
        head = mags[:, : model.r].sum(axis=1)
        total = mags.sum(axis=1)
        return head >= (total - head) - _SLACK * total
    raise ValueError("unknown model variant")


def point_cone_mask(reg: Regularizer, x, points) -> np.ndarray:
    """Vectorized membership in the descent cone at a single point x (the
    symmetrized test through one-sided slopes along +-z)."""
    _require_exact(reg)
    pts = np.asarray(points, dtype=float)
    if isinstance(reg, (WeightedL1, LevelsL1)):
        if isinstance(reg, WeightedL1):
            w = reg.weights
        else:
            w = np.concatenate([np.full(reg.n1, reg.w1), np.full(reg.n2, reg.w2)])
        xv = x.entries if isinstance(x, Vector) else np.asarray(x, dtype=float)
        on = xv != 0.0
        lin = pts[:, on] @ (w[on] * np.sign(xv[on]))
        kink = np.abs(pts[:, ~on]) @ w[~on]
        tol = _SLACK * (np.abs(pts) @ w)
        return np.minimum(lin + kink, -lin + kink) <= tol
    # Nuclear norm: batched small-step slopes with Richardson refinement.
    xd = x.to_dense() if isinstance(x, SymMatrix) else np.asarray(x, dtype=float)
    f0 = float(np.abs(np.linalg.eigvalsh(xd)).sum())
    nz = np.linalg.norm(pts, axis=(1, 2))
    nz = np.where(nz == 0.0, 1.0, nz)
    h = (1e-5 * max(np.linalg.norm(xd), 1.0) / nz).reshape(-1, 1, 1)

    def slopes(direction: float) -> np.ndarray:
        v1 = np.abs(np.linalg.eigvalsh(xd + direction * h * pts)).sum(axis=1)
        v2 = np.abs(np.linalg.eigvalsh(xd + direction * 0.5 * h * pts)).sum(axis=1)
        s1 = (v1 - f0) / h[:, 0, 0]
        s2 = (v2 - f0) / (0.5 * h[:, 0, 0])
        return 2.0 * s2 - s1

    tol = 1e-9 * (f0 + np.linalg.norm(pts, axis=(1, 2)))
    return np.minimum(slopes(1.0), slopes(-1.0)) <= tol


def _sample_ambient(gen: np.random.Generator, count: int, model: ModelSet) -> np.ndarray:
    if isinstance(model, LowRankSym):
        return symmetric_sphere(gen, count, model.n)
    return sphere_rows(gen, count, ambient_dim(model))


def estimate_au(model: ModelSet, reg: Regularizer, samples: int, seed: int, workers=None) -> VolumeEstimate:
    """Uniform-measure compliance: one minus the sphere fraction covered by
    the descent cone at the whole model set."""
    _require_exact(reg)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sizes = chunk_sizes(samples)

    def one_chunk(i: int) -> int:
        gen = chunk_generator(seed, i)
        pts = _sample_ambient(gen, sizes[i], model)
        return int(descent_cone_mask(model, reg, pts).sum())

    accepted = sum(map_chunks(one_chunk, len(sizes), workers))
    lo, hi = wilson_interval(accepted, samples)
    return VolumeEstimate(1.0 - accepted / samples, 1.0 - hi, 1.0 - lo, samples, seed)


def _sample_model_points(gen: np.random.Generator, count: int, model: ModelSet):
    if isinstance(model, LowRankSym):
        out = []
        for _ in range(count):
            g = gen.standard_normal((model.n, model.n))
            q, r = np.linalg.qr(g)
            q = q * np.sign(np.diag(r))
            vals = np.zeros(model.n)
            vals[: model.r] = gen.standard_normal(model.r)
            m = (q * vals) @ q.T
            nrm = np.linalg.norm(m)
            out.append(m / (nrm if nrm > 0 else 1.0))
        return out
    return list(model_unit_rows(gen, count, model))


def estimate_anu(
    model: ModelSet,
    reg: Regularizer,
    x_samples: int,
    sphere_samples: int,
    seed: int,
    workers=None,
) -> VolumeEstimate:
    """Non-uniform compliance, upper bound: one minus the largest per-point
    cone fraction over sampled model points.

    The outer supremum is sampled, so the returned estimate can only
    overestimate the true non-uniform measure.
    """
    _require_exact(reg)
    if x_samples < 1 or sphere_samples < 1:
        raise ValueError("sample counts must be >= 1")
    xs = _sample_model_points(chunk_generator(seed, 1 << 32), x_samples, model)
    sizes = chunk_sizes(sphere_samples)
    best_acc = -1

    for j, xrow in enumerate(xs):
        if isinstance(model, LowRankSym):
            x = SymMatrix.from_dense(xrow)
        else:
            x = Vector(xrow)

        def one_chunk(i: int, _x=x, _j=j) -> int:
            gen = chunk_generator(seed, ((_j + 2) << 32) + i)
            pts = _sample_ambient(gen, sizes[i], model)
            return int(point_cone_mask(reg, _x, pts).sum())

        acc = sum(map_chunks(one_chunk, len(sizes), workers))
        best_acc = max(best_acc, acc)
    lo, hi = wilson_interval(best_acc, sphere_samples)
    return VolumeEstimate(1.0 - best_acc / sphere_samples, 1.0 - hi, 1.0 - lo, sphere_samples, seed)


def experiment_3d_1sparse(weight_grid: Sequence[Tuple[float, float]], samples: int, seed: int, workers=None) -> dict:
    """Uniform-measure ranking of weighted l1 norms (1, r2, r3) for 1-sparse
    vectors in R^3 over a grid of weight ratios.

    All grid entries are evaluated on the same sphere samples, so duplicated
    ratios produce identical estimates.  Reports whether the uniform weights
    rank first and the worst z-test margin against grid points at uniform
    ratio distance >= 0.5.
    """
    grid = [(float(a), float(b)) for a, b in weight_grid]
    if not grid:
        raise ValueError("weight grid must be non-empty")
    if any(a <= 0 or b <= 0 for a, b in grid):
        raise ValueError("weight ratios must be positive")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    model = Sparse(1, 3)
    regs = [WeightedL1(np.array([1.0, a, b])) for a, b in grid]
    sizes = chunk_sizes(samples)

    def one_chunk(i: int) -> np.ndarray:
        gen = chunk_generator(seed, i)
        pts = sphere_rows(gen, sizes[i], 3)
        return np.array([int(descent_cone_mask(model, r, pts).sum()) for r in regs])

    counts = sum(map_chunks(one_chunk, len(sizes), workers))
    entries = []
    for (a, b), acc in zip(grid, counts):
        lo, hi = wilson_interval(int(acc), samples)
        entries.append(
            {
                "ratios": [a, b],
                "accepted": int(acc),
                "estimate": 1.0 - int(acc) / samples,
                "ci_low": 1.0 - hi,
                "ci_high": 1.0 - lo,
            }
        )
    order = sorted(range(len(entries)), key=lambda j: (-entries[j]["estimate"], j))
    for rank, j in enumerate(order, start=1):
        entries[j]["rank"] = rank
    best = order[0]

    uniform_idx = [j for j, (a, b) in enumerate(grid) if a == 1.0 and b == 1.0]
    uniform_rank = entries[uniform_idx[0]]["rank"] if uniform_idx else None
    far = [j for j, (a, b) in enumerate(grid) if max(abs(a - 1.0), abs(b - 1.0)) >= 0.5]
    min_margin = None
    p_best = counts[best] / samples
    for j in far:
        if j == best:
            continue
        p = counts[j] / samples
        se = math.sqrt(p_best * (1 - p_best) / samples + p * (1 - p) / samples)
        z = (p - p_best) / se if se > 0 else math.inf
        min_margin = z if min_margin is None else min(min_margin, z)
    return {
        "entries": entries,
        "samples": samples,
        "seed": seed,
        "uniform_rank": uniform_rank,
        "uniform_is_best": (uniform_rank == 1) if uniform_rank is not None else None,
        "min_z_margin_far": min_margin,
    }
