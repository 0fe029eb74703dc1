"""Two-block sparsity-in-levels compliance: explicit tail/head programs for
weighted-by-level l1 norms, their closed-form bounds, and optimal weights.

The central object is the two-block program B(L1, L2; w): the supremum of
(L1 b1^2 + L2 b2^2) / (k1 (a1^2 + b1^2) + k2 (a2^2 + b2^2)) over a_i >= b_i
>= 0 with the weighted balance sum_i k_i w_i a_i = sum_i (k_i + L_i) w_i b_i.
Its maximum over tail sizes (L1, L2) is the B value of the levels norm, and
minimizing that over the weight ratio yields the optimal weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .parallel import map_chunks

__all__ = [
    "TILDE_A",
    "LevelsWeights",
    "LevelsBound",
    "LevelsOptimum",
    "g1",
    "g1_max",
    "g2",
    "h1",
    "h2",
    "b_levels_bound",
    "b_levels_oracle",
    "b_levels_witness",
    "h1_H1",
    "optimal_weights",
    "sweep_levels",
]

# Admissible central interval for the energy fraction of level one.
TILDE_A = 2.0 * math.sqrt(3.0) - 3.0


def g1(u, a):
    """u / (a (u+1)^2 + 1): the single-level tail/head value at tail ratio u
    and energy fraction a in (0, 1]."""
    a = float(a)
    if not (0.0 < a <= 1.0):
        raise ValueError("a must lie in (0, 1]")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be nonnegative")
    out = u / (a * (u + 1.0) ** 2 + 1.0)
    return float(out) if out.ndim == 0 else out


def g1_max(a: float):
    """Maximizer sqrt(1 + 1/a) of g1(.; a) and the maximum value
    (sqrt(1 + 1/a) - 1) / 2."""
    if not (0.0 < a <= 1.0):
        raise ValueError("a must lie in (0, 1]")
    u_star = math.sqrt(1.0 + 1.0 / a)
    return u_star, 0.5 * (u_star - 1.0)


def g2(u, a):
    """u / ((a / (1-a)) u^2 + 2): the single-level lower-bound value.  The
    boundary a -> 1 overflows the ratio and returns 0."""
    a = float(a)
    if not (0.0 <= a <= 1.0):
        raise ValueError("a must lie in [0, 1]")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be nonnegative")
    if a == 1.0:
        out = np.zeros_like(u)
        return float(out) if out.ndim == 0 else out
    out = u / ((a / (1.0 - a)) * u * u + 2.0)
    return float(out) if out.ndim == 0 else out


def h1(u, v, a):
    return np.maximum(g1(u, a), g1(v, 1.0 - a))


def h2(u, v, a):
    return np.maximum(g2(u, a), g2(v, 1.0 - a))


@dataclass(frozen=True)
class LevelsWeights:
    """Strictly positive per-level weights (w1, w2)."""

    w1: float
    w2: float

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 > 0):
            raise ValueError("level weights must be strictly positive")

    def nu1(self, k1: int, k2: int) -> float:
        """Energy fraction of level one: (1 + k2 w2^2 / (k1 w1^2))^-1."""
        return 1.0 / (1.0 + (k2 * self.w2 **2) / (k1 * self.w1 **2))


@dataclass(frozen=True)
class LevelsBound:
    lower: float
    upper: float
    exact: bool


def _check_levels_args(k1, k2, L1, L2):
    if not (k1 >= 1 and k2 >= 1):
        raise ValueError("sparsities must be >= 1")
    if L1 < 0 or L2 < 0 or L1 + L2 == 0:
        raise ValueError("tail sizes must be nonnegative with L1 + L2 > 0")


def b_levels_bound(w: LevelsWeights, k1: int, k2: int, L1: int, L2: int) -> LevelsBound:
    """Closed-form sandwich for the two-block program value.

    lower = max_i g2(L_i/k_i; nu_i), upper = max_i g1(L_i/k_i; nu_i); the
    upper bound is attained when nu_i >= k_i / (k_i + L_i) for both levels.
    """
    _check_levels_args(k1, k2, L1, L2)
    nu1 = w.nu1(k1, k2)
    nu2 = 1.0 - nu1
    lower = max(g2(L1 / k1, nu1), g2(L2 / k2, nu2))
    upper = max(g1(L1 / k1, nu1), g1(L2 / k2, nu2))
    exact = nu1 >= k1 / (k1 + L1) and nu2 >= k2 / (k2 + L2)
    return LevelsBound(lower, upper, exact)


def _oracle_values(w: LevelsWeights, k1, k2, L1, L2, b1: np.ndarray) -> np.ndarray:
    """Objective of the two-block program on the slice b1 + b2 = 1, with the
    head energies minimized exactly (three-case formula)."""
    b1 = np.asarray(b1, dtype=float)
    b2 = 1.0 - b1
    w1, w2 = w.w1, w.w2
    lam = w1 * (k1 + L1) * b1 + w2 * (k2 + L2) * b2
    s = k1 * w1 * w1 + k2 * w2 * w2
    thresh = s * np.maximum(b1 / w1, b2 / w2)
    v_free = lam * lam / s
    c1 = k1 * b1 * b1 + (lam - k1 * w1 * b1) ** 2 / (k2 * w2 * w2)
    c2 = k2 * b2 * b2 + (lam - k2 * w2 * b2) ** 2 / (k1 * w1 * w1)
    v = np.where(lam >= thresh, v_free, np.minimum(c1, c2))
    num = L1 * b1 * b1 + L2 * b2 * b2
    return num / (v + k1 * b1 * b1 + k2 * b2 * b2)


def b_levels_oracle(w: LevelsWeights, k1: int, k2: int, L1: int, L2: int, grid: int, workers=None) -> float:
    """Numerical maximum of the two-block program by sweeping the tail split
    b1 on a regular grid of [0, 1] and solving the inner head minimization
    in closed form.  Independent of the sandwich bounds by construction."""
    _check_levels_args(k1, k2, L1, L2)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    chunk = 1 << 16
    n_chunks = (grid + chunk - 1) // chunk

    def one_chunk(i: int) -> float:
        j0 = i * chunk
        j1 = min(grid, j0 + chunk)
        idx = np.arange(j0, j1, dtype=float)
        b1 = idx / (grid - 1)
        return float(_oracle_values(w, k1, k2, L1, L2, b1).max())

    return max(map_chunks(one_chunk, n_chunks, workers))


def b_levels_witness(
    w: LevelsWeights, k1: int, k2: int, L1: int, L2: int, n1: int, n2: int, grid: int = 512
) -> np.ndarray:
    """Explicit near-maximizing descent vector of the two-block program,
    embedded in R^{n1+n2}: per level, alpha on the k_i head coordinates and
    beta on the k_i + L_i next ones.  The construction sits on the boundary
    of the descent cone of the levels norm."""
    _check_levels_args(k1, k2, L1, L2)
    if n1 < 2 * k1 + L1 or n2 < 2 * k2 + L2:
        raise ValueError("ambient blocks too small for the requested tails")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    b1_grid = np.arange(grid, dtype=float) / (grid - 1)
    vals = _oracle_values(w, k1, k2, L1, L2, b1_grid)
    b1 = float(b1_grid[int(np.argmax(vals))])
    b2 = 1.0 - b1
    w1, w2 = w.w1, w.w2
    lam = w1 * (k1 + L1) * b1 + w2 * (k2 + L2) * b2
    s = k1 * w1 * w1 + k2 * w2 * w2
    if lam >= s * max(b1 / w1, b2 / w2):
        a1, a2 = lam * w1 / s, lam * w2 / s
    else:
        c1 = k1 * b1 * b1 + (lam - k1 * w1 * b1) ** 2 / (k2 * w2 * w2)
        c2 = k2 * b2 * b2 + (lam - k2 * w2 * b2) ** 2 / (k1 * w1 * w1)
        if c1 <= c2:
            a1, a2 = b1, (lam - k1 * w1 * b1) / (k2 * w2)
        else:
            a1, a2 = (lam - k2 * w2 * b2) / (k1 * w1), b2
    z = np.zeros(n1 + n2)
    z[:k1] = a1
    z[k1 : 2 * k1 + L1] = b1
    z[n1 : n1 + k2] = a2
    z[n1 + k2 : n1 + 2 * k2 + L2] = b2
    return z


# ---------------------------------------------------------------------------
# Optimal weights
# ---------------------------------------------------------------------------


def _check_regime(k1, k2, n1, n2):
    if not (k1 >= 2 and k2 >= 2):
        raise ValueError("optimal-weight analysis requires k_i >= 2")
    if not (n1 >= 4 * k1 and n2 >= 4 * k2):
        raise ValueError("optimal-weight analysis requires n_i >= 4 k_i")


def _h1_grid(a: np.ndarray, k1, k2, n1, n2) -> np.ndarray:
    """max over integer tails of the per-level g1 values, using the two
    integer candidates around each level's continuous maximizer."""
    out = np.zeros_like(a)
    for kk, nn, nu in ((k1, n1, a), (k2, n2, 1.0 - a)):
        base = kk * np.sqrt(1.0 + 1.0 / nu)
        l_hi = nn - 2 * kk
        for cand in (np.floor(base), np.ceil(base)):
            L = np.clip(cand, 0.0, float(l_hi))
            r = L / kk
            np.maximum(out, r / (nu * (r + 1.0) ** 2 + 1.0), out)
    return out


def h1_H1(a: float, k1: int, k2: int, n1: int, n2: int) -> float:
    """Largest two-block bound at energy split (a, 1-a), maximized over all
    admissible integer tails; valid on the central interval."""
    _check_regime(k1, k2, n1, n2)
    if not (TILDE_A - 1e-12 <= a <= 1.0 - TILDE_A + 1e-12):
        raise ValueError("a must lie in the central interval")
    return float(_h1_grid(np.asarray([a], dtype=float), k1, k2, n1, n2)[0])


@dataclass(frozen=True)
class LevelsOptimum:
    """Optimal weight ratio for a two-level model with its diagnostics.

    c1 measures the angle between the optimal weights and (1/sqrt(k1),
    1/sqrt(k2)); c2 the gap between the corresponding necessary thresholds.
    """

    nu1_star: float
    ratio: float
    b_value: float
    delta_nec: float
    c1: float
    c2: float
    grid_size: int

    def to_obj(self) -> dict:
        return {
            "nu1_star": self.nu1_star,
            "ratio": self.ratio,
            "b_value": self.b_value,
            "delta_nec": self.delta_nec,
            "c1": self.c1,
            "c2": self.c2,
            "grid_size": self.grid_size,
        }


def optimal_weights(k1: int, k2: int, n1: int, n2: int, grid: int, workers=None) -> LevelsOptimum:
    """Grid-minimize the two-block bound over the central interval of energy
    splits and return the optimal weight ratio w2/w1 with diagnostics.

    Among grid ties the lowest split wins.  Chunked execution is
    bit-identical to serial for any worker count.
    """
    _check_regime(k1, k2, n1, n2)
    if grid < 1000:
        raise ValueError("grid must be >= 1000")
    span = 1.0 - 2.0 * TILDE_A
    chunk = 1 << 16
    n_chunks = (grid + chunk - 1) // chunk

    def one_chunk(i: int):
        j0 = i * chunk
        j1 = min(grid, j0 + chunk)
        idx = np.arange(j0, j1, dtype=float)
        a = TILDE_A + span * idx / (grid - 1)
        vals = _h1_grid(a, k1, k2, n1, n2)
        pos = int(np.argmin(vals))
        return float(vals[pos]), j0 + pos

    best_val, best_idx = math.inf, -1
    for val, idx in map_chunks(one_chunk, n_chunks, workers):
        if val < best_val:
            best_val, best_idx = val, idx
    nu1_star = TILDE_A + span * best_idx / (grid - 1)
    ratio = math.sqrt((k1 / k2) * (1.0 / nu1_star - 1.0))
    delta_star = 1.0 / (1.0 + 2.0 * best_val)
    delta_ref = 1.0 / (1.0 + 2.0 * h1_H1(0.5, k1, k2, n1, n2))
    w_star = np.array([1.0, ratio])
    w_ref = np.array([1.0 / math.sqrt(k1), 1.0 / math.sqrt(k2)])
    cosine = float(w_star @ w_ref / (np.linalg.norm(w_star) * np.linalg.norm(w_ref)))
    return LevelsOptimum(
        nu1_star=nu1_star,
        ratio=ratio,
        b_value=best_val,
        delta_nec=delta_star,
        c1=abs(1.0 - cosine),
        c2=abs(delta_star - delta_ref),
        grid_size=grid,
    )


def sweep_levels(k_min: int, k_max: int, grid: int, workers=None, n_factor: int = 4) -> list:
    """Optimal-weight diagnostics for every pair (k1, k2) in the square
    range, with ambient blocks n_i = n_factor * k_i.  Returns one row dict
    per pair, ordered by (k1, k2)."""
    if k_min < 2 or k_max < k_min:
        raise ValueError("need 2 <= k_min <= k_max")
    pairs = [(a, b) for a in range(k_min, k_max + 1) for b in range(k_min, k_max + 1)]

    def one_pair(i: int) -> dict:
        k1, k2 = pairs[i]
        opt = optimal_weights(k1, k2, n_factor * k1, n_factor * k2, grid, workers=1)
        return {
            "k1": k1,
            "k2": k2,
            "nu1_star": opt.nu1_star,
            "ratio": opt.ratio,
            "delta_nec": opt.delta_nec,
            "c1": opt.c1,
            "c2": opt.c2,
        }

    return map_chunks(one_pair, len(pairs), workers)
