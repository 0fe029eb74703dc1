"""Convex regularizers, their gauges, and exact descent-cone membership.

Four regularizer families are provided: weighted l1 norms, two-block
weighted-by-level l1 norms, the nuclear norm on symmetric matrices, and
atomic gauges of finite atom sets (evaluated by linear programming).  The
first three admit exact descent-cone tests; the atomic variant is tested by
witness search, which never reports a false positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .models import (
    Levels,
    LowRankSym,
    ModelSet,
    NumericalError,
    Point,
    Sparse,
    SymMatrix,
    Vector,
    eig_sym,
    hilbert_norm,
    point_add,
    point_scale,
    point_sub,
    point_to_obj,
    point_from_obj,
    project_model,
)

__all__ = [
    "WeightedL1",
    "LevelsL1",
    "Nuclear",
    "FiniteAtomic",
    "Regularizer",
    "GaugeCertificate",
    "evaluate",
    "gauge_lp",
    "in_descent_cone",
    "descent_direction_test",
    "build_descent_vector",
    "scale_regularizer",
    "reg_to_obj",
    "reg_from_obj",
]

# Relative slack used by the closed-form cone tests; descent cones are
# closed, so boundary points belong to them.
_CONE_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedL1:
    """R(x) = sum_i w_i |x_i| with strictly positive weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if w.size == 0 or not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


@dataclass(frozen=True)
class LevelsL1:
    """R(x1, x2) = w1 ||x1||_1 + w2 ||x2||_1 on R^{n1} x R^{n2}."""

    w1: float
    w2: float
    n1: int
    n2: int

    def __post_init__(self):
        if not (self.w1 > 0 and self.w2 > 0):
            raise ValueError("level weights must be strictly positive")
        if not (self.n1 >= 1 and self.n2 >= 1):
            raise ValueError("block lengths must be positive")


@dataclass(frozen=True)
class Nuclear:
    """Sum of absolute eigenvalues of a symmetric matrix."""


@dataclass(frozen=True, eq=False)
class FiniteAtomic:
    """Atomic gauge of a finite, nonzero atom set."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("atom list must be non-empty")
        for a in atoms:
            if hilbert_norm(a) == 0.0:
                raise ValueError("atoms must be nonzero")
        object.__setattr__(self, "atoms", atoms)


Regularizer = Union[WeightedL1, LevelsL1, Nuclear, FiniteAtomic]


def reg_to_obj(reg: Regularizer) -> dict:
    if isinstance(reg, WeightedL1):
        return {"type": "weighted_l1", "weights": [float(w) for w in reg.weights]}
    if isinstance(reg, LevelsL1):
        return {"type": "levels_l1", "w1": reg.w1, "w2": reg.w2, "n1": reg.n1, "n2": reg.n2}
    if isinstance(reg, Nuclear):
        return {"type": "nuclear"}
    return {"type": "finite_atomic", "atoms": [point_to_obj(a) for a in reg.atoms]}


def reg_from_obj(obj: dict) -> Regularizer:
    kind = obj["type"]
    if kind == "weighted_l1":
        return WeightedL1(np.asarray(obj["weights"], dtype=float))
    if kind == "levels_l1":
        return LevelsL1(float(obj["w1"]), float(obj["w2"]), int(obj["n1"]), int(obj["n2"]))
    if kind == "nuclear":
        return Nuclear()
    if kind == "finite_atomic":
        return FiniteAtomic(tuple(point_from_obj(a) for a in obj["atoms"]))
    raise ValueError(f"unknown regularizer type {kind!r}")


def scale_regularizer(reg: Regularizer, lam: float) -> Regularizer:
    """Regularizer evaluating to lam * R; descent cones are unchanged."""
    if lam <= 0:
        raise ValueError("scale must be positive")
    if isinstance(reg, WeightedL1):
        return WeightedL1(lam * reg.weights)
    if isinstance(reg, LevelsL1):
        return LevelsL1(lam * reg.w1, lam * reg.w2, reg.n1, reg.n2)
    if isinstance(reg, FiniteAtomic):
        return FiniteAtomic(tuple(point_scale(a, 1.0 / lam) for a in reg.atoms))
    raise ValueError("the nuclear norm has no scaled variant in this family")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(reg: Regularizer, x: Point) -> float:
    """R(x); +inf for an atomic gauge outside the conic hull of its atoms."""
    if isinstance(reg, WeightedL1):
        if not isinstance(x, Vector) or x.n != reg.n:
            raise ValueError("weighted l1 expects a vector matching the weights")
        return float(np.dot(reg.weights, np.abs(x.entries)))
    if isinstance(reg, LevelsL1):
        if not isinstance(x, Vector) or x.n != reg.n1 + reg.n2:
            raise ValueError("levels l1 expects a vector of length n1 + n2")
        z1, z2 = x.entries[: reg.n1], x.entries[reg.n1 :]
        return float(reg.w1 * np.abs(z1).sum() + reg.w2 * np.abs(z2).sum())
    if isinstance(reg, Nuclear):
        if not isinstance(x, SymMatrix):
            raise ValueError("nuclear norm expects a symmetric matrix")
        return float(np.abs(eig_sym(x).values).sum())
    return gauge_lp(list(reg.atoms), x).value


# ---------------------------------------------------------------------------
# Atomic gauge by linear programming
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeCertificate:
    """Optimal gauge value with the certifying conic coefficients.

    ``value`` is +inf and ``coefficients`` is empty when the point lies
    outside the conic hull of the atoms.
    """

    value: float
    coefficients: np.ndarray

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


def _coords(p: Point) -> np.ndarray:
    # Packed coordinates; the equality constraint is equivalent in packed
    # and dense form since packing is a linear bijection.
    return p.entries if isinstance(p, Vector) else p.upper


def _bland_entering(costs: np.ndarray, tol: float) -> int:
    idx = np.nonzero(costs < -tol)[0]
    return int(idx[0]) if idx.size else -1


def _pivot(T: np.ndarray, basis: list, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _simplex_min(T: np.ndarray, basis: list, ncols: int, tol: float) -> None:
    """Run Bland's-rule simplex on a tableau whose last row holds reduced
    costs and last column the right-hand side. Terminates by anti-cycling."""
    while True:
        col = _bland_entering(T[-1, :ncols], tol)
        if col < 0:
            return
        rows = np.nonzero(T[:-1, col] > tol)[0]
        if rows.size == 0:
            raise NumericalError("unbounded pivot in gauge LP")
        ratios = T[rows, -1] / T[rows, col]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-15 * (1.0 + abs(best))]
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, basis, row, col)


def gauge_lp(atoms: list, x: Point, tol: float = 1e-9) -> GaugeCertificate:
    """Atomic gauge of x: minimize sum(mu) over mu >= 0 with sum mu_j a_j = x.

    Solved by a dense two-phase simplex with Bland's rule.  An infeasible
    phase one certifies that x is outside the conic hull of the atoms.
    """
    if not atoms:
        raise ValueError("atom list must be non-empty")
    cols = []
    xc = _coords(x)
    for a in atoms:
        ac = _coords(a)
        if ac.shape != xc.shape or type(a) is not type(x):
            raise ValueError("atoms must live in the same space as x")
        cols.append(ac)
    A = np.column_stack(cols)
    b = xc.copy()
    m, n = A.shape
    flip = b < 0
    A = A.copy()
    A[flip] *= -1
    b = b.copy()
    b[flip] *= -1
    feas_tol = tol * max(1.0, float(np.abs(b).sum()))

    # Phase one: artificial basis, minimize the artificial mass.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    _simplex_min(T, basis, n + m, tol)
    if -T[-1, -1] > feas_tol:
        return GaugeCertificate(math.inf, np.zeros(0))

    # Drive remaining artificials out of the basis (or drop redundant rows).
    keep = []
    for r in range(m):
        if basis[r] >= n:
            piv = np.nonzero(np.abs(T[r, :n]) > tol)[0]
            if piv.size == 0:
                continue  # redundant constraint
            _pivot(T, basis, r, int(piv[0]))
        keep.append(r)
    rows = keep + [m]
    T = T[np.ix_(rows, list(range(n)) + [n + m])]
    basis = [basis[r] for r in keep]

    # Phase two: true objective (all-ones costs).
    c = np.ones(n)
    T[-1, :n] = c
    T[-1, -1] = 0.0
    for r, bc in enumerate(basis):
        T[-1] -= c[bc] * T[r]
    _simplex_min(T, basis, n, tol)

    mu = np.zeros(n)
    for r, bc in enumerate(basis):
        mu[bc] = max(T[r, -1], 0.0)
    return GaugeCertificate(float(mu.sum()), mu)


# ---------------------------------------------------------------------------
# Descent cone membership
# ---------------------------------------------------------------------------


def _sorted_weighted_mags(w: np.ndarray, z: np.ndarray) -> np.ndarray:
    # Sorting first makes the head/tail sums invariant (bit for bit) under
    # coordinate permutations and sign changes.
    return np.sort(w * np.abs(z))[::-1]


def _topk_split(w: np.ndarray, z: np.ndarray, k: int):
    s = _sorted_weighted_mags(w, z)
    head = float(s[:k].sum())
    total = float(s.sum())
    return head, total - head


def in_descent_cone(reg: Regularizer, model: ModelSet, z: Point, trials: int = 64, seed: int = 0) -> bool:
    """Exact membership of z in the descent cone of the regularizer at the
    model set.

    Weighted l1, levels l1 and nuclear pairings are decided in closed form
    (largest weighted magnitudes against the rest).  For a finite atomic
    gauge the test searches for a witness model point among the atoms and
    random conic combinations of them: a True answer is certified, a False
    answer means no witness was found.
    """
    if isinstance(reg, WeightedL1):
        if not isinstance(model, Sparse) or reg.n != model.n:
            raise ValueError("weighted l1 pairs with a sparse model of the same length")
        if not isinstance(z, Vector) or z.n != model.n:
            raise ValueError("dimension mismatch")
        head, rest = _topk_split(reg.weights, z.entries, model.k)
        return head >= rest - _CONE_SLACK * (head + rest)
    if isinstance(reg, LevelsL1):
        if not isinstance(model, Levels) or (reg.n1, reg.n2) != (model.n1, model.n2):
            raise ValueError("levels l1 pairs with a levels model of the same block sizes")
        if not isinstance(z, Vector) or z.n != model.n1 + model.n2:
            raise ValueError("dimension mismatch")
        z1, z2 = model.blocks(z.entries)
        h1, r1 = _topk_split(np.full(model.n1, reg.w1), z1, model.k1)
        h2, r2 = _topk_split(np.full(model.n2, reg.w2), z2, model.k2)
        head, rest = h1 + h2, r1 + r2
        return head >= rest - _CONE_SLACK * (head + rest)
    if isinstance(reg, Nuclear):
        if not isinstance(model, LowRankSym):
            raise ValueError("nuclear pairs with a symmetric low-rank model")
        if not isinstance(z, SymMatrix) or z.side != model.n:
            raise ValueError("dimension mismatch")
        mags = np.abs(eig_sym(z).values)
        head = float(mags[: model.r].sum())
        rest = float(mags[model.r :].sum())
        return head >= rest - _CONE_SLACK * (head + rest)
    if isinstance(reg, FiniteAtomic):
        return _atomic_witness_search(reg, model, z, trials, seed)
    raise ValueError("unknown regularizer variant")


def _atomic_witness_search(reg: FiniteAtomic, model: ModelSet, z: Point, trials: int, seed: int) -> bool:
    if hilbert_norm(z) == 0.0:
        return True
    candidates = list(reg.atoms)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    n_atoms = len(reg.atoms)
    for _ in range(trials):
        size = int(rng.integers(1, min(3, n_atoms) + 1))
        picks = rng.choice(n_atoms, size=size, replace=False)
        coefs = rng.random(size) + 1e-3
        cand = point_scale(reg.atoms[picks[0]], coefs[0])
        for j in range(1, size):
            cand = point_add(cand, point_scale(reg.atoms[picks[j]], coefs[j]))
        candidates.append(cand)
    for x in candidates:
        nx = hilbert_norm(x)
        if nx == 0.0:
            continue
        gap = hilbert_norm(point_sub(x, project_model(model, x)))
        if gap > 1e-12 * nx:
            continue  # candidate left the model set; unusable as a witness
        if not math.isfinite(evaluate(reg, x)):
            continue
        if descent_direction_test(reg, x, z):
            return True
    return False


def descent_direction_test(reg: Regularizer, x: Point, z: Point) -> bool:
    """True iff some nonzero multiple of z is a non-increase direction of R
    at x, i.e. z belongs to the symmetrized descent cone of R at x.

    Polyhedral regularizers are decided exactly through one-sided directional
    derivatives; the nuclear norm uses small-step slopes with Richardson
    refinement.
    """
    if hilbert_norm(z) == 0.0:
        return True
    if isinstance(reg, WeightedL1):
        if not isinstance(x, Vector) or not isinstance(z, Vector) or x.n != z.n or x.n != reg.n:
            raise ValueError("dimension mismatch")
        d_pos = _weighted_l1_slope(reg.weights, x.entries, z.entries)
        d_neg = _weighted_l1_slope(reg.weights, x.entries, -z.entries)
        tol = _CONE_SLACK * float(np.dot(reg.weights, np.abs(z.entries)))
        return min(d_pos, d_neg) <= tol
    if isinstance(reg, LevelsL1):
        if not isinstance(x, Vector) or not isinstance(z, Vector) or x.n != z.n or x.n != reg.n1 + reg.n2:
            raise ValueError("dimension mismatch")
        w = np.concatenate([np.full(reg.n1, reg.w1), np.full(reg.n2, reg.w2)])
        d_pos = _weighted_l1_slope(w, x.entries, z.entries)
        d_neg = _weighted_l1_slope(w, x.entries, -z.entries)
        tol = _CONE_SLACK * float(np.dot(w, np.abs(z.entries)))
        return min(d_pos, d_neg) <= tol
    if isinstance(reg, Nuclear):
        d_pos = _nuclear_slope(x, z)
        d_neg = _nuclear_slope(x, point_scale(z, -1.0))
        tol = 1e-9 * (evaluate(reg, x) + hilbert_norm(z))
        return min(d_pos, d_neg) <= tol
    if isinstance(reg, FiniteAtomic):
        rx = evaluate(reg, x)
        if not math.isfinite(rx):
            raise ValueError("descent test requires R(x) finite")
        d_pos = _gauge_slope(reg, x, z, rx)
        d_neg = _gauge_slope(reg, x, point_scale(z, -1.0), rx)
        tol = 1e-9 * (rx + hilbert_norm(z))
        return min(d_pos, d_neg) <= tol
    raise ValueError("unknown regularizer variant")


def _weighted_l1_slope(w: np.ndarray, x: np.ndarray, z: np.ndarray) -> float:
    # One-sided directional derivative of sum w|.| at x along z, exact on
    # the linearity cell containing x.
    on = x != 0.0
    return float(np.dot(w[on] * np.sign(x[on]), z[on]) + np.dot(w[~on], np.abs(z[~on])))


def _nuclear_slope(x: Point, z: Point) -> float:
    if not isinstance(x, SymMatrix) or not isinstance(z, SymMatrix) or x.side != z.side:
        raise ValueError("dimension mismatch")
    nz = hilbert_norm(z)
    f0 = float(np.abs(eig_sym(x).values).sum()) if hilbert_norm(x) > 0 else 0.0

    def val(t: float) -> float:
        return float(np.abs(eig_sym(point_add(x, point_scale(z, t))).values).sum())

    h = 1e-5 * max(hilbert_norm(x), nz) / nz
    s1 = (val(h) - f0) / h
    s2 = (val(0.5 * h) - f0) / (0.5 * h)
    return 2.0 * s2 - s1  # Richardson: removes the O(h) curvature term


def _gauge_slope(reg: FiniteAtomic, x: Point, z: Point, rx: float) -> float:
    # Piecewise-linear slope: halve the probe step until two successive
    # slopes agree, which happens below the first breakpoint.
    atoms = list(reg.atoms)
    nz = hilbert_norm(z)
    scale = max(rx, 1.0)
    t = max(hilbert_norm(x), nz) / nz
    prev = None
    for _ in range(60):
        v = gauge_lp(atoms, point_add(x, point_scale(z, t))).value
        slope = (v - rx) / t if math.isfinite(v) else math.inf
        if prev is not None and math.isfinite(slope) and abs(slope - prev) <= 1e-11 * scale:
            return slope
        prev = slope if math.isfinite(slope) else None
        t *= 0.5
    return prev if prev is not None else math.inf


def build_descent_vector(reg: Regularizer, v0: Point, v1: Point) -> Point:
    """z = v1 - alpha v0 with alpha = max(R(v1)/R(v0), 1).

    For positively homogeneous R and v0 in the model set, z always lies in
    the descent cone of R at the model.
    """
    r0 = evaluate(reg, v0)
    if not (r0 > 0.0):
        raise ValueError("descent construction requires R(v0) > 0")
    r1 = evaluate(reg, v1)
    if not math.isfinite(r1):
        raise ValueError("descent construction requires R(v1) finite")
    alpha = max(r1 / r0, 1.0)
    return point_sub(v1, point_scale(v0, alpha))
