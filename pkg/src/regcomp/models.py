"""Low-dimensional model sets, ambient-space points, and their projections.

Three model families are supported: k-sparse vectors, rank-r symmetric
matrices (Frobenius geometry), and two-block sparsity in levels.  The module
also provides the gauge norm induced by a model (the k-support norm for
sparse models, its spectral analogue for low-rank models) together with a
brute-force oracle for it, and a cyclic-Jacobi symmetric eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "NumericalError",
    "Vector",
    "SymMatrix",
    "Point",
    "Sparse",
    "LowRankSym",
    "Levels",
    "ModelSet",
    "EigenDecomposition",
    "eig_sym",
    "ambient_dim",
    "hilbert_norm",
    "hilbert_inner",
    "point_add",
    "point_scale",
    "point_sub",
    "point_to_obj",
    "point_from_obj",
    "model_to_obj",
    "model_from_obj",
    "secant_model",
    "project_model",
    "project_secant",
    "model_norm",
    "model_norm_oracle",
]


class NumericalError(RuntimeError):
    """An iterative numerical routine failed to converge."""


# ---------------------------------------------------------------------------
# Points of the ambient Hilbert space
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Vector:
    """Dense real vector in R^n."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector entries must be finite")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.size


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Dense real symmetric matrix stored as its packed upper triangle.

    The packed order is that of ``np.triu_indices(side)``; the packed/dense
    round trip is exact.
    """

    side: int
    upper: np.ndarray

    def __post_init__(self):
        arr = np.array(self.upper, dtype=float, copy=True).reshape(-1)
        want = self.side * (self.side + 1) // 2
        if arr.size != want:
            raise ValueError(f"packed upper triangle must have length {want}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "upper", arr)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.side, self.side))
        iu = np.triu_indices(self.side)
        a[iu] = self.upper
        a.T[iu] = self.upper
        return a

    @classmethod
    def from_dense(cls, a, tol: float = 1e-10) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        if np.abs(a - a.T).max(initial=0.0) > tol * scale:
            raise ValueError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        return cls(a.shape[0], a[np.triu_indices(a.shape[0])])


Point = Union[Vector, SymMatrix]


def _as_array(p: Point) -> np.ndarray:
    """Flat coordinate representation (dense for matrices)."""
    if isinstance(p, Vector):
        return p.entries
    return p.to_dense()


def hilbert_norm(p: Point) -> float:
    """l2 norm for vectors, Frobenius norm for symmetric matrices."""
    return float(np.linalg.norm(_as_array(p)))


def hilbert_inner(p: Point, q: Point) -> float:
    a, b = _as_array(p), _as_array(q)
    if a.shape != b.shape:
        raise ValueError("points live in different spaces")
    return float(np.sum(a * b))


def point_add(p: Point, q: Point) -> Point:
    if isinstance(p, Vector) and isinstance(q, Vector):
        return Vector(p.entries + q.entries)
    if isinstance(p, SymMatrix) and isinstance(q, SymMatrix):
        if p.side != q.side:
            raise ValueError("matrix sides differ")
        return SymMatrix(p.side, p.upper + q.upper)
    raise ValueError("points live in different spaces")


def point_scale(p: Point, c: float) -> Point:
    if isinstance(p, Vector):
        return Vector(c * p.entries)
    return SymMatrix(p.side, c * p.upper)


def point_sub(p: Point, q: Point) -> Point:
    return point_add(p, point_scale(q, -1.0))


def point_to_obj(p: Point):
    """JSON-ready representation: plain array, or {"side", "upper"}."""
    if isinstance(p, Vector):
        return [float(x) for x in p.entries]
    return {"side": p.side, "upper": [float(x) for x in p.upper]}


def point_from_obj(obj) -> Point:
    if isinstance(obj, dict):
        return SymMatrix(int(obj["side"]), np.asarray(obj["upper"], dtype=float))
    return Vector(np.asarray(obj, dtype=float))


# ---------------------------------------------------------------------------
# Model sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sparse:
    """Vectors with at most k nonzero entries in R^n."""

    k: int
    n: int

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError("sparse model requires 1 <= k <= n")

    @property
    def secant_fills_space(self) -> bool:
        """True when the secant set is all of R^n (2k >= n), in which case
        uniform recovery by a non-invertible operator is impossible."""
        return 2 * self.k >= self.n


@dataclass(frozen=True)
class LowRankSym:
    """Symmetric n x n matrices of rank at most r."""

    r: int
    n: int

    def __post_init__(self):
        if not (1 <= self.r <= self.n):
            raise ValueError("low-rank model requires 1 <= r <= n")

    @property
    def secant_fills_space(self) -> bool:
        return 2 * self.r >= self.n


@dataclass(frozen=True)
class Levels:
    """Two-block sparsity in levels: block i of length n_i is k_i-sparse."""

    k1: int
    k2: int
    n1: int
    n2: int

    def __post_init__(self):
        if not (1 <= self.k1 <= self.n1 and 1 <= self.k2 <= self.n2):
            raise ValueError("levels model requires 1 <= k_i <= n_i")

    @property
    def secant_fills_space(self) -> bool:
        return 2 * self.k1 >= self.n1 and 2 * self.k2 >= self.n2

    def blocks(self, z: np.ndarray):
        return z[: self.n1], z[self.n1 :]


ModelSet = Union[Sparse, LowRankSym, Levels]


def model_to_obj(model: ModelSet) -> dict:
    if isinstance(model, Sparse):
        return {"type": "sparse", "k": model.k, "n": model.n}
    if isinstance(model, LowRankSym):
        return {"type": "lowrank_sym", "r": model.r, "n": model.n}
    return {"type": "levels", "k1": model.k1, "k2": model.k2, "n1": model.n1, "n2": model.n2}


def model_from_obj(obj: dict) -> ModelSet:
    kind = obj["type"]
    if kind == "sparse":
        return Sparse(int(obj["k"]), int(obj["n"]))
    if kind == "lowrank_sym":
        return LowRankSym(int(obj["r"]), int(obj["n"]))
    if kind == "levels":
        return Levels(int(obj["k1"]), int(obj["k2"]), int(obj["n1"]), int(obj["n2"]))
    raise ValueError(f"unknown model type {kind!r}")


def ambient_dim(model: ModelSet) -> int:
    """Vector length of the ambient space (matrix side for low-rank)."""
    if isinstance(model, Sparse):
        return model.n
    if isinstance(model, LowRankSym):
        return model.n
    return model.n1 + model.n2


def check_point(model: ModelSet, z: Point) -> None:
    if isinstance(model, LowRankSym):
        if not isinstance(z, SymMatrix) or z.side != model.n:
            raise ValueError("model expects a symmetric matrix of matching side")
    else:
        if not isinstance(z, Vector) or z.n != ambient_dim(model):
            raise ValueError("model expects a vector of matching length")


def secant_model(model: ModelSet) -> ModelSet:
    """Model set containing all differences of two model elements."""
    if isinstance(model, Sparse):
        return Sparse(min(2 * model.k, model.n), model.n)
    if isinstance(model, LowRankSym):
        return LowRankSym(min(2 * model.r, model.n), model.n)
    return Levels(
        min(2 * model.k1, model.n1),
        min(2 * model.k2, model.n2),
        model.n1,
        model.n2,
    )


# ---------------------------------------------------------------------------
# Symmetric eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues sorted by decreasing magnitude; column j of ``vectors`` is
    the unit eigenvector for ``values[j]``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def eig_sym(z: SymMatrix, tol: float = 1e-12, max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * ||z||_F``; exceeding ``max_sweeps`` raises :class:`NumericalError`
    (never expected for sides up to 64).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = z.to_dense().copy()
    n = z.side
    v = np.eye(n)
    total = np.linalg.norm(a)
    if n == 1 or total == 0.0:
        values = np.diag(a).copy()
        order = np.argsort(-np.abs(values), kind="stable")
        return EigenDecomposition(values[order], v[:, order])
    target = tol * total
    skip = target / (2.0 * n)  # entries this small cannot lift the mass above target

    def off_mass() -> float:
        b = a.copy()
        np.fill_diagonal(b, 0.0)
        return float(np.linalg.norm(b))

    converged = False
    for _ in range(max_sweeps):
        if off_mass() <= target:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if math.isinf(theta):
                    t = 0.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if not converged and off_mass() > target:
        raise NumericalError("Jacobi eigensolver did not converge")
    values = np.diag(a).copy()
    order = np.argsort(-np.abs(values), kind="stable")
    return EigenDecomposition(values[order], v[:, order])


# ---------------------------------------------------------------------------
# Projections onto the model set
# ---------------------------------------------------------------------------


def _top_support(mags: np.ndarray, k: int) -> np.ndarray:
    # Stable sort: ties go to the lowest index.
    order = np.argsort(-mags, kind="stable")
    return np.sort(order[:k])


def project_model(model: ModelSet, z: Point) -> Point:
    """Nearest point of the model set (hard thresholding).

    Where the projection is not unique the support of lowest indices wins;
    the scalars ||P(z)||, ||z - P(z)|| and <z, P(z)> do not depend on that
    choice.
    """
    check_point(model, z)
    if isinstance(model, Sparse):
        keep = _top_support(np.abs(z.entries), model.k)
        out = np.zeros_like(z.entries)
        out[keep] = z.entries[keep]
        return Vector(out)
    if isinstance(model, Levels):
        z1, z2 = model.blocks(z.entries)
        out = np.zeros_like(z.entries)
        keep1 = _top_support(np.abs(z1), model.k1)
        keep2 = _top_support(np.abs(z2), model.k2)
        out[keep1] = z1[keep1]
        out[model.n1 + keep2] = z2[keep2]
        return Vector(out)
    dec = eig_sym(z)
    vals = dec.values.copy()
    vals[model.r :] = 0.0
    return SymMatrix.from_dense((dec.vectors * vals) @ dec.vectors.T)


def project_secant(model: ModelSet, z: Point) -> Point:
    """Projection onto the secant set of the model."""
    return project_model(secant_model(model), z)


# ---------------------------------------------------------------------------
# Model-induced gauge norm
# ---------------------------------------------------------------------------


def _ksupport_sorted(mags_desc: np.ndarray, k: int) -> float:
    """k-support norm of a vector from its magnitudes sorted descending.

    Finite search over head/tail splits: the squared norm is
    sum_{i<m} a_i^2 + (sum_{i>=m} a_i)^2 / (k-m) at the unique admissible
    split, namely the first m in {0,...,k-1} whose tail average
    (sum_{i>=m} a_i)/(k-m) dominates a_m.  (Taking the minimum over all
    splits instead is wrong: inadmissible splits can undershoot, as the
    brute-force oracle shows.)
    """
    a = mags_desc
    if a.size == 0 or a[0] == 0.0:
        return 0.0
    m_max = min(k, a.size)
    prefix_sq = np.concatenate(([0.0], np.cumsum(a * a)))
    prefix = np.concatenate(([0.0], np.cumsum(a)))
    total = prefix[-1]
    for m in range(m_max):
        tail = total - prefix[m]
        t = tail / (k - m)
        if a[m] <= t or m == m_max - 1:
            return math.sqrt(prefix_sq[m] + tail * t)
    raise AssertionError("unreachable: the last split is always admissible")


def model_norm(model: ModelSet, z: Point) -> float:
    """Gauge of the convex hull of unit-norm model elements.

    For sparse models this is the k-support norm; for low-rank models it is
    applied to the eigenvalue vector.  It equals the Hilbert norm on the
    model set itself and is infinite nowhere.
    """
    check_point(model, z)
    if isinstance(model, Sparse):
        mags = np.sort(np.abs(z.entries))[::-1]
        return _ksupport_sorted(mags, model.k)
    if isinstance(model, LowRankSym):
        mags = np.abs(eig_sym(z).values)
        return _ksupport_sorted(mags, model.r)
    raise ValueError("model norm is unsupported for the levels model")


def model_norm_oracle(model: ModelSet, z: Point, iters: int = 200) -> float:
    """Brute-force value of :func:`model_norm` for sparse models.

    Solves the covering program over all k-supports,
    ``min { sum_j z_j^2 / s_j : 0 <= s <= 1, sum_j s_j = k }``
    (the exact reduction of the variational definition of the gauge as an
    infimum over convex decompositions into model elements), by bisection on
    the scalar dual variable.  Independent of the finite-search formula used
    by :func:`model_norm`.
    """
    if not isinstance(model, Sparse):
        raise ValueError("the brute-force gauge oracle handles sparse models only")
    check_point(model, z)
    a = np.abs(z.entries)
    nz = a[a > 0.0]
    if nz.size <= model.k:
        return float(np.linalg.norm(nz))
    k = float(model.k)

    def saturation(t: float) -> float:
        return float(np.minimum(1.0, nz / t).sum())

    lo, hi = 0.0, float(nz.sum()) / k
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if saturation(mid) > k:
            lo = mid
        else:
            hi = mid
    t = hi
    head = nz[nz >= t]
    tail = nz[nz < t]
    value = float(np.sum(head * head) + t * tail.sum())
    return math.sqrt(value)
