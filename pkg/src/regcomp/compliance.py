"""RIP-based compliance measures of regularizers for low-dimensional models.

Exposes the restricted isometry constant and restricted conditioning of
explicit operators (by secant-support enumeration), their mutual conversion,
the tail/head energy ratio whose supremum over the descent cone gives the
necessary-RIP threshold delta_nec = (1 + 2B)^-1, the closed forms for the
l1 and nuclear norms, the gauge-weighted analogue giving the sufficient
threshold delta_suff = (1 + D)^{-1/2}, and a sampled lower-bound estimator
of B for arbitrary weighted norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from . import levels as levels_mod
from .models import (
    Levels,
    LowRankSym,
    ModelSet,
    NumericalError,
    Point,
    Sparse,
    SymMatrix,
    Vector,
    ambient_dim,
    eig_sym,
    hilbert_norm,
    model_norm,
    point_sub,
    project_model,
    project_secant,
)
from .parallel import chunk_generator, chunk_sizes, map_chunks
from .regularizers import LevelsL1, Nuclear, Regularizer, WeightedL1

__all__ = [
    "ENUMERATION_CAP",
    "BStarResult",
    "ComplianceReport",
    "rip_constant",
    "restricted_conditioning",
    "rip_rc_convert",
    "gamma_nec_point",
    "b_measure_value",
    "b_measure_rows",
    "b_star_sparse",
    "delta_suff_l1",
    "d_measure_value",
    "d_measure_value_secant",
    "d_structured_profile",
    "d_sup_structured",
    "b_sup_estimate",
    "compliance_report",
]

ENUMERATION_CAP = 10**6


# ---------------------------------------------------------------------------
# RIP constant and restricted conditioning by support enumeration
# ---------------------------------------------------------------------------


def _check_operator(model: ModelSet, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1:
        raise ValueError("operator must be a 2-D matrix with at least one row")
    if not np.all(np.isfinite(M)):
        raise ValueError("operator entries must be finite")
    if M.shape[1] != ambient_dim(model):
        raise ValueError("operator width does not match the ambient dimension")
    return M


def _secant_supports(model: ModelSet, cap: int):
    """All supports of the secant set, as sorted index tuples."""
    if isinstance(model, Sparse):
        s = min(2 * model.k, model.n)
        if comb(model.n, s) > cap:
            raise ValueError("instance too large for exact support enumeration")
        return [list(t) for t in combinations(range(model.n), s)]
    if isinstance(model, Levels):
        s1 = min(2 * model.k1, model.n1)
        s2 = min(2 * model.k2, model.n2)
        if comb(model.n1, s1) * comb(model.n2, s2) > cap:
            raise ValueError("instance too large for exact support enumeration")
        offs2 = model.n1
        return [
            list(t1) + [offs2 + j for j in t2]
            for t1 in combinations(range(model.n1), s1)
            for t2 in combinations(range(model.n2), s2)
        ]
    raise ValueError("support enumeration is unsupported for low-rank models")


def _gram_eig_range(model: ModelSet, M: np.ndarray, cap: int):
    supports = _secant_supports(model, cap)
    lo, hi = math.inf, -math.inf
    block = 4096
    for start in range(0, len(supports), block):
        chunk = supports[start : start + block]
        sub = np.stack([M[:, t] for t in chunk])  # (b, m, s)
        grams = np.einsum("bms,bmt->bst", sub, sub)
        vals = np.linalg.eigvalsh(grams)
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    return lo, hi


def rip_constant(model: ModelSet, M: np.ndarray, cap: int = ENUMERATION_CAP) -> float:
    """Worst relative distortion of ||Mx||^2 over unit-norm secant vectors,
    exact by support enumeration and symmetric eigensolves."""
    M = _check_operator(model, M)
    lo, hi = _gram_eig_range(model, M, cap)
    return max(abs(hi - 1.0), abs(lo - 1.0))


def restricted_conditioning(model: ModelSet, M: np.ndarray, cap: int = ENUMERATION_CAP) -> float:
    """sup ||Mx||^2 / inf ||Mx||^2 over the unit secant sphere; +inf when the
    infimum vanishes (the kernel meets the secant set)."""
    M = _check_operator(model, M)
    lo, hi = _gram_eig_range(model, M, cap)
    if lo <= 1e-12 * max(1.0, hi):
        return math.inf
    return hi / lo


def rip_rc_convert(value: float, direction: str) -> float:
    """Convert between the RIP constant delta and the restricted conditioning
    gamma: gamma = (1 + delta) / (1 - delta) and back."""
    if direction == "rip_to_rc":
        if not (0.0 <= value < 1.0):
            raise ValueError("RIP constant must lie in [0, 1)")
        return (1.0 + value) / (1.0 - value)
    if direction == "rc_to_rip":
        if value == math.inf:
            return 1.0
        if value < 1.0:
            raise ValueError("restricted conditioning must be >= 1")
        return (value - 1.0) / (value + 1.0)
    raise ValueError("direction must be 'rip_to_rc' or 'rc_to_rip'")


def gamma_nec_point(model: ModelSet, z: Point) -> float:
    """Restricted conditioning of I - (projection onto span z), in closed
    form: ||z||^2 / ||z - P_secant(z)||^2; +inf when z is a secant vector."""
    total = hilbert_norm(z)
    if total == 0.0:
        raise ValueError("z must be nonzero")
    tail = hilbert_norm(point_sub(z, project_secant(model, z)))
    if tail == 0.0:
        return math.inf
    return (total * total) / (tail * tail)


# ---------------------------------------------------------------------------
# B measure (necessary threshold) and its closed form
# ---------------------------------------------------------------------------


def b_measure_value(model: ModelSet, z: Point) -> float:
    """Tail-to-head energy ratio relative to the secant projection:
    ||z - P_secant(z)||^2 / ||P_secant(z)||^2."""
    if isinstance(model, LowRankSym):
        if not isinstance(z, SymMatrix) or z.side != model.n:
            raise ValueError("dimension mismatch")
        mags = np.abs(eig_sym(z).values)
        return float(_b_from_sorted_sq(mags[::-1] ** 2, min(2 * model.r, model.n), model.n))
    if not isinstance(z, Vector):
        raise ValueError("vector model expects a vector point")
    val = float(b_measure_rows(model, z.entries.reshape(1, -1))[0])
    if math.isnan(val):
        raise ValueError("b measure is undefined for z = 0")
    return val


def _b_from_sorted_sq(sq_asc: np.ndarray, s: int, n: int) -> float:
    tail = float(sq_asc[: n - s].sum())
    head = float(sq_asc[n - s :].sum())
    if head == 0.0:
        raise ValueError("b measure is undefined for z = 0")
    return tail / head


def b_measure_rows(model: ModelSet, Z: np.ndarray) -> np.ndarray:
    """Vectorized tail/head ratios for rows of Z (vector models).

    Rows equal to zero yield NaN.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != ambient_dim(model):
        raise ValueError("Z must be rows of ambient vectors")
    if isinstance(model, Sparse):
        s = min(2 * model.k, model.n)
        sq = np.sort(Z * Z, axis=1)
        tail = sq[:, : model.n - s].sum(axis=1)
        total = sq.sum(axis=1)
    elif isinstance(model, Levels):
        s1 = min(2 * model.k1, model.n1)
        s2 = min(2 * model.k2, model.n2)
        sq1 = np.sort(Z[:, : model.n1] ** 2, axis=1)
        sq2 = np.sort(Z[:, model.n1 :] ** 2, axis=1)
        tail = sq1[:, : model.n1 - s1].sum(axis=1) + sq2[:, : model.n2 - s2].sum(axis=1)
        total = sq1.sum(axis=1) + sq2.sum(axis=1)
    else:
        raise ValueError("b_measure_rows handles vector models only")
    head = total - tail
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(head > 0.0, tail / head, np.nan)


@dataclass(frozen=True)
class BStarResult:
    """Exact maximum of the tail/head ratio for the l1 (or nuclear) norm."""

    b: float
    argmax_L: int
    delta_nec: float


def b_star_sparse(k: int, n: int) -> BStarResult:
    """max over integer L in [1, n-2k] of (L/k) / ((L/k + 1)^2 + 1), with the
    resulting necessary threshold (1 + 2b)^-1.  Requires k < n/2."""
    if not (1 <= k and 2 * k < n):
        raise ValueError("requires 1 <= k < n/2")
    best, best_L = -math.inf, 0
    for L in range(1, n - 2 * k + 1):
        u = L / k
        val = u / ((u + 1.0) ** 2 + 1.0)
        if val > best:
            best, best_L = val, L
    return BStarResult(best, best_L, 1.0 / (1.0 + 2.0 * best))


def delta_suff_l1(k: int, n: int) -> float:
    """Sufficient-RIP threshold of the l1 norm for k-sparse recovery (and of
    the nuclear norm for rank-k recovery): 1/sqrt(2), independent of (k, n)
    as long as k < n/2."""
    if not (1 <= k and 2 * k < n):
        raise ValueError("requires 1 <= k < n/2")
    return math.sqrt(0.5)


# ---------------------------------------------------------------------------
# D measure (sufficient threshold)
# ---------------------------------------------------------------------------


def d_measure_value(model: ModelSet, z: Point) -> float:
    """Gauge-weighted tail over head energy with the head taken as the model
    projection: ||z - P_model(z)||_gauge^2 / ||P_model(z)||^2."""
    p = project_model(model, z)
    head = hilbert_norm(p)
    if head == 0.0:
        raise ValueError("d measure is undefined when the head part vanishes")
    tail = model_norm(model, point_sub(z, p))
    return (tail * tail) / (head * head)


def d_measure_value_secant(model: ModelSet, z: Point) -> float:
    """Variant of :func:`d_measure_value` with the secant-set projection in
    place of the model projection.  Exposed for comparison; the model-set
    version is the one entering the sufficient threshold."""
    p = project_secant(model, z)
    head = hilbert_norm(p)
    if head == 0.0:
        raise ValueError("d measure is undefined when the head part vanishes")
    tail = model_norm(model, point_sub(z, p))
    return (tail * tail) / (head * head)


def _canonical_pair(model: ModelSet, reg: Regularizer) -> int:
    if isinstance(model, Sparse) and isinstance(reg, WeightedL1):
        if reg.n != model.n or not reg.is_uniform:
            raise ValueError("structured search needs the uniform l1 norm")
        return model.k
    if isinstance(model, LowRankSym) and isinstance(reg, Nuclear):
        return model.r
    raise ValueError("structured search is defined for the canonical l1/nuclear pairings")


def _fixed_orthogonal(n: int) -> np.ndarray:
    g = chunk_generator(7, n).standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def _structured_d_witness(model: ModelSet, L: int) -> Point:
    k = model.k if isinstance(model, Sparse) else model.r
    n = model.n
    alpha = max(L / k, 1.0)
    diag = np.zeros(n)
    diag[:k] = -alpha
    diag[k : k + L] = 1.0
    if isinstance(model, Sparse):
        return Vector(diag)
    u = _fixed_orthogonal(n)
    return SymMatrix.from_dense((u * diag) @ u.T)


def d_structured_profile(model: ModelSet, reg: Regularizer, budget: Optional[int] = None) -> dict:
    """Gauge tail/head value of the structured two-block witness for each
    admissible tail size L (canonical l1/nuclear pairings)."""
    k = _canonical_pair(model, reg)
    n = model.n
    l_max = n - k
    if budget is not None and budget > 0:
        l_max = min(l_max, budget)
    return {L: d_measure_value(model, _structured_d_witness(model, L)) for L in range(1, l_max + 1)}


def d_sup_structured(model: ModelSet, reg: Regularizer, budget: int = 0) -> float:
    """Maximum of :func:`d_structured_profile`; equals 1 whenever k < n/2."""
    profile = d_structured_profile(model, reg, budget if budget > 0 else None)
    if not profile:
        raise ValueError("no admissible tail size")
    return max(profile.values())


# ---------------------------------------------------------------------------
# Sampled lower bound on the B measure supremum
# ---------------------------------------------------------------------------


def _strict_cone_rows(model: ModelSet, w: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Strict closed-form cone test per row (no boundary slack): sound for a
    lower-bound estimator since the cone is closed."""
    if isinstance(model, Sparse):
        s = np.sort(w * np.abs(Z), axis=1)[:, ::-1]
        head = s[:, : model.k].sum(axis=1)
        rest = s.sum(axis=1) - head
        return head >= rest
    assert isinstance(model, Levels)
    s1 = np.sort(w[: model.n1] * np.abs(Z[:, : model.n1]), axis=1)[:, ::-1]
    s2 = np.sort(w[model.n1 :] * np.abs(Z[:, model.n1 :]), axis=1)[:, ::-1]
    head = s1[:, : model.k1].sum(axis=1) + s2[:, : model.k2].sum(axis=1)
    rest = s1.sum(axis=1) + s2.sum(axis=1) - head
    return head >= rest


def _random_support_values(gen: np.random.Generator, rows: int, width: int, k_sizes: np.ndarray) -> np.ndarray:
    """Rows with prescribed support sizes; half the rows get flat +-1 values,
    half Gaussian values."""
    rank = np.argsort(np.argsort(gen.random((rows, width)), axis=1), axis=1)
    mask = rank < k_sizes.reshape(-1, 1)
    signs = np.where(gen.random((rows, width)) < 0.5, -1.0, 1.0)
    flat = gen.random((rows, 1)) < 0.5
    mags = np.where(flat, 1.0, np.abs(gen.standard_normal((rows, width))))
    return np.where(mask, signs * mags, 0.0)


def _witness_rows_weighted(w_desc: np.ndarray, k: int, n: int) -> np.ndarray:
    """Deterministic two-block descent witnesses for a weighted l1 norm with
    weights sorted descending: -alpha on the k heaviest coordinates, +1 on
    the k+L lightest ones."""
    rows = []
    r0 = float(w_desc[:k].sum())
    for L in range(1, n - 2 * k + 1):
        r1 = float(w_desc[n - (k + L) :].sum())
        alpha = max(r1 / r0, 1.0)
        z = np.zeros(n)
        z[:k] = -alpha
        z[n - (k + L) :] = 1.0
        rows.append(z)
    return np.array(rows) if rows else np.zeros((0, n))


def _witness_rows_levels(model: Levels, reg: LevelsL1, grid: int = 512) -> np.ndarray:
    rows = []
    for L1 in range(0, model.n1 - 2 * model.k1 + 1):
        for L2 in range(0, model.n2 - 2 * model.k2 + 1):
            if L1 + L2 == 0:
                continue
            w = levels_mod.LevelsWeights(reg.w1, reg.w2)
            z = levels_mod.b_levels_witness(w, model.k1, model.k2, L1, L2, model.n1, model.n2, grid)
            rows.append(z)
    return np.array(rows) if rows else np.zeros((0, model.n1 + model.n2))


def b_sup_estimate(model: ModelSet, reg: Regularizer, samples: int, seed: int, workers=None) -> float:
    """Sampled lower bound on the supremum of the tail/head ratio over the
    descent cone.

    The sample mix is half explicit descent constructions (v1 - alpha v0
    from random model points, including the deterministic structured witness
    family, which contains the known near-maximizers) and half unit-sphere
    rejection through the exact cone test.  Deterministic given (seed,
    samples) for any worker count.  For weighted l1 norms the computation
    runs in a weight-sorted frame, so conjugating the weights by a signed
    permutation leaves the estimate unchanged bit for bit.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if isinstance(model, LowRankSym) and isinstance(reg, Nuclear):
        # Spectral reduction: ratios and cone membership depend only on the
        # eigenvalue vector.
        vec_model = Sparse(model.r, model.n)
        return b_sup_estimate(vec_model, WeightedL1(np.ones(model.n)), samples, seed, workers)
    if isinstance(model, Sparse) and isinstance(reg, WeightedL1):
        if reg.n != model.n:
            raise ValueError("dimension mismatch")
        w = np.sort(reg.weights)[::-1]
        witness = _witness_rows_weighted(w, model.k, model.n)
    elif isinstance(model, Levels) and isinstance(reg, LevelsL1):
        if (reg.n1, reg.n2) != (model.n1, model.n2):
            raise ValueError("dimension mismatch")
        w = np.concatenate([np.full(model.n1, reg.w1), np.full(model.n2, reg.w2)])
        witness = _witness_rows_levels(model, reg)
    else:
        raise ValueError("estimator requires an exact-cone regularizer matching the model")

    n = ambient_dim(model)
    sizes = chunk_sizes(samples)

    def one_chunk(i: int):
        gen = chunk_generator(seed, i)
        m = sizes[i]
        m_a = m // 2
        m_b = m - m_a
        best = -math.inf
        used = 0
        if m_a:
            if isinstance(model, Sparse):
                v0 = _random_support_values(gen, m_a, n, np.full(m_a, model.k))
                v1 = _random_support_values(gen, m_a, n, gen.integers(1, n + 1, size=m_a))
            else:
                v0_1 = _random_support_values(gen, m_a, model.n1, np.full(m_a, model.k1))
                v0_2 = _random_support_values(gen, m_a, model.n2, np.full(m_a, model.k2))
                v0 = np.hstack([v0_1, v0_2])
                v1_1 = _random_support_values(gen, m_a, model.n1, gen.integers(0, model.n1 + 1, size=m_a))
                v1_2 = _random_support_values(gen, m_a, model.n2, gen.integers(0, model.n2 + 1, size=m_a))
                v1 = np.hstack([v1_1, v1_2])
            r0 = np.abs(v0) @ w
            r1 = np.abs(v1) @ w
            ok = r0 > 0.0
            alpha = np.maximum(np.divide(r1, r0, out=np.ones_like(r0), where=ok), 1.0)
            z = v1 - alpha.reshape(-1, 1) * v0
            ok &= np.any(z != 0.0, axis=1)
            if np.any(ok):
                vals = b_measure_rows(model, z[ok])
                vals = vals[~np.isnan(vals)]
                if vals.size:
                    best = max(best, float(vals.max()))
                    used += int(vals.size)
        if m_b:
            g = gen.standard_normal((m_b, n))
            norms = np.linalg.norm(g, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            g /= norms
            acc = _strict_cone_rows(model, w, g)
            if np.any(acc):
                vals = b_measure_rows(model, g[acc])
                vals = vals[~np.isnan(vals)]
                if vals.size:
                    best = max(best, float(vals.max()))
                    used += int(vals.size)
        return used, best

    results = map_chunks(one_chunk, len(sizes), workers)
    used = sum(u for u, _ in results)
    best = max((b for _, b in results), default=-math.inf)
    if witness.shape[0]:
        wvals = b_measure_rows(model, witness)
        wvals = wvals[~np.isnan(wvals)]
        if wvals.size:
            best = max(best, float(wvals.max()))
            used += int(wvals.size)
    if used == 0 or best == -math.inf:
        raise NumericalError("no accepted samples")
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplianceReport:
    """Necessary/sufficient RIP thresholds for a (model, regularizer) pair
    with the underlying B and D values and a provenance tag."""

    delta_nec: float
    delta_suff: Optional[float]
    gamma_nec: float
    b_value: float
    d_value: Optional[float]
    method: str

    def to_obj(self) -> dict:
        def num(x):
            if x is None:
                return None
            return "inf" if math.isinf(x) else float(x)

        return {
            "delta_nec": num(self.delta_nec),
            "delta_suff": num(self.delta_suff),
            "gamma_nec": num(self.gamma_nec),
            "b_value": num(self.b_value),
            "d_value": num(self.d_value),
            "method": self.method,
        }


def compliance_report(
    model: ModelSet,
    reg: Regularizer,
    samples: int = 20000,
    seed: int = 0,
    grid: int = 2048,
    workers=None,
) -> ComplianceReport:
    """Assemble the compliance report for a (model, regularizer) pair.

    Uniform l1 on sparse models and nuclear on low-rank models use the exact
    closed forms.  Weighted-by-level l1 on levels models maximizes the
    explicit two-block program over all tail sizes (structured search).
    Non-uniform weighted l1 falls back to the sampled lower bound on B, in
    which case the reported delta_nec is an upper bound and no sufficient
    threshold is reported.
    """
    if isinstance(model, Sparse) and isinstance(reg, WeightedL1) and reg.is_uniform:
        star = b_star_sparse(model.k, model.n)
        return ComplianceReport(
            delta_nec=star.delta_nec,
            delta_suff=delta_suff_l1(model.k, model.n),
            gamma_nec=rip_rc_convert(star.delta_nec, "rip_to_rc"),
            b_value=star.b,
            d_value=1.0,
            method="closed_form",
        )
    if isinstance(model, LowRankSym) and isinstance(reg, Nuclear):
        star = b_star_sparse(model.r, model.n)
        return ComplianceReport(
            delta_nec=star.delta_nec,
            delta_suff=delta_suff_l1(model.r, model.n),
            gamma_nec=rip_rc_convert(star.delta_nec, "rip_to_rc"),
            b_value=star.b,
            d_value=1.0,
            method="closed_form",
        )
    if isinstance(model, Levels) and isinstance(reg, LevelsL1):
        if (reg.n1, reg.n2) != (model.n1, model.n2):
            raise ValueError("dimension mismatch")
        if model.secant_fills_space:
            raise ValueError("levels report requires n_i > 2 k_i in at least one level")
        w = levels_mod.LevelsWeights(reg.w1, reg.w2)
        best = 0.0
        for L1 in range(0, max(model.n1 - 2 * model.k1, 0) + 1):
            for L2 in range(0, max(model.n2 - 2 * model.k2, 0) + 1):
                if L1 + L2 == 0:
                    continue
                best = max(best, levels_mod.b_levels_oracle(w, model.k1, model.k2, L1, L2, grid, workers))
        delta = 1.0 / (1.0 + 2.0 * best)
        return ComplianceReport(
            delta_nec=delta,
            delta_suff=None,
            gamma_nec=rip_rc_convert(delta, "rip_to_rc"),
            b_value=best,
            d_value=None,
            method="structured_search",
        )
    if isinstance(model, Sparse) and isinstance(reg, WeightedL1):
        b = b_sup_estimate(model, reg, samples, seed, workers)
        delta = 1.0 / (1.0 + 2.0 * b)
        return ComplianceReport(
            delta_nec=delta,
            delta_suff=None,
            gamma_nec=rip_rc_convert(delta, "rip_to_rc"),
            b_value=b,
            d_value=None,
            method="sampled_lower_bound",
        )
    raise ValueError("unsupported model/regularizer pairing for a compliance report")
