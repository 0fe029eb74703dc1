import json
import math

import numpy as np
import pytest

from regcomp.models import (
    EigenDecomposition,
    Levels,
    LowRankSym,
    NumericalError,
    Sparse,
    SymMatrix,
    Vector,
    ambient_dim,
    eig_sym,
    hilbert_inner,
    hilbert_norm,
    model_norm,
    model_norm_oracle,
    point_from_obj,
    point_sub,
    point_to_obj,
    project_model,
    project_secant,
    secant_model,
)
from regcomp.regularizers import gauge_lp

from conftest import rng


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------


def test_symmatrix_pack_round_trip():
    g = rng(0).standard_normal((5, 5))
    a = 0.5 * (g + g.T)
    m = SymMatrix.from_dense(a)
    assert np.array_equal(m.to_dense(), m.to_dense().T)
    assert np.array_equal(SymMatrix(m.side, m.upper).to_dense(), m.to_dense())
    assert np.allclose(m.to_dense(), a)


def test_point_json_round_trip():
    v = Vector([1.0, -2.5, 1e-17, 3.3333333333333335])
    back = point_from_obj(json.loads(json.dumps(point_to_obj(v))))
    assert np.array_equal(back.entries, v.entries)
    m = SymMatrix.from_dense(np.array([[1.0, 0.25], [0.25, -2.0]]))
    back = point_from_obj(json.loads(json.dumps(point_to_obj(m))))
    assert isinstance(back, SymMatrix)
    assert np.array_equal(back.upper, m.upper)


def test_from_dense_rejects_asymmetric():
    with pytest.raises(ValueError):
        SymMatrix.from_dense(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hilbert_norm_is_l2_and_frobenius():
    assert hilbert_norm(Vector([3.0, 4.0])) == 5.0
    a = rng(1).standard_normal((4, 4))
    a = 0.5 * (a + a.T)
    assert math.isclose(hilbert_norm(SymMatrix.from_dense(a)), np.linalg.norm(a), rel_tol=1e-15)
    assert hilbert_norm(Vector(np.zeros(3))) == 0.0


# ---------------------------------------------------------------------------
# Model sets and projections
# ---------------------------------------------------------------------------


def test_model_validation():
    with pytest.raises(ValueError):
        Sparse(0, 3)
    with pytest.raises(ValueError):
        Sparse(4, 3)
    with pytest.raises(ValueError):
        LowRankSym(0, 2)
    with pytest.raises(ValueError):
        Levels(1, 3, 2, 2)
    assert Sparse(2, 3).secant_fills_space
    assert not Sparse(2, 5).secant_fills_space


def test_secant_model():
    assert secant_model(Sparse(2, 10)) == Sparse(4, 10)
    assert secant_model(LowRankSym(1, 5)) == LowRankSym(2, 5)
    assert secant_model(Sparse(3, 4)) == Sparse(4, 4)
    assert secant_model(Levels(2, 3, 5, 12)) == Levels(4, 6, 5, 12)


def test_project_sparse_examples():
    out = project_model(Sparse(2, 4), Vector([3.0, -1.0, 2.0, 0.5]))
    assert np.array_equal(out.entries, [3.0, 0.0, 2.0, 0.0])
    out = project_model(Sparse(1, 3), Vector(np.zeros(3)))
    assert np.array_equal(out.entries, np.zeros(3))


def test_project_lowrank_diagonal():
    out = project_model(LowRankSym(1, 3), SymMatrix.from_dense(np.diag([3.0, 2.0, 1.0])))
    assert np.allclose(out.to_dense(), np.diag([3.0, 0.0, 0.0]), atol=1e-12)


def test_project_tie_scalars_unambiguous():
    # The projection of an all-ones vector onto 1-sparse vectors is not
    # unique, but its three scalar statistics are.
    z = Vector([1.0, 1.0])
    p = project_model(Sparse(1, 2), z)
    assert sorted(np.abs(p.entries)) == [0.0, 1.0]
    assert hilbert_norm(point_sub(z, p)) ** 2 == pytest.approx(1.0, abs=1e-15)
    assert hilbert_inner(z, p) == pytest.approx(hilbert_norm(p) ** 2, abs=1e-15)


def test_project_levels_per_block():
    model = Levels(1, 2, 3, 4)
    z = Vector([1.0, -3.0, 2.0, 0.5, 4.0, -0.25, 1.0])
    out = project_model(model, z).entries
    assert np.array_equal(out, [0.0, -3.0, 0.0, 0.0, 4.0, 0.0, 1.0])


@pytest.mark.parametrize(
    "model",
    [Sparse(2, 7), Sparse(1, 3), Levels(2, 1, 5, 4), LowRankSym(2, 6)],
)
def test_projection_pythagoras_and_inner(model):
    gen = rng(42)
    trials = 10_000 if not isinstance(model, LowRankSym) else 2_000
    for _ in range(trials):
        if isinstance(model, LowRankSym):
            g = gen.standard_normal((model.n, model.n))
            z = SymMatrix.from_dense(0.5 * (g + g.T))
        else:
            z = Vector(gen.standard_normal(ambient_dim(model)))
        for proj in (project_model(model, z), project_secant(model, z)):
            nz2 = hilbert_norm(z) ** 2
            gap = abs(nz2 - hilbert_norm(proj) ** 2 - hilbert_norm(point_sub(z, proj)) ** 2)
            assert gap <= 1e-10 * nz2
            assert abs(hilbert_inner(z, proj) - hilbert_norm(proj) ** 2) <= 1e-10 * max(nz2, 1.0)


# ---------------------------------------------------------------------------
# Eigendecomposition
# ---------------------------------------------------------------------------


def test_eig_diagonal_and_identity():
    dec = eig_sym(SymMatrix.from_dense(np.diag([3.0, -1.0, 2.0])))
    assert np.allclose(dec.values, [3.0, 2.0, -1.0])
    assert np.allclose(np.abs(dec.vectors), np.eye(3)[:, [0, 2, 1]])
    dec = eig_sym(SymMatrix.from_dense(np.eye(4)))
    assert np.allclose(dec.values, np.ones(4))


def test_eig_2x2_exchange():
    dec = eig_sym(SymMatrix.from_dense(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert sorted(dec.values) == pytest.approx([-1.0, 1.0], abs=1e-14)
    assert np.allclose(np.abs(dec.vectors), np.full((2, 2), 1 / math.sqrt(2)), atol=1e-12)


def test_eig_invariants_random():
    gen = rng(3)
    for _ in range(100):
        n = int(gen.integers(2, 13))
        g = gen.standard_normal((n, n))
        a = 0.5 * (g + g.T)
        dec = eig_sym(SymMatrix.from_dense(a))
        scale = max(np.linalg.norm(a), 1e-300)
        assert np.linalg.norm(dec.reconstruct() - a) <= 1e-10 * scale
        assert np.abs(dec.vectors.T @ dec.vectors - np.eye(n)).max() <= 1e-12
        mags = np.abs(dec.values)
        assert np.all(mags[:-1] >= mags[1:] - 1e-15)


def test_eig_recovers_spectrum_under_conjugation():
    gen = rng(4)
    d = np.array([5.0, -3.0, 3.0, 0.5, 0.0, -0.5])
    q, r = np.linalg.qr(gen.standard_normal((6, 6)))
    q = q * np.sign(np.diag(r))
    dec = eig_sym(SymMatrix.from_dense(q @ np.diag(d) @ q.T))
    assert np.abs(np.sort(dec.values) - np.sort(d)).max() <= 1e-9


def test_eig_zero_and_bad_tol():
    dec = eig_sym(SymMatrix.from_dense(np.zeros((3, 3))))
    assert np.array_equal(dec.values, np.zeros(3))
    with pytest.raises(ValueError):
        eig_sym(SymMatrix.from_dense(np.eye(2)), tol=0.0)


# ---------------------------------------------------------------------------
# Model-induced gauge norm
# ---------------------------------------------------------------------------


def test_model_norm_examples():
    assert model_norm(Sparse(1, 2), Vector([1.0, 1.0])) == pytest.approx(2.0, abs=1e-15)
    assert model_norm(Sparse(2, 3), Vector([1.0, 1.0, 0.0])) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert model_norm(Sparse(1, 3), Vector(np.zeros(3))) == 0.0


def test_model_norm_levels_unsupported():
    with pytest.raises(ValueError):
        model_norm(Levels(1, 1, 2, 2), Vector(np.ones(4)))


def test_model_norm_matches_oracle():
    gen = rng(10)
    for _ in range(300):
        n = int(gen.integers(2, 7))
        k = int(gen.integers(1, min(3, n) + 1))
        z = Vector(gen.standard_normal(n))
        model = Sparse(k, n)
        assert abs(model_norm(model, z) - model_norm_oracle(model, z)) <= 1e-9


def test_model_norm_equals_hilbert_on_model():
    gen = rng(11)
    for _ in range(300):
        n = int(gen.integers(2, 9))
        k = int(gen.integers(1, n + 1))
        v = np.zeros(n)
        idx = gen.choice(n, size=k, replace=False)
        v[idx] = gen.standard_normal(k)
        p = Vector(v)
        assert abs(model_norm(Sparse(k, n), p) - hilbert_norm(p)) <= 1e-9 * max(1.0, hilbert_norm(p))


def test_model_norm_monotone_and_invariant():
    gen = rng(12)
    for _ in range(300):
        n = int(gen.integers(2, 9))
        k = int(gen.integers(1, n + 1))
        model = Sparse(k, n)
        v = gen.standard_normal(n)
        bigger = v + np.sign(v) * gen.random(n)
        assert model_norm(model, Vector(v)) <= model_norm(model, Vector(bigger)) + 1e-12
        perm = gen.permutation(n)
        signs = gen.choice([-1.0, 1.0], size=n)
        assert model_norm(model, Vector(signs * v[perm])) == model_norm(model, Vector(v))


def test_model_norm_l1_lower_bound():
    gen = rng(13)
    for _ in range(300):
        n = int(gen.integers(2, 9))
        k = int(gen.integers(1, n + 1))
        v = gen.standard_normal(n)
        val = model_norm(Sparse(k, n), Vector(v))
        assert val * val >= np.abs(v).sum() ** 2 / k - 1e-9


def test_model_norm_spectral_reduction():
    gen = rng(14)
    for _ in range(50):
        n = int(gen.integers(2, 7))
        r = int(gen.integers(1, n + 1))
        g = gen.standard_normal((n, n))
        a = 0.5 * (g + g.T)
        m = SymMatrix.from_dense(a)
        vals = np.linalg.eigvalsh(a)
        vec = model_norm(Sparse(r, n), Vector(vals))
        assert model_norm(LowRankSym(r, n), m) == pytest.approx(vec, rel=1e-10)
        # nuclear-norm lower bound and on-model equality
        assert model_norm(LowRankSym(r, n), m) ** 2 >= np.abs(vals).sum() ** 2 / r - 1e-9


def test_model_norm_matrix_on_model_equals_frobenius():
    gen = rng(15)
    for r, n in [(1, 4), (2, 5)]:
        g = gen.standard_normal((n, r))
        a = g @ g.T
        m = SymMatrix.from_dense(a)
        assert model_norm(LowRankSym(r, n), m) == pytest.approx(np.linalg.norm(a), rel=1e-9)


def test_model_norm_against_discretized_gauge():
    # Third route: the gauge of a fine discretization of the unit-norm model
    # elements, computed by the LP, over-estimates the model norm by at most
    # the chord defect of the discretization.
    angles = np.linspace(0.0, 2 * math.pi, 360, endpoint=False)
    atoms = []
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        for t in angles:
            v = np.zeros(3)
            v[i], v[j] = math.cos(t), math.sin(t)
            atoms.append(Vector(v))
    gen = rng(16)
    model = Sparse(2, 3)
    for _ in range(10):
        z = Vector(gen.standard_normal(3))
        exact = model_norm(model, z)
        disc = gauge_lp(atoms, z).value
        assert exact - 1e-9 <= disc <= exact * (1.0 + 1e-4)


def test_model_norm_oracle_rejects_non_sparse():
    with pytest.raises(ValueError):
        model_norm_oracle(LowRankSym(1, 3), SymMatrix.from_dense(np.eye(3)))


def test_dimension_mismatch_errors():
    with pytest.raises(ValueError):
        project_model(Sparse(1, 3), Vector([1.0, 2.0]))
    with pytest.raises(ValueError):
        project_model(LowRankSym(1, 3), Vector([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        model_norm(Sparse(1, 3), SymMatrix.from_dense(np.eye(3)))
