import math

import numpy as np
import pytest

from regcomp.compliance import (
    b_measure_rows,
    b_measure_value,
    b_star_sparse,
    b_sup_estimate,
    compliance_report,
    d_measure_value,
    d_measure_value_secant,
    d_structured_profile,
    d_sup_structured,
    delta_suff_l1,
    gamma_nec_point,
    restricted_conditioning,
    rip_constant,
    rip_rc_convert,
)
from regcomp.models import Levels, LowRankSym, NumericalError, Sparse, SymMatrix, Vector
from regcomp.levels import LevelsWeights, b_levels_oracle
from regcomp.regularizers import LevelsL1, Nuclear, WeightedL1

from conftest import rng


# ---------------------------------------------------------------------------
# RIP constant / restricted conditioning by enumeration
# ---------------------------------------------------------------------------


def test_rip_constant_examples():
    assert rip_constant(Sparse(1, 3), np.eye(3)) == pytest.approx(0.0, abs=1e-14)
    assert rip_constant(Sparse(1, 3), np.eye(3)[:2]) == pytest.approx(1.0, abs=1e-14)
    assert rip_constant(Sparse(1, 2), np.array([[1.0, 0.0]])) == pytest.approx(1.0, abs=1e-14)


def test_rip_constant_errors():
    with pytest.raises(ValueError):
        rip_constant(LowRankSym(1, 3), np.eye(3))
    with pytest.raises(ValueError):
        rip_constant(Sparse(8, 40), np.eye(40))  # enumeration cap exceeded
    with pytest.raises(ValueError):
        rip_constant(Sparse(1, 3), np.eye(4))


def test_restricted_conditioning_examples():
    assert restricted_conditioning(Sparse(1, 3), np.eye(3)) == pytest.approx(1.0, abs=1e-12)
    z = np.ones(3) / math.sqrt(3.0)
    got = restricted_conditioning(Sparse(1, 3), np.eye(3) - np.outer(z, z))
    assert got == pytest.approx(3.0, abs=1e-10)
    assert restricted_conditioning(Sparse(1, 3), np.eye(3) - np.diag([0.0, 0.0, 1.0])) == math.inf


def test_rip_constant_levels_enumeration():
    model = Levels(1, 1, 3, 3)
    assert rip_constant(model, np.eye(6)) == pytest.approx(0.0, abs=1e-14)
    # kill one coordinate of block two: some secant support hits the kernel
    M = np.eye(6) - np.diag([0.0] * 5 + [1.0])
    assert rip_constant(model, M) == pytest.approx(1.0, abs=1e-14)
    assert restricted_conditioning(model, M) == math.inf


def test_rip_rc_convert():
    got = rip_rc_convert(1.0 / math.sqrt(2.0), "rip_to_rc")
    want = (math.sqrt(2.0) + 1.0) / (math.sqrt(2.0) - 1.0)
    assert got == pytest.approx(want, abs=1e-12)
    assert rip_rc_convert(0.0, "rip_to_rc") == 1.0
    assert rip_rc_convert(3.0, "rc_to_rip") == pytest.approx(0.5, abs=1e-15)
    gen = rng(30)
    for _ in range(200):
        d = float(gen.uniform(0.0, 0.999))
        assert rip_rc_convert(rip_rc_convert(d, "rip_to_rc"), "rc_to_rip") == pytest.approx(d, abs=1e-12)
    with pytest.raises(ValueError):
        rip_rc_convert(1.0, "rip_to_rc")
    with pytest.raises(ValueError):
        rip_rc_convert(0.5, "rc_to_rip")
    with pytest.raises(ValueError):
        rip_rc_convert(0.5, "sideways")


def test_gamma_nec_point_examples():
    assert gamma_nec_point(Sparse(1, 3), Vector([1.0, 1.0, 1.0])) == pytest.approx(3.0, abs=1e-12)
    assert gamma_nec_point(Sparse(1, 3), Vector([1.0, 1.0, 0.0])) == math.inf
    assert gamma_nec_point(LowRankSym(1, 3), SymMatrix.from_dense(np.eye(3))) == pytest.approx(3.0, abs=1e-10)
    with pytest.raises(ValueError):
        gamma_nec_point(Sparse(1, 3), Vector([0.0, 0.0, 0.0]))


def test_gamma_enumeration_agrees_with_formula():
    gen = rng(31)
    for _ in range(100):
        k = int(gen.integers(1, 3))
        n = int(gen.integers(2 * k + 1, 9))
        z = gen.standard_normal(n)
        z /= np.linalg.norm(z)
        enum = restricted_conditioning(Sparse(k, n), np.eye(n) - np.outer(z, z))
        closed = gamma_nec_point(Sparse(k, n), Vector(z))
        assert abs(rip_rc_convert(enum, "rc_to_rip") - rip_rc_convert(closed, "rc_to_rip")) <= 1e-10
        if max(enum, closed) <= 100.0:
            assert abs(enum - closed) <= 1e-10


# ---------------------------------------------------------------------------
# B measure and closed form
# ---------------------------------------------------------------------------


def test_b_measure_examples():
    assert b_measure_value(Sparse(1, 4), Vector([1.0, 1.0, 1.0, 1.0])) == pytest.approx(1.0, abs=1e-15)
    assert b_measure_value(Sparse(1, 3), Vector([2.0, 1.0, 1.0])) == pytest.approx(0.2, abs=1e-15)
    assert b_measure_value(Sparse(2, 6), Vector([1.0, -2.0, 0.1, 3.0, 0.0, 0.5])) == pytest.approx(
        0.01 / 14.25, abs=1e-15
    )
    # secant members have zero tail
    assert b_measure_value(Sparse(1, 4), Vector([1.0, -1.0, 0.0, 0.0])) == 0.0
    assert b_measure_value(LowRankSym(1, 3), SymMatrix.from_dense(np.eye(3))) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        b_measure_value(Sparse(1, 3), Vector([0.0, 0.0, 0.0]))


def test_b_star_examples():
    star = b_star_sparse(1, 5)
    assert star.b == pytest.approx(0.2, abs=1e-15)
    assert star.argmax_L == 1  # ties at L in {1, 2}; the lowest wins
    assert star.delta_nec == pytest.approx(5.0 / 7.0, abs=1e-15)
    star = b_star_sparse(2, 10)
    assert star.b == pytest.approx(6.0 / 29.0, abs=1e-15)
    assert star.argmax_L == 3
    assert star.delta_nec == pytest.approx(29.0 / 41.0, abs=1e-15)
    with pytest.raises(ValueError):
        b_star_sparse(2, 4)


def test_b_star_large_n_limit():
    # The integer maximum approaches the real-valued optimum at tail ratio
    # sqrt(2) once k lets L/k get close to it.
    limit = (math.sqrt(2.0) - 1.0) / 2.0
    for k, n in [(1, 64), (5, 64), (10, 1000), (70, 1000)]:
        assert b_star_sparse(k, n).b <= limit + 1e-15
    for k, n in [(5, 64), (10, 1000), (70, 1000)]:
        assert b_star_sparse(k, n).b >= limit - 2e-3
    assert b_star_sparse(10, 1000).delta_nec == pytest.approx(1.0 / math.sqrt(2.0), abs=2e-3)


def test_delta_suff_examples():
    for k, n in [(1, 3), (3, 7), (2, 10)]:
        assert delta_suff_l1(k, n) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    with pytest.raises(ValueError):
        delta_suff_l1(2, 4)


def test_sandwich_all_small_sizes():
    for n in range(3, 65):
        for k in range(1, (n - 1) // 2 + 1):
            assert delta_suff_l1(k, n) <= b_star_sparse(k, n).delta_nec + 1e-15


# ---------------------------------------------------------------------------
# D measure
# ---------------------------------------------------------------------------


def test_d_measure_examples():
    assert d_measure_value(Sparse(1, 2), Vector([1.0, 1.0])) == pytest.approx(1.0, abs=1e-12)
    assert d_measure_value(Sparse(1, 3), Vector([1.0, 0.0, 0.0])) == 0.0
    # the tail (0, 1, 1) has 1-support gauge 2 (the l1 norm), so the ratio is
    # 4/4; the structured bound min(1, L/k) is attained.
    assert d_measure_value(Sparse(1, 3), Vector([2.0, 1.0, 1.0])) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        d_measure_value(Sparse(1, 3), Vector([0.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        d_measure_value(Levels(1, 1, 2, 2), Vector([1.0, 0.0, 1.0, 0.0]))


def test_d_measure_secant_variant():
    # exposed for comparison: on secant members the secant variant vanishes
    z = Vector([1.0, -1.0, 0.0, 0.0])
    assert d_measure_value_secant(Sparse(1, 4), z) == 0.0
    gen = rng(32)
    for _ in range(100):
        z = Vector(gen.standard_normal(6))
        assert d_measure_value_secant(Sparse(1, 6), z) <= d_measure_value(Sparse(1, 6), z) + 1e-12


def test_d_sup_structured_examples():
    ones = WeightedL1(np.ones(8))
    assert d_sup_structured(Sparse(2, 8), ones) == pytest.approx(1.0, abs=1e-12)
    profile = d_structured_profile(Sparse(2, 5), WeightedL1(np.ones(5)))
    assert profile[2] == pytest.approx(1.0, abs=1e-12)
    assert d_sup_structured(LowRankSym(1, 3), Nuclear()) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        d_sup_structured(Sparse(2, 8), WeightedL1(np.arange(1.0, 9.0)))


def test_d_profile_matches_min_rule():
    for k, n in [(1, 6), (2, 7), (3, 9)]:
        profile = d_structured_profile(Sparse(k, n), WeightedL1(np.ones(n)))
        for L, val in profile.items():
            assert val == pytest.approx(min(1.0, L / k), abs=1e-9)


# ---------------------------------------------------------------------------
# Sampled lower bound on B
# ---------------------------------------------------------------------------


def test_b_sup_estimate_bounded_by_closed_form():
    ones5 = WeightedL1(np.ones(5))
    for seed in (0, 1, 2, 7):
        est = b_sup_estimate(Sparse(1, 5), ones5, 10_000, seed=seed)
        assert est <= b_star_sparse(1, 5).b + 1e-12
    est = b_sup_estimate(Sparse(2, 9), WeightedL1(np.ones(9)), 10_000, seed=3)
    assert est <= b_star_sparse(2, 9).b + 1e-12
    assert est >= b_star_sparse(2, 9).b - 5e-3


def test_b_sup_estimate_nonuniform_weights_exceed_optimum():
    gen = rng(33)
    for n in (3, 4):
        star = b_star_sparse(1, n).b
        for _ in range(20):
            w = np.ones(n)
            w[int(gen.integers(0, n))] = 1.0 + float(gen.uniform(0.2, 3.0))
            # deterministic margin from the structured witness family
            w_desc = np.sort(w)[::-1]
            margins = []
            for L in range(1, n - 2 + 1):
                alpha = max(w_desc[n - (1 + L) :].sum() / w_desc[0], 1.0)
                margins.append((L / 1.0) / (alpha**2 + 1.0))
            witness_best = max(margins)
            assert witness_best > star + 1e-6
            est = b_sup_estimate(Sparse(1, n), WeightedL1(w), 2_000, seed=9)
            assert est >= witness_best - 1e-12
            assert est > star


def test_b_sup_estimate_permutation_invariance():
    gen = rng(34)
    for _ in range(10):
        n = 6
        w = 10.0 ** gen.uniform(-0.5, 0.5, size=n)
        perm = gen.permutation(n)
        a = b_sup_estimate(Sparse(2, n), WeightedL1(w), 5_000, seed=17)
        b = b_sup_estimate(Sparse(2, n), WeightedL1(w[perm]), 5_000, seed=17)
        assert a == b


def test_b_sup_estimate_worker_invariance():
    a = b_sup_estimate(Sparse(1, 5), WeightedL1(np.ones(5)), 30_000, seed=5, workers=1)
    b = b_sup_estimate(Sparse(1, 5), WeightedL1(np.ones(5)), 30_000, seed=5, workers=4)
    assert a == b


def test_b_sup_estimate_nuclear_reduction():
    est = b_sup_estimate(LowRankSym(1, 5), Nuclear(), 5_000, seed=0)
    assert est <= b_star_sparse(1, 5).b + 1e-12
    assert est >= b_star_sparse(1, 5).b - 5e-3


def test_b_sup_estimate_levels_cross_check():
    model = Levels(1, 1, 4, 4)
    reg = LevelsL1(1.0, 2.0, 4, 4)
    est = b_sup_estimate(model, reg, 20_000, seed=0)
    w = LevelsWeights(1.0, 2.0)
    assembled = 0.0
    for L1 in range(0, 3):
        for L2 in range(0, 3):
            if L1 + L2 == 0:
                continue
            assembled = max(assembled, b_levels_oracle(w, 1, 1, L1, L2, 4001))
    assert est <= assembled + 1e-6
    assert est >= assembled - 1e-3


def test_b_sup_estimate_errors():
    with pytest.raises(ValueError):
        b_sup_estimate(Sparse(1, 5), WeightedL1(np.ones(5)), 0, seed=0)
    with pytest.raises(ValueError):
        b_sup_estimate(Sparse(1, 5), Nuclear(), 10, seed=0)


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------


def test_report_closed_form_sparse():
    rep = compliance_report(Sparse(2, 10), WeightedL1(np.ones(10)))
    assert rep.method == "closed_form"
    assert rep.delta_suff == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)
    assert rep.delta_nec == pytest.approx(29.0 / 41.0, abs=1e-15)
    assert rep.delta_suff <= rep.delta_nec
    assert rep.d_value == 1.0
    assert rep.delta_nec == 1.0 / (1.0 + 2.0 * rep.b_value)
    assert abs(rep.gamma_nec - (1.0 + rep.delta_nec) / (1.0 - rep.delta_nec)) <= 1e-12


def test_report_closed_form_lowrank():
    rep = compliance_report(LowRankSym(2, 10), Nuclear())
    assert rep.method == "closed_form"
    assert rep.delta_nec == pytest.approx(29.0 / 41.0, abs=1e-15)
    assert rep.delta_suff == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)


def test_report_levels_structured_search():
    rep = compliance_report(Levels(1, 1, 4, 4), LevelsL1(1.0, 1.0, 4, 4), grid=4001)
    assert rep.method == "structured_search"
    assert rep.delta_suff is None and rep.d_value is None
    assert rep.delta_nec == 1.0 / (1.0 + 2.0 * rep.b_value)
    assert 0.0 < rep.delta_nec < 1.0


def test_report_sampled_lower_bound():
    rep = compliance_report(Sparse(1, 5), WeightedL1(np.array([1, 1, 1, 1, 4.0])), samples=2000, seed=0)
    assert rep.method == "sampled_lower_bound"
    assert rep.delta_nec == 1.0 / (1.0 + 2.0 * rep.b_value)
    assert rep.b_value > b_star_sparse(1, 5).b


def test_report_rejects_unsupported():
    with pytest.raises(ValueError):
        compliance_report(Sparse(2, 4), WeightedL1(np.ones(4)))  # secant fills space
    with pytest.raises(ValueError):
        compliance_report(Levels(1, 1, 2, 2), LevelsL1(1.0, 1.0, 2, 2))  # same, per level
    with pytest.raises(ValueError):
        compliance_report(Sparse(1, 4), Nuclear())


def test_report_serialization():
    rep = compliance_report(Sparse(2, 10), WeightedL1(np.ones(10)))
    obj = rep.to_obj()
    assert set(obj) == {"delta_nec", "delta_suff", "gamma_nec", "b_value", "d_value", "method"}
    rep2 = compliance_report(Levels(1, 1, 4, 4), LevelsL1(1.0, 1.0, 4, 4), grid=2001)
    assert rep2.to_obj()["delta_suff"] is None
