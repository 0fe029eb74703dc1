"""Brute-force cross-validation battery behind the `oracle` CLI command.

Each check pits a closed form against an independent computation: the gauge
norm against the covering-program oracle, the two-block levels program
against its sandwich bounds, and support-enumerated restricted conditioning
against its rank-one closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compliance import gamma_nec_point, restricted_conditioning, rip_rc_convert
from .levels import LevelsWeights, b_levels_bound, b_levels_oracle
from .models import Sparse, Vector, model_norm, model_norm_oracle
from .parallel import chunk_generator

__all__ = ["CheckResult", "check_model_norm_oracle", "check_levels_sandwich", "check_rip_vs_formula", "run_battery"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    max_deviation: float
    tolerance: float
    trials: int

    def to_obj(self) -> dict:
        return {
            "name": self.name,
            "ok": self.ok,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "trials": self.trials,
        }


def check_model_norm_oracle(trials: int = 200, seed: int = 0) -> CheckResult:
    gen = chunk_generator(seed, 101)
    worst = 0.0
    for _ in range(trials):
        n = int(gen.integers(2, 7))
        k = int(gen.integers(1, min(3, n) + 1))
        z = gen.standard_normal(n)
        z /= np.linalg.norm(z)
        model = Sparse(k, n)
        point = Vector(z)
        worst = max(worst, abs(model_norm(model, point) - model_norm_oracle(model, point)))
    return CheckResult("model_norm_vs_covering_oracle", worst <= 1e-6, worst, 1e-6, trials)


def check_levels_sandwich(trials: int = 200, seed: int = 0, grid: int = 10**4) -> CheckResult:
    gen = chunk_generator(seed, 202)
    worst = 0.0
    ok = True
    for _ in range(trials):
        k1 = int(gen.integers(1, 7))
        k2 = int(gen.integers(1, 7))
        L1 = int(gen.integers(0, 9))
        L2 = int(gen.integers(0, 9))
        if L1 + L2 == 0:
            L1 = 1
        w = LevelsWeights(float(10.0 ** gen.uniform(-1, 1)), float(10.0 ** gen.uniform(-1, 1)))
        bound = b_levels_bound(w, k1, k2, L1, L2)
        val = b_levels_oracle(w, k1, k2, L1, L2, grid)
        below = bound.lower - val
        above = val - bound.upper
        worst = max(worst, below, above)
        if not (bound.lower - 1e-6 <= val <= bound.upper + 1e-6):
            ok = False
        if bound.exact:
            gap = abs(val - bound.upper)
            worst = max(worst, gap)
            if gap > 1e-3:
                ok = False
    return CheckResult("levels_program_vs_sandwich", ok, worst, 1e-3, trials)


def check_rip_vs_formula(trials: int = 200, seed: int = 0) -> CheckResult:
    # Compared after conversion to the RIP scale: gamma = 1/tail is
    # ill-conditioned in floating point when z sits near a secant support,
    # while delta = (gamma-1)/(gamma+1) is uniformly well-conditioned.
    gen = chunk_generator(seed, 303)
    worst = 0.0
    for _ in range(trials):
        k = int(gen.integers(1, 3))
        n = int(gen.integers(2 * k + 1, 9))
        z = gen.standard_normal(n)
        z /= np.linalg.norm(z)
        M = np.eye(n) - np.outer(z, z)
        model = Sparse(k, n)
        enum = restricted_conditioning(model, M)
        closed = gamma_nec_point(model, Vector(z))
        dev = abs(rip_rc_convert(enum, "rc_to_rip") - rip_rc_convert(closed, "rc_to_rip"))
        if max(enum, closed) <= 10.0:
            dev = max(dev, abs(enum - closed))
        worst = max(worst, dev)
    return CheckResult("restricted_conditioning_vs_rank_one_formula", worst <= 1e-10, worst, 1e-10, trials)


def run_battery(trials: int = 200, seed: int = 0) -> list:
    return [
        check_model_norm_oracle(trials, seed),
        check_levels_sandwich(trials, seed),
        check_rip_vs_formula(trials, seed),
    ]
