import numpy as np

from regcomp.models import Vector


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def brute_force_cone_1sparse(weights: np.ndarray, z: np.ndarray) -> bool:
    """Exhaustive descent-cone membership for weighted l1 at a 1-sparse model:
    scan candidate base points +-t e_i and step scales, including the
    data-adaptive scales that zero out a coordinate."""
    w = np.asarray(weights, dtype=float)
    n = w.size
    grid = np.concatenate([np.geomspace(1e-6, 1e6, 1500), [0.0]])
    for i in range(n):
        rest = float(np.dot(w, np.abs(z))) - w[i] * abs(z[i])
        for sign in (1.0, -1.0):
            scales = list(grid)
            if z[i] != 0.0:
                scales.extend([abs(1.0 / z[i]), abs(1.0 / z[i]) * (1 + 1e-9)])
            for mag in scales:
                for u in (mag, -mag):
                    if u == 0.0:
                        continue
                    if w[i] * abs(sign + u * z[i]) + abs(u) * rest <= w[i] + 1e-15:
                        return True
    return False


def random_sparse_point(gen: np.random.Generator, k: int, n: int) -> Vector:
    v = np.zeros(n)
    idx = gen.choice(n, size=k, replace=False)
    v[idx] = gen.standard_normal(k)
    if np.all(v == 0.0):
        v[idx[0]] = 1.0
    return Vector(v)
