"""Deterministic chunked execution with counter-based random streams.

Work is split into fixed-size chunks indexed 0..n-1; chunk i draws from its
own Philox stream keyed by (seed, i).  Results are merged in chunk order, so
a run is a pure function of (seed, total size) and is bit-identical for any
worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List

import numpy as np

__all__ = ["CHUNK", "chunk_sizes", "chunk_generator", "map_chunks", "resolve_workers"]

CHUNK = 4096

_MASK64 = (1 << 64) - 1


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one chunk."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_sizes(total: int, chunk: int = CHUNK) -> List[int]:
    if total < 0:
        raise ValueError("total must be nonnegative")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def resolve_workers(workers=None) -> int:
    if workers is None:
        env = os.environ.get("REGCOMP_WORKERS")
        if env is not None:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def map_chunks(fn: Callable[[int], object], n_chunks: int, workers=None) -> list:
    """Apply fn to chunk indices 0..n_chunks-1, preserving index order."""
    w = resolve_workers(workers)
    if n_chunks <= 0:
        return []
    if w == 1 or n_chunks == 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=min(w, n_chunks)) as pool:
        return list(pool.map(fn, range(n_chunks)))
