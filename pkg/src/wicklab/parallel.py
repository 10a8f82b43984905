"""Per-replica seed derivation and an ordered worker pool.

Replica ``i`` of a run with master seed ``s`` always draws from
``numpy.random.default_rng(derive_seed(s, i))``, so results do not depend on
how replicas are split across workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """64-bit seed for replica ``index``: ``splitmix64(splitmix64(master) ^ index)``."""
    return splitmix64(splitmix64(master & _MASK) ^ (index & _MASK))


def replica_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, index))


def thread_count(default: int | None = None) -> int:
    env = os.environ.get("WICKLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return default or 1


def chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(i, min(i + size, total)) for i in range(0, total, size)]


def ordered_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on a thread pool; output order is input order."""
    items = list(items)
    threads = thread_count() if threads is None else max(1, threads)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class MeanVar:
    """Mergeable running mean and variance (Chan et al. pairwise update)."""

    def __init__(self, shape=()):
        self.count = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    def add_batch(self, x: np.ndarray) -> "MeanVar":
        x = np.asarray(x)
        other = MeanVar(x.shape[1:])
        other.count = x.shape[0]
        other.mean = x.mean(axis=0)
        other.m2 = ((x - other.mean) ** 2).sum(axis=0)
        return self.merge(other)

    def merge(self, other: "MeanVar") -> "MeanVar":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean.copy(), other.m2.copy()
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean = self.mean + delta * other.count / n
        self.m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        self.count = n
        return self

    @property
    def variance(self):
        return self.m2 / max(self.count - 1, 1)

    @property
    def stderr(self):
        return np.sqrt(self.variance / max(self.count, 1))
