"""Recordable uniform variate streams and per-trial seed derivation.

Every random decision in a session is derived from uniforms drawn through a
stream; the stream keeps the variates drawn since the last transcript event
so each event can carry exactly the randomness it consumed. Replaying those
recorded variates re-derives the session.
"""

from __future__ import annotations

import hashlib
import random
from typing import Sequence, TypeVar

T = TypeVar("T")


class ReplayExhausted(RuntimeError):
    pass


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit sub-seed for trial ``index``."""
    digest = hashlib.blake2b(f"{master_seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class Variates:
    """Uniform [0, 1) variates from a seeded Mersenne Twister."""

    def __init__(self, seed: int) -> None:
        self._random = random.Random(seed).random
        self._pending: list[float] = []

    def _next(self) -> float:
        return self._random()

    def uniform(self) -> float:
        u = self._next()
        self._pending.append(u)
        return u

    def drain(self) -> list[float]:
        out, self._pending = self._pending, []
        return out

    def index(self, k: int) -> int:
        """Uniform integer in [0, k)."""
        return min(int(self.uniform() * k), k - 1)

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        """k items without replacement (partial Fisher-Yates), sorted by input order."""
        pool = list(population)
        n = len(pool)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n}")
        rank = {item: i for i, item in enumerate(pool)}
        for i in range(k):
            j = i + self.index(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k], key=rank.__getitem__)


class ReplayVariates(Variates):
    """Feeds back a recorded variate sequence."""

    def __init__(self, recorded: Sequence[float]) -> None:
        self._recorded = list(recorded)
        self._pos = 0
        self._pending = []

    def _next(self) -> float:
        if self._pos >= len(self._recorded):
            raise ReplayExhausted(f"recorded variates exhausted after {self._pos}")
        u = self._recorded[self._pos]
        self._pos += 1
        return u

    @property
    def remaining(self) -> int:
        return len(self._recorded) - self._pos
