"""Random streams.

Every sampling run draws from its own PCG64 stream derived from
``(seed, run_index)``, so results do not depend on how runs are scheduled.
Bounded integers are produced by top-bit masking with rejection on raw
64-bit words; the compiled kernel uses the same rule, which keeps the two
backends draw-for-draw identical.
"""

from __future__ import annotations

import secrets

import numpy as np

_BUFFER = 512


def fresh_seed() -> int:
    return secrets.randbits(63)


def run_stream(seed: int, run_index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(run_index,))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return run_stream(int(rng))


class RawStream:
    """Buffered view of a generator's raw 64-bit output."""

    def __init__(self, rng: np.random.Generator):
        self._bitgen = rng.bit_generator
        self._buf: list[int] = []
        self._pos = 0

    def next64(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bitgen.random_raw(_BUFFER).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def randbelow(self, n: int) -> int:
        """Uniform integer in ``[0, n)``; consumes no words when ``n == 1``."""
        if n <= 1:
            if n == 1:
                return 0
            raise ValueError("randbelow needs n >= 1")
        k = (n - 1).bit_length()
        if k <= 64:
            shift = 64 - k
            while True:
                x = self.next64() >> shift
                if x < n:
                    return x
        words = -(-k // 64)
        excess = 64 * words - k
        while True:
            x = 0
            for _ in range(words):
                x = (x << 64) | self.next64()
            x >>= excess
            if x < n:
                return x
