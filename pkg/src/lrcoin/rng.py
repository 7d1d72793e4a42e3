"""Seedable deterministic byte generator used for all protocol randomness.

SHA-256 in counter mode: identical output for a given seed on every
platform, unpredictable without the seed. Unseeded instances draw their
key from os.urandom.
"""

from __future__ import annotations

import hashlib
import os


class Drbg:
    """Deterministic random generator (SHA-256 counter stream)."""

    def __init__(self, seed: int | bytes | str | None = None):
        if seed is None:
            key = os.urandom(32)
        elif isinstance(seed, bytes):
            key = hashlib.sha256(b"bytes:" + seed).digest()
        elif isinstance(seed, str):
            key = hashlib.sha256(b"str:" + seed.encode("utf-8")).digest()
        elif isinstance(seed, int):
            key = hashlib.sha256(b"int:" + str(seed).encode("ascii")).digest()
        else:
            raise TypeError(f"unsupported seed type: {type(seed).__name__}")
        self._key = key
        self._counter = 0
        self._buffer = b""

    def randbytes(self, n: int) -> bytes:
        if n < 0:
            raise ValueError("n must be >= 0")
        while len(self._buffer) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big"))
            self._counter += 1
            self._buffer += block.digest()
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def randbits(self, k: int) -> int:
        if k <= 0:
            return 0
        nbytes = (k + 7) // 8
        value = int.from_bytes(self.randbytes(nbytes), "big")
        return value >> (8 * nbytes - k)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow() requires n >= 1")
        k = (n - 1).bit_length()
        while True:
            value = self.randbits(k)
            if value < n:
                return value

    def randrange(self, a: int, b: int | None = None) -> int:
        if b is None:
            return self.randbelow(a)
        if b <= a:
            raise ValueError("empty range")
        return a + self.randbelow(b - a)

    def randint(self, a: int, b: int) -> int:
        return self.randrange(a, b + 1)

    def choice(self, seq):
        if not seq:
            raise IndexError("cannot choose from an empty sequence")
        return seq[self.randbelow(len(seq))]


def as_rng(rng: Drbg | int | bytes | str | None) -> Drbg:
    """Coerce a seed (or None) into a Drbg; pass existing Drbg through."""
    if isinstance(rng, Drbg):
        return rng
    return Drbg(rng)
