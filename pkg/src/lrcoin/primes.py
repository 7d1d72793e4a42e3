"""Primality testing and random prime generation."""

from __future__ import annotations

import hashlib

from .rng import Drbg, as_rng

_SMALL_PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
    67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137,
    139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199,
)

# Deterministic witness set, sufficient for all n < 3.317e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_mr_witness(a: int, d: int, r: int, n: int) -> bool:
    x = pow(a, d, n)
    if x in (1, n - 1):
        return False
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return False
    return True


def _extra_bases(n: int, count: int):
    # Pseudorandom but deterministic witnesses for n beyond the proven range.
    seed = n.to_bytes((n.bit_length() + 7) // 8, "big")
    i = 0
    while count > 0:
        digest = hashlib.sha256(seed + i.to_bytes(4, "big")).digest()
        a = 2 + int.from_bytes(digest, "big") % (n - 3)
        yield a
        count -= 1
        i += 1


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    bases = list(_MR_BASES)
    if n >= 1 << 64:
        bases.extend(_extra_bases(n, 16))
    return not any(_is_mr_witness(a % n, d, r, n) for a in bases)


def gen_prime(bits: int, rng: Drbg | int | None = None) -> int:
    """Random prime with exactly `bits` bits (top bit set)."""
    if bits < 2:
        raise ValueError("bits must be >= 2")
    rng = as_rng(rng)
    while True:
        candidate = rng.randbits(bits) | (1 << (bits - 1)) | 1
        if is_prime(candidate):
            return candidate
