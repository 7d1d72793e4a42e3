"""Bilinear group abstraction with an exact small-prime mock backend.

The mock backend stores every group element as its discrete log with
respect to the fixed generator, so the group laws, the pairing and the
GT-to-scalar reduction are plain modular arithmetic and every protocol
equation can be brute-force checked. It is deliberately insecure:
constructing mock parameters above MOCK_MAX_BITS bits requires an
explicit override, and `setup()` never hands such parameters out.

The call surface is written for an asymmetric (Type-3) pairing so that a
real pairing-curve backend can be slotted in behind the same functions;
only the mock backend is implemented here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .primes import is_prime

MOCK_BACKEND = "mock"
CURVE_BACKEND = "curve"

TOY_PRIME = 101
MOCK_MAX_BITS = 20

_BACKEND_TAGS = {MOCK_BACKEND: 1, CURVE_BACKEND: 2}
_TAG_BACKENDS = {tag: name for name, tag in _BACKEND_TAGS.items()}


class UnsupportedBackendError(ValueError):
    """Requested backend / security-level combination is not available."""


class ParamsMismatchError(ValueError):
    """Operands belong to different parameter sets or backends."""


class EncodingError(ValueError):
    """Byte string is not a canonical encoding."""


@dataclass(frozen=True, slots=True)
class _Element:
    p: int
    x: int
    backend: str = MOCK_BACKEND

    def __post_init__(self):
        if not 0 <= self.x < self.p:
            raise ValueError("element value must be reduced mod p")


class G1Elem(_Element):
    __slots__ = ()


class G2Elem(_Element):
    __slots__ = ()


class GTElem(_Element):
    __slots__ = ()


@dataclass(frozen=True)
class BilinearParams:
    p: int
    backend_id: str
    g1_gen: G1Elem
    g2_gen: G2Elem
    gt_gen: GTElem


def mock_params(p: int, *, allow_large: bool = False) -> BilinearParams:
    """Mock parameters for a given prime group order.

    Refuses p above MOCK_MAX_BITS bits unless `allow_large` is set; the
    override exists for tests and experiments that need big exponents but
    must never reach production use.
    """
    if not is_prime(p):
        raise ValueError(f"group order must be prime, got {p}")
    if p <= 3:
        raise ValueError("group order must exceed 3")
    if p.bit_length() > MOCK_MAX_BITS and not allow_large:
        raise UnsupportedBackendError(
            f"mock backend refuses p above {MOCK_MAX_BITS} bits; "
            "pass allow_large=True only for testing"
        )
    return BilinearParams(
        p=p,
        backend_id=MOCK_BACKEND,
        g1_gen=G1Elem(p, 1),
        g2_gen=G2Elem(p, 1),
        gt_gen=GTElem(p, 1),
    )


def setup(security_level: str = "toy", backend: str = MOCK_BACKEND,
          seed=None) -> BilinearParams:
    """Produce a consistent parameter set for the given security level.

    `seed` is accepted for interface parity with a curve backend that
    samples its parameters; the mock toy setup is fully deterministic.
    """
    if backend == MOCK_BACKEND:
        if security_level == "toy":
            return mock_params(TOY_PRIME)
        raise UnsupportedBackendError(
            f"mock backend only supports the toy level, not {security_level!r}"
        )
    if backend == CURVE_BACKEND:
        raise UnsupportedBackendError("curve backend is not wired into this build")
    raise UnsupportedBackendError(f"unknown backend {backend!r}")


def elem_width(p: int) -> int:
    """Canonical encoding width in bytes (4 for every policy-sized mock p)."""
    return max(4, (p.bit_length() + 7) // 8)


def _check_pair_args(a, b, want_a, want_b):
    if not isinstance(a, want_a) or not isinstance(b, want_b):
        raise ParamsMismatchError(
            f"expected ({want_a.__name__}, {want_b.__name__}), "
            f"got ({type(a).__name__}, {type(b).__name__})"
        )
    if a.p != b.p or a.backend != b.backend:
        raise ParamsMismatchError("operands from different parameter sets")


def g1_identity(params: BilinearParams) -> G1Elem:
    return G1Elem(params.p, 0)


def g2_identity(params: BilinearParams) -> G2Elem:
    return G2Elem(params.p, 0)


def gt_identity(params: BilinearParams) -> GTElem:
    return GTElem(params.p, 0)


def g1_add(a: G1Elem, b: G1Elem) -> G1Elem:
    _check_pair_args(a, b, G1Elem, G1Elem)
    return G1Elem(a.p, (a.x + b.x) % a.p)


def g1_neg(a: G1Elem) -> G1Elem:
    return G1Elem(a.p, -a.x % a.p)


def g1_sub(a: G1Elem, b: G1Elem) -> G1Elem:
    return g1_add(a, g1_neg(b))


def g1_scalar_mul(k: int, a: G1Elem) -> G1Elem:
    return G1Elem(a.p, k % a.p * a.x % a.p)


def g2_add(a: G2Elem, b: G2Elem) -> G2Elem:
    _check_pair_args(a, b, G2Elem, G2Elem)
    return G2Elem(a.p, (a.x + b.x) % a.p)


def g2_scalar_mul(k: int, a: G2Elem) -> G2Elem:
    return G2Elem(a.p, k % a.p * a.x % a.p)


def gt_mul(a: GTElem, b: GTElem) -> GTElem:
    _check_pair_args(a, b, GTElem, GTElem)
    return GTElem(a.p, (a.x + b.x) % a.p)


def gt_inv(a: GTElem) -> GTElem:
    return GTElem(a.p, -a.x % a.p)


def gt_pow(a: GTElem, k: int) -> GTElem:
    return GTElem(a.p, k % a.p * a.x % a.p)


def pair(a: G1Elem, b: G2Elem) -> GTElem:
    """Bilinear map: pair(k*a, b) == gt_pow(pair(a, b), k) in both slots."""
    _check_pair_args(a, b, G1Elem, G2Elem)
    return GTElem(a.p, a.x * b.x % a.p)


def reduce_f(r: GTElem) -> int:
    """Almost invertible reduction GT -> scalar.

    Mock backend: identity on the exponent representation. A curve
    backend must interpret the canonical byte encoding of the GT element
    as a big-endian integer and reduce it mod p.
    """
    return r.x


def hash_to_scalar(msg: bytes, p: int) -> int:
    """SHA-256 digest of msg, big-endian, reduced mod p."""
    return int.from_bytes(hashlib.sha256(msg).digest(), "big") % p


# --- canonical encodings --------------------------------------------------
#
# Elements and scalars: fixed-width big-endian value, width = elem_width(p).
# Params: 1 backend tag byte, then u16 length prefix and minimal big-endian p.


def encode_scalar(params: BilinearParams, k: int) -> bytes:
    return (k % params.p).to_bytes(elem_width(params.p), "big")


def decode_scalar(params: BilinearParams, data: bytes) -> int:
    value = _decode_value(params, data)
    return value


def _decode_value(params: BilinearParams, data: bytes) -> int:
    width = elem_width(params.p)
    if len(data) != width:
        raise EncodingError(f"expected {width} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= params.p:
        raise EncodingError("encoded value not reduced mod p")
    return value


def encode_g1(e: G1Elem) -> bytes:
    return e.x.to_bytes(elem_width(e.p), "big")


def decode_g1(params: BilinearParams, data: bytes) -> G1Elem:
    return G1Elem(params.p, _decode_value(params, data))


def encode_g2(e: G2Elem) -> bytes:
    return e.x.to_bytes(elem_width(e.p), "big")


def decode_g2(params: BilinearParams, data: bytes) -> G2Elem:
    return G2Elem(params.p, _decode_value(params, data))


def encode_gt(e: GTElem) -> bytes:
    return e.x.to_bytes(elem_width(e.p), "big")


def decode_gt(params: BilinearParams, data: bytes) -> GTElem:
    return GTElem(params.p, _decode_value(params, data))


def encode_params(params: BilinearParams) -> bytes:
    p_bytes = params.p.to_bytes((params.p.bit_length() + 7) // 8, "big")
    return bytes([_BACKEND_TAGS[params.backend_id]]) + len(p_bytes).to_bytes(2, "big") + p_bytes


def decode_params(data: bytes) -> tuple[BilinearParams, int]:
    """Decode a parameter block; returns (params, bytes consumed).

    Decoding does not apply the MOCK_MAX_BITS policy gate: serialized
    artifacts produced under the test override must stay readable.
    """
    if len(data) < 3:
        raise EncodingError("truncated parameter block")
    backend = _TAG_BACKENDS.get(data[0])
    if backend is None:
        raise EncodingError(f"unknown backend tag {data[0]}")
    if backend != MOCK_BACKEND:
        raise UnsupportedBackendError("curve backend is not wired into this build")
    plen = int.from_bytes(data[1:3], "big")
    if len(data) < 3 + plen:
        raise EncodingError("truncated parameter block")
    p_bytes = data[3:3 + plen]
    if plen == 0 or p_bytes[0] == 0:
        raise EncodingError("group order must be minimal big-endian")
    p = int.from_bytes(p_bytes, "big")
    try:
        params = mock_params(p, allow_large=True)
    except ValueError as exc:
        raise EncodingError(str(exc)) from exc
    return params, 3 + plen
