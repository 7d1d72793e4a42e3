"""Split-key stateful signatures over a bilinear group.

The signing key d exists only inside key generation. Afterwards it lives
as two G1 shares whose sum is d*P1; every round re-randomizes both shares
with a fresh mask and emits an ECDSA-shaped signature (r, s) that a
single pairing verifies. The two signing steps touch disjoint halves of
the state, so each step only ever reads one share.

State is exclusively owned and mutated in place by the signing steps;
verification is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .bilinear import (
    BilinearParams,
    EncodingError,
    G1Elem,
    GTElem,
    ParamsMismatchError,
    decode_g1,
    decode_gt,
    decode_params,
    elem_width,
    encode_g1,
    encode_gt,
    encode_params,
    g1_add,
    g1_scalar_mul,
    g1_sub,
    gt_mul,
    gt_pow,
    hash_to_scalar,
    pair,
    reduce_f,
)
from .rng import Drbg, as_rng

HashFn = Callable[[bytes], int]

SIG_TAG = 0x01
# Exported secret-share files start with this warning byte.
SECRET_MAGIC = 0x21
_SHARE_TAGS = {"a": 0xA1, "b": 0xB2}
_TAG_SHARES = {tag: which for which, tag in _SHARE_TAGS.items()}


class RoundMismatchError(RuntimeError):
    """The two key shares (or a transfer blob) are out of step."""


@dataclass(frozen=True)
class PublicKey:
    params: BilinearParams
    q: GTElem


@dataclass
class SecretState:
    """Both key shares plus their per-share round counters.

    Each share carries its own counter so a desynchronized pair (e.g. one
    half restored from a stale copy) is detected as a hard error instead
    of silently signing with a broken key.
    """

    params: BilinearParams
    share_a: G1Elem
    share_b: G1Elem
    round_a: int = 0
    round_b: int = 0

    @property
    def round(self) -> int:
        """Number of completed signing rounds."""
        return self.round_b


@dataclass(frozen=True)
class TransferState:
    """State handed from the first signing step to the second.

    `delta` is the fresh mask times the G1 generator; the raw mask scalar
    never crosses the boundary between the two memory halves.
    """

    round: int
    w: G1Elem
    h: int
    r: int
    delta: G1Elem


@dataclass(frozen=True)
class Signature:
    r: int
    s: G1Elem


def _hash(msg: bytes, p: int, hash_fn: Optional[HashFn]) -> int:
    if hash_fn is None:
        return hash_to_scalar(msg, p)
    return hash_fn(msg) % p


def keygen(params: BilinearParams, rng: Drbg | int | None = None, *,
           d: int | None = None, l0: int | None = None) -> tuple[PublicKey, SecretState]:
    """Generate a public key and the initial pair of key shares.

    d and l0 may be forced for test vectors; degenerate forced values are
    rejected, randomly drawn ones are resampled. A zero share would leak
    the whole key in one round.
    """
    rng = as_rng(rng)
    p = params.p
    if d is None:
        d = 1 + rng.randbelow(p - 1)
    elif not 0 < d < p:
        raise ValueError("d must be in [1, p-1]")
    if l0 is None:
        while True:
            l0 = rng.randbelow(p)
            if l0 not in (0, d):
                break
    elif l0 % p in (0, d):
        raise ValueError("l0 must not make either share zero")
    share_a = g1_scalar_mul(l0, params.g1_gen)
    share_b = g1_scalar_mul(d - l0, params.g1_gen)
    pk = PublicKey(params, gt_pow(params.gt_gen, d))
    return pk, SecretState(params=params, share_a=share_a, share_b=share_b)


def sign_step1(state: SecretState, msg: bytes, rng: Drbg | int | None = None, *,
               hash_fn: Optional[HashFn] = None,
               l: int | None = None, t: int | None = None) -> TransferState:
    """First signing step: refresh the active share and build the transfer.

    Draws the round mask l and nonce t (resampling t until the reduced
    commitment r is nonzero), replaces share_a with share_a + l*P1 and
    returns (w, h, r, delta) for the second step. Forced l/t are for test
    vectors only.
    """
    if state.round_a != state.round_b:
        raise RoundMismatchError(
            f"share rounds out of step (a={state.round_a}, b={state.round_b})"
        )
    params = state.params
    p = params.p
    rng = as_rng(rng)
    if l is None:
        l = rng.randbelow(p)
    if t is None:
        while True:
            t = rng.randbelow(p)
            r = reduce_f(gt_pow(params.gt_gen, t))
            if r != 0:
                break
    else:
        r = reduce_f(gt_pow(params.gt_gen, t))
        if r == 0:
            raise ValueError("forced nonce t reduces to r == 0")
    h = _hash(msg, p, hash_fn)
    delta = g1_scalar_mul(l, params.g1_gen)
    state.share_a = g1_add(state.share_a, delta)
    state.round_a += 1
    w = g1_add(g1_scalar_mul(t, params.g1_gen),
               g1_scalar_mul(h * r, state.share_a))
    return TransferState(round=state.round_a, w=w, h=h, r=r, delta=delta)


def sign_step2(state: SecretState, transfer: TransferState) -> Signature:
    """Second signing step: refresh the passive share and finish the signature."""
    if transfer.round != state.round_b + 1 or transfer.round != state.round_a:
        raise RoundMismatchError(
            f"transfer is for round {transfer.round}, shares are at "
            f"(a={state.round_a}, b={state.round_b})"
        )
    state.share_b = g1_sub(state.share_b, transfer.delta)
    state.round_b += 1
    s = g1_add(transfer.w, g1_scalar_mul(transfer.h * transfer.r, state.share_b))
    return Signature(r=transfer.r, s=s)


def sign(state: SecretState, msg: bytes, rng: Drbg | int | None = None, *,
         hash_fn: Optional[HashFn] = None) -> Signature:
    """Run both signing steps; advances the state by exactly one round."""
    transfer = sign_step1(state, msg, rng, hash_fn=hash_fn)
    return sign_step2(state, transfer)


def verify(pk: PublicKey, msg: bytes, sig: Signature, *,
           hash_fn: Optional[HashFn] = None) -> bool:
    """Pairing check: f(e(s, P2) * Q^-(h*r)) == r. Stateless; r == 0 rejected."""
    params = pk.params
    p = params.p
    try:
        r = sig.r
        if not isinstance(r, int) or not 0 < r < p:
            return False
        s = sig.s
        if not isinstance(s, G1Elem) or s.p != p or s.backend != params.backend_id:
            return False
        h = _hash(msg, p, hash_fn)
        rv = gt_mul(pair(s, params.g2_gen), gt_pow(pk.q, -(h * r)))
        return reduce_f(rv) == r
    except (ValueError, ParamsMismatchError):
        return False


def shares_consistent(pk: PublicKey, state: SecretState) -> bool:
    """Pairing-visible form of share_a + share_b == d*P1."""
    g2 = pk.params.g2_gen
    combined = gt_mul(pair(state.share_a, g2), pair(state.share_b, g2))
    return combined == pk.q


# --- serialization ---------------------------------------------------------


def encode_public_key(pk: PublicKey) -> bytes:
    return encode_params(pk.params) + encode_gt(pk.q)


def decode_public_key(data: bytes) -> PublicKey:
    params, used = decode_params(data)
    q = decode_gt(params, data[used:])
    return PublicKey(params, q)


def encode_signature(sig: Signature) -> bytes:
    r_bytes = sig.r.to_bytes(max(1, (sig.r.bit_length() + 7) // 8), "big")
    return bytes([SIG_TAG]) + len(r_bytes).to_bytes(2, "big") + r_bytes + encode_g1(sig.s)


def decode_signature(params: BilinearParams, data: bytes) -> Signature:
    if len(data) < 3 or data[0] != SIG_TAG:
        raise EncodingError("bad signature tag")
    rlen = int.from_bytes(data[1:3], "big")
    if rlen == 0 or len(data) < 3 + rlen:
        raise EncodingError("truncated signature")
    r_bytes = data[3:3 + rlen]
    if rlen > 1 and r_bytes[0] == 0:
        raise EncodingError("r must be minimal big-endian")
    r = int.from_bytes(r_bytes, "big")
    if r >= params.p:
        raise EncodingError("r not reduced mod p")
    s = decode_g1(params, data[3 + rlen:])
    return Signature(r=r, s=s)


def encode_secret_share(params: BilinearParams, which: str, round_: int,
                        share: G1Elem) -> bytes:
    if which not in _SHARE_TAGS:
        raise ValueError("which must be 'a' or 'b'")
    return (bytes([SECRET_MAGIC]) + encode_params(params)
            + bytes([_SHARE_TAGS[which]]) + round_.to_bytes(8, "big")
            + encode_g1(share))


def decode_secret_share(data: bytes) -> tuple[BilinearParams, str, int, G1Elem]:
    if not data or data[0] != SECRET_MAGIC:
        raise EncodingError("missing secret-share warning byte")
    params, used = decode_params(data[1:])
    rest = data[1 + used:]
    if len(rest) != 1 + 8 + elem_width(params.p):
        raise EncodingError("bad secret-share length")
    which = _TAG_SHARES.get(rest[0])
    if which is None:
        raise EncodingError(f"unknown share tag {rest[0]}")
    round_ = int.from_bytes(rest[1:9], "big")
    share = decode_g1(params, rest[9:])
    return params, which, round_, share


def export_state(state: SecretState) -> tuple[bytes, bytes]:
    """Serialize the two halves separately (split-memory model)."""
    return (
        encode_secret_share(state.params, "a", state.round_a, state.share_a),
        encode_secret_share(state.params, "b", state.round_b, state.share_b),
    )


def import_state(blob_a: bytes, blob_b: bytes) -> SecretState:
    """Rebuild a SecretState from the two share files.

    Round desynchronization is not rejected here: the state is loadable
    for inspection, and the next sign_step1 call raises RoundMismatchError.
    """
    params_a, which_a, round_a, share_a = decode_secret_share(blob_a)
    params_b, which_b, round_b, share_b = decode_secret_share(blob_b)
    if (which_a, which_b) != ("a", "b"):
        raise EncodingError("share files are not an (a, b) pair")
    if params_a != params_b:
        raise ParamsMismatchError("share files use different parameters")
    return SecretState(params=params_a, share_a=share_a, share_b=share_b,
                       round_a=round_a, round_b=round_b)
