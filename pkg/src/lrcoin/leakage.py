"""Sign-leak game: per-round bounded leakage against the split-key signer.

Each signing round the adversary names two leakage functions, one per
memory half. The first sees only the active share and the round
randomness, the second only the passive share, its (empty) randomness and
the transfer blob; each must declare exactly lambda output bits or the
oracle returns bottom without touching any state. `run_attack` turns the
motivating break/defense pair into a measurable experiment: a windowed
bit-leakage adversary fully recovers an unrefreshed key and never
recovers the refreshed, split key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .bilinear import (
    BilinearParams,
    elem_width,
    encode_g1,
    encode_scalar,
    g1_scalar_mul,
    gt_pow,
    hash_to_scalar,
    mock_params,
    reduce_f,
)
from .lrsig import (
    HashFn,
    PublicKey,
    SecretState,
    Signature,
    keygen,
    sign_step1,
    sign_step2,
    verify,
)
from .primes import gen_prime
from .rng import Drbg, as_rng


class LeakageBudgetError(Exception):
    """Leakage function declares a different output length than lambda."""


class LeakageOutputError(ValueError):
    """Leakage function produced output inconsistent with its declaration."""


@dataclass(frozen=True)
class LeakageFn:
    """Efficiently computable map from byte views to a fixed bit string.

    The callable receives the raw byte views positionally (active share
    and randomness for the first half; passive share, randomness and
    transfer for the second) and must return a '0'/'1' string of exactly
    `out_bits` characters.
    """

    name: str
    out_bits: int
    func: Callable[..., str]

    def __call__(self, *views: bytes) -> str:
        out = self.func(*views)
        if len(out) != self.out_bits or out.strip("01"):
            raise LeakageOutputError(
                f"{self.name} declared {self.out_bits} bits, produced {out!r}"
            )
        return out


def _view_bits(views: tuple[bytes, ...]) -> str:
    return "".join(f"{byte:08b}" for view in views for byte in view)


def bit_window(lam: int, offset: int = 0) -> LeakageFn:
    """lam bits of the concatenated views starting at a bit offset
    (zero-padded past the end)."""

    def func(*views: bytes) -> str:
        bits = _view_bits(views)[offset:offset + lam]
        return bits.ljust(lam, "0")

    return LeakageFn(f"bit-window[{offset}:{offset + lam}]", lam, func)


def prefix_bits(lam: int) -> LeakageFn:
    fn = bit_window(lam, 0)
    return LeakageFn("prefix-bits", lam, fn.func)


def xor_fold(lam: int) -> LeakageFn:
    """XOR of consecutive lam-bit blocks of the concatenated views."""

    def func(*views: bytes) -> str:
        if lam == 0:
            return ""
        bits = _view_bits(views)
        if not bits:
            return "0" * lam
        acc = 0
        for i in range(0, len(bits), lam):
            acc ^= int(bits[i:i + lam].ljust(lam, "0"), 2)
        return format(acc, f"0{lam}b")

    return LeakageFn("xor-fold", lam, func)


@dataclass(frozen=True)
class LeakRecord:
    msg: bytes
    sig: Signature
    leak_a: str
    leak_b: str


@dataclass
class GameState:
    """Challenger-side bookkeeping; `signer` is hidden from the adversary."""

    pk: PublicKey
    lam: int
    signer: SecretState
    rng: Drbg
    hash_fn: Optional[HashFn] = None
    counter: int = 1
    queried: set = field(default_factory=set)
    transcript: list = field(default_factory=list)
    finished: bool = False


@dataclass(frozen=True)
class ForgeryVerdict:
    b: int
    reason: str  # valid-fresh-forgery | verify-failed | message-already-queried


def new_game(params: BilinearParams, lam: int, seed: Drbg | int | None = None, *,
             hash_fn: Optional[HashFn] = None) -> tuple[GameState, PublicKey]:
    """Fresh keypair and game bookkeeping; the adversary receives only pk."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    rng = as_rng(seed)
    pk, state = keygen(params, rng)
    game = GameState(pk=pk, lam=lam, signer=state, rng=rng, hash_fn=hash_fn)
    return game, pk


def _draw_nonce(params: BilinearParams, rng: Drbg) -> tuple[int, int]:
    while True:
        t = rng.randbelow(params.p)
        r = reduce_f(gt_pow(params.gt_gen, t))
        if r != 0:
            return t, r


def sign_leak_query(game: GameState, msg: bytes, f: LeakageFn,
                    h: LeakageFn) -> tuple[Signature, str, str]:
    """Honest signature on msg plus the two per-half leakages.

    Returns bottom (LeakageBudgetError) without touching any state if
    either function declares an output length != lambda.
    """
    if game.finished:
        raise RuntimeError("game is over")
    if f.out_bits != game.lam or h.out_bits != game.lam:
        raise LeakageBudgetError(
            f"leakage functions must declare exactly {game.lam} bits"
        )
    state = game.signer
    params = state.params
    share_a_view = encode_g1(state.share_a)

    l = game.rng.randbelow(params.p)
    t, _ = _draw_nonce(params, game.rng)
    rand_view = encode_scalar(params, l) + encode_scalar(params, t)
    leak_a = f(share_a_view, rand_view)

    transfer = sign_step1(state, msg, hash_fn=game.hash_fn, l=l, t=t)

    share_b_view = encode_g1(state.share_b)
    leak_b = h(share_b_view, b"", encode_g1(transfer.w))

    sig = sign_step2(state, transfer)
    game.queried.add(bytes(msg))
    game.transcript.append(LeakRecord(bytes(msg), sig, leak_a, leak_b))
    game.counter += 1
    return sig, leak_a, leak_b


def sign_leak_query_adaptive(game: GameState, msg: bytes, f: LeakageFn,
                             choose_h: Callable[[str], LeakageFn]
                             ) -> tuple[Signature, str, str]:
    """Two-phase variant: the second leakage function may depend on the
    first leakage output. An invalid late choice aborts after the first
    half already ran."""
    if game.finished:
        raise RuntimeError("game is over")
    if f.out_bits != game.lam:
        raise LeakageBudgetError(
            f"leakage functions must declare exactly {game.lam} bits"
        )
    state = game.signer
    params = state.params
    share_a_view = encode_g1(state.share_a)
    l = game.rng.randbelow(params.p)
    t, _ = _draw_nonce(params, game.rng)
    leak_a = f(share_a_view, encode_scalar(params, l) + encode_scalar(params, t))
    transfer = sign_step1(state, msg, hash_fn=game.hash_fn, l=l, t=t)
    h = choose_h(leak_a)
    if h.out_bits != game.lam:
        raise LeakageBudgetError(
            f"leakage functions must declare exactly {game.lam} bits"
        )
    leak_b = h(encode_g1(state.share_b), b"", encode_g1(transfer.w))
    sig = sign_step2(state, transfer)
    game.queried.add(bytes(msg))
    game.transcript.append(LeakRecord(bytes(msg), sig, leak_a, leak_b))
    game.counter += 1
    return sig, leak_a, leak_b


def submit_forgery(game: GameState, msg: bytes, sig: Signature) -> ForgeryVerdict:
    """Judge the adversary's output; the game ends either way."""
    if game.finished:
        raise RuntimeError("game is over")
    game.finished = True
    if bytes(msg) in game.queried:
        return ForgeryVerdict(0, "message-already-queried")
    if verify(game.pk, msg, sig, hash_fn=game.hash_fn):
        return ForgeryVerdict(1, "valid-fresh-forgery")
    return ForgeryVerdict(0, "verify-failed")


# --- attack experiments -----------------------------------------------------


@dataclass(frozen=True)
class AttackReport:
    variant: str
    lam: int
    trials: int
    rounds_used: int
    successes: int
    success_rate: float
    key_recoveries: int

    def csv_line(self) -> str:
        return (f"{self.variant},{self.lam},{self.trials},"
                f"{self.success_rate:.6f},{self.rounds_used}")


_VARIANTS = {
    "naive-monolithic": "naive",
    "naive": "naive",
    "split-refresh": "split",
    "split": "split",
}

_FORGERY_MSG = b"attack-forgery"


def _forge_with_key(params: BilinearParams, d_guess: int, msg: bytes,
                    rng: Drbg) -> Signature:
    t, r = _draw_nonce(params, rng)
    h = hash_to_scalar(msg, params.p)
    s = g1_scalar_mul(t + h * r * d_guess, params.g1_gen)
    return Signature(r=r, s=s)


def _bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def _naive_trial(params: BilinearParams, lam: int, rounds: int,
                 rng: Drbg) -> tuple[bool, bool]:
    """Comparator scheme: one unrefreshed secret scalar, same equations.

    The windowed leakage reads the key encoding directly, lam fresh bits
    per round.
    """
    p = params.p
    d = 1 + rng.randbelow(p - 1)
    pk = PublicKey(params, gt_pow(params.gt_gen, d))
    d_view = encode_scalar(params, d)
    share_bits = 8 * len(d_view)
    leaked = []
    for i in range(rounds):
        t, r = _draw_nonce(params, rng)
        h = hash_to_scalar(b"query-%d" % i, p)
        g1_scalar_mul(t + h * r * d, params.g1_gen)  # honest sig, discarded
        leaked.append(bit_window(lam, i * lam)(d_view, encode_scalar(params, t)))
    candidate = _bits_to_int("".join(leaked)[:share_bits])
    forged = _forge_with_key(params, candidate, _FORGERY_MSG, rng)
    return verify(pk, _FORGERY_MSG, forged), candidate == d


def _split_trial(params: BilinearParams, lam: int, rounds: int,
                 rng: Drbg) -> tuple[bool, bool]:
    """The identical windowed strategy against the refreshed split-key
    signer: concatenate the leaked windows of each share view and treat
    the result as the recovered key."""
    p = params.p
    game, pk = new_game(params, lam, seed=rng.randbits(64))
    hidden_d = (game.signer.share_a.x + game.signer.share_b.x) % p
    share_bits = 8 * elem_width(p)
    leaks_a, leaks_b = [], []
    for i in range(rounds):
        window = bit_window(lam, i * lam)
        _, leak_a, leak_b = sign_leak_query(game, b"query-%d" % i, window, window)
        leaks_a.append(leak_a)
        leaks_b.append(leak_b)
    cand_a = _bits_to_int("".join(leaks_a)[:share_bits])
    cand_b = _bits_to_int("".join(leaks_b)[:share_bits])
    verdict = submit_forgery(game, _FORGERY_MSG,
                             _forge_with_key(params, cand_a, _FORGERY_MSG, rng))
    success = verdict.b == 1 or verify(
        pk, _FORGERY_MSG, _forge_with_key(params, cand_b, _FORGERY_MSG, rng))
    return success, hidden_d in (cand_a, cand_b)


def run_attack(variant: str, lam: int, trials: int,
               seed: Drbg | int | None = None, *,
               key_bits: int = 160) -> AttackReport:
    """Windowed bit-leakage attack experiment.

    The unrefreshed comparator falls after ceil(key bits / lam) rounds;
    the split-refresh scheme faces the identical strategy.
    """
    try:
        kind = _VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}") from None
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    rng = as_rng(seed)
    params = mock_params(gen_prime(key_bits, rng), allow_large=True)
    share_bits = 8 * elem_width(params.p)
    rounds = math.ceil(share_bits / lam) if lam else 0
    successes = 0
    recoveries = 0
    trial = _naive_trial if kind == "naive" else _split_trial
    for _ in range(trials):
        if rounds == 0:
            continue  # no leakage, nothing to reconstruct
        won, recovered = trial(params, lam, rounds, rng)
        successes += won
        recoveries += recovered
    return AttackReport(variant=variant, lam=lam, trials=trials,
                        rounds_used=rounds, successes=successes,
                        success_rate=successes / trials,
                        key_recoveries=recoveries)
