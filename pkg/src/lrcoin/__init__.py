"""Leakage-resilient split-key pairing signatures with a toy trading chain."""

from .bilinear import (
    BilinearParams,
    G1Elem,
    G2Elem,
    GTElem,
    MOCK_MAX_BITS,
    TOY_PRIME,
    UnsupportedBackendError,
    mock_params,
    pair,
    setup,
)
from .chain import Block, Transaction, TxKind, build_block, genesis, merkle_root, validate_chain
from .genericgroup import audit_collisions, collision_experiment, collision_bound, new_world
from .leakage import LeakageBudgetError, LeakageFn, new_game, run_attack, sign_leak_query, submit_forgery
from .lrsig import (
    PublicKey,
    RoundMismatchError,
    SecretState,
    Signature,
    keygen,
    sign,
    sign_step1,
    sign_step2,
    verify,
)
from .market import Market, run_scenario
from .rng import Drbg

__version__ = "0.1.0"

__all__ = [
    "BilinearParams", "G1Elem", "G2Elem", "GTElem", "MOCK_MAX_BITS",
    "TOY_PRIME", "UnsupportedBackendError", "mock_params", "pair", "setup",
    "Block", "Transaction", "TxKind", "build_block", "genesis", "merkle_root",
    "validate_chain", "audit_collisions", "collision_experiment",
    "collision_bound", "new_world", "LeakageBudgetError", "LeakageFn",
    "new_game", "run_attack", "sign_leak_query", "submit_forgery",
    "PublicKey", "RoundMismatchError", "SecretState", "Signature", "keygen",
    "sign", "sign_step1", "sign_step2", "verify", "Market", "run_scenario",
    "Drbg", "__version__",
]
