"""Transactions, Merkle-rooted blocks and chain validation.

Wire format is strict and canonical: every decoder rejects non-minimal or
out-of-range encodings, so decode(encode(x)) == x and re-encoding a
decoded artifact reproduces the input bytes exactly. Transactions embed
the author's public key and are signed over their canonical encoding
minus the signature field.

There is no consensus layer: blocks come from a single sequencer and are
chained purely by header hash.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from enum import Enum

from .bilinear import EncodingError, ParamsMismatchError, UnsupportedBackendError
from .lrsig import (
    SecretState,
    decode_public_key,
    decode_signature,
    encode_signature,
    sign,
    verify,
)
from .rng import Drbg

HASH_LEN = 32
MAX_FIELD_LEN = 0xFFFF
MAX_AMOUNT = (1 << 64) - 1

ZERO_HASH = b"\x00" * HASH_LEN


class TxKind(Enum):
    SALE = 1
    PURCHASE = 2
    PAYMENT = 3


class ChainValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    topic: str
    amount: int                      # ask price / bid ceiling / payment value
    author_pk: bytes
    sig: bytes | None = None
    data_hash: bytes | None = None   # sale only
    storage_uri: str | None = None   # sale only
    sale_ref: bytes | None = None    # payment only
    purchase_ref: bytes | None = None  # payment only


@dataclass(frozen=True)
class Block:
    prev_hash: bytes
    merkle_root: bytes
    height: int
    timestamp: int
    txs: tuple


def _u16(n: int) -> bytes:
    return n.to_bytes(2, "big")


def _u32(n: int) -> bytes:
    return n.to_bytes(4, "big")


def _u64(n: int) -> bytes:
    return n.to_bytes(8, "big")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise EncodingError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise EncodingError("trailing bytes after decode")


def _check_shape(tx: Transaction, *, need_sig: bool) -> None:
    if not isinstance(tx.kind, TxKind):
        raise ValueError("unknown transaction kind")
    topic = tx.topic.encode("utf-8")
    if len(topic) > MAX_FIELD_LEN:
        raise ValueError("topic exceeds length bound")
    if not 0 <= tx.amount <= MAX_AMOUNT:
        raise ValueError("amount out of range")
    if not 0 < len(tx.author_pk) <= MAX_FIELD_LEN:
        raise ValueError("author_pk length out of bounds")
    if need_sig:
        if tx.sig is None or not 0 < len(tx.sig) <= MAX_FIELD_LEN:
            raise ValueError("signature missing or out of bounds")
    if tx.kind is TxKind.SALE:
        if tx.data_hash is None or len(tx.data_hash) != HASH_LEN:
            raise ValueError("sale requires a 32-byte data hash")
        uri = (tx.storage_uri or "").encode("utf-8")
        if tx.storage_uri is None or len(uri) > MAX_FIELD_LEN:
            raise ValueError("sale requires a bounded storage uri")
        if tx.sale_ref is not None or tx.purchase_ref is not None:
            raise ValueError("sale carries no counterparty refs")
    elif tx.kind is TxKind.PURCHASE:
        if (tx.data_hash is not None or tx.storage_uri is not None
                or tx.sale_ref is not None or tx.purchase_ref is not None):
            raise ValueError("purchase carries only topic and price")
    else:  # PAYMENT references exactly one matched sale/purchase pair
        if tx.sale_ref is None or len(tx.sale_ref) != HASH_LEN:
            raise ValueError("payment requires a 32-byte sale ref")
        if tx.purchase_ref is None or len(tx.purchase_ref) != HASH_LEN:
            raise ValueError("payment requires a 32-byte purchase ref")
        if tx.data_hash is not None or tx.storage_uri is not None:
            raise ValueError("payment carries no data fields")


def signing_bytes(tx: Transaction) -> bytes:
    """Canonical encoding of every field except the signature."""
    _check_shape(tx, need_sig=False)
    topic = tx.topic.encode("utf-8")
    out = bytes([tx.kind.value]) + _u16(len(topic)) + topic + _u64(tx.amount)
    if tx.kind is TxKind.SALE:
        uri = tx.storage_uri.encode("utf-8")
        out += tx.data_hash + _u16(len(uri)) + uri
    elif tx.kind is TxKind.PAYMENT:
        out += tx.sale_ref + tx.purchase_ref
    out += _u16(len(tx.author_pk)) + tx.author_pk
    return out


def canonical_encode(tx: Transaction) -> bytes:
    _check_shape(tx, need_sig=True)
    return signing_bytes(tx) + _u16(len(tx.sig)) + tx.sig


def decode_transaction(data: bytes) -> Transaction:
    reader = _Reader(data)
    tx = _read_transaction(reader)
    reader.expect_end()
    return tx


def _read_transaction(reader: _Reader) -> Transaction:
    kind_tag = reader.take(1)[0]
    try:
        kind = TxKind(kind_tag)
    except ValueError:
        raise EncodingError(f"unknown transaction kind tag {kind_tag}") from None
    try:
        topic = reader.take(reader.u16()).decode("utf-8")
    except UnicodeDecodeError:
        raise EncodingError("topic is not valid UTF-8") from None
    amount = reader.u64()
    data_hash = storage_uri = sale_ref = purchase_ref = None
    if kind is TxKind.SALE:
        data_hash = reader.take(HASH_LEN)
        try:
            storage_uri = reader.take(reader.u16()).decode("utf-8")
        except UnicodeDecodeError:
            raise EncodingError("storage uri is not valid UTF-8") from None
    elif kind is TxKind.PAYMENT:
        sale_ref = reader.take(HASH_LEN)
        purchase_ref = reader.take(HASH_LEN)
    author_pk = reader.take(reader.u16())
    sig = reader.take(reader.u16())
    tx = Transaction(kind=kind, topic=topic, amount=amount, author_pk=author_pk,
                     sig=sig, data_hash=data_hash, storage_uri=storage_uri,
                     sale_ref=sale_ref, purchase_ref=purchase_ref)
    try:
        _check_shape(tx, need_sig=True)
    except ValueError as exc:
        raise EncodingError(str(exc)) from exc
    return tx


def tx_id(tx: Transaction) -> bytes:
    return hashlib.sha256(canonical_encode(tx)).digest()


def sign_tx(tx: Transaction, signer: SecretState,
            rng: Drbg | int | None = None) -> Transaction:
    """Sign an unsigned transaction; advances the signer by one round."""
    if tx.sig is not None:
        raise ValueError("transaction is already signed")
    sig = sign(signer, signing_bytes(tx), rng)
    return replace(tx, sig=encode_signature(sig))


def verify_tx(tx: Transaction) -> bool:
    """Check the embedded signature over the canonical bytes-without-sig."""
    try:
        _check_shape(tx, need_sig=True)
        pk = decode_public_key(tx.author_pk)
        sig = decode_signature(pk.params, tx.sig)
        return verify(pk, signing_bytes(tx), sig)
    except (ValueError, ParamsMismatchError, UnsupportedBackendError):
        return False


def merkle_root(txs) -> bytes:
    """Binary SHA-256 tree; leaf = H(0x00 || tx), node = H(0x01 || L || R),
    odd levels duplicate the last node."""
    if not txs:
        raise ValueError("merkle root of an empty transaction list")
    level = [hashlib.sha256(b"\x00" + canonical_encode(tx)).digest() for tx in txs]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [hashlib.sha256(b"\x01" + level[i] + level[i + 1]).digest()
                 for i in range(0, len(level), 2)]
    return level[0]


def header_bytes(block: Block) -> bytes:
    return (block.prev_hash + block.merkle_root
            + _u64(block.height) + _u64(block.timestamp))


def block_hash(block: Block) -> bytes:
    return hashlib.sha256(header_bytes(block)).digest()


def genesis() -> Block:
    """The fixed genesis block every chain starts from."""
    return Block(prev_hash=ZERO_HASH, merkle_root=ZERO_HASH,
                 height=0, timestamp=0, txs=())


def build_block(parent: Block, txs, timestamp: int | None = None) -> Block:
    """Seal verified transactions on top of parent; refuses invalid input."""
    txs = tuple(txs)
    if not txs:
        raise ValueError("a block needs at least one transaction")
    for tx in txs:
        if not verify_tx(tx):
            raise ValueError("refusing to seal an invalid transaction")
    return Block(prev_hash=block_hash(parent), merkle_root=merkle_root(txs),
                 height=parent.height + 1,
                 timestamp=parent.timestamp + 1 if timestamp is None else timestamp,
                 txs=txs)


def encode_block(block: Block) -> bytes:
    out = header_bytes(block) + _u32(len(block.txs))
    for tx in block.txs:
        tx_bytes = canonical_encode(tx)
        out += _u32(len(tx_bytes)) + tx_bytes
    return out


def decode_block(data: bytes) -> Block:
    reader = _Reader(data)
    prev_hash = reader.take(HASH_LEN)
    root = reader.take(HASH_LEN)
    height = reader.u64()
    timestamp = reader.u64()
    txs = []
    for _ in range(reader.u32()):
        txs.append(decode_transaction(reader.take(reader.u32())))
    reader.expect_end()
    return Block(prev_hash=prev_hash, merkle_root=root, height=height,
                 timestamp=timestamp, txs=tuple(txs))


def _check_block(block: Block, parent: Block | None) -> None:
    if parent is None:
        if block != genesis():
            raise ChainValidationError("genesis block differs from the fixed genesis")
        return
    if block.height != parent.height + 1:
        raise ChainValidationError(
            f"height {block.height} does not follow {parent.height}")
    if block.prev_hash != block_hash(parent):
        raise ChainValidationError("previous-block hash does not match parent")
    if not block.txs:
        raise ChainValidationError("non-genesis block has no transactions")
    if block.merkle_root != merkle_root(block.txs):
        raise ChainValidationError("merkle root does not match transactions")
    for tx in block.txs:
        if not verify_tx(tx):
            raise ChainValidationError("transaction signature check failed")


def validate_block(block: Block, parent: Block | None) -> bool:
    try:
        _check_block(block, parent)
        return True
    except ChainValidationError:
        return False


def _check_chain(blocks) -> None:
    if not blocks:
        raise ChainValidationError("empty chain")
    _check_block(blocks[0], None)
    seen: dict[bytes, TxKind] = {}
    parent = blocks[0]
    for block in blocks[1:]:
        _check_block(block, parent)
        for tx in block.txs:
            txid = tx_id(tx)
            if txid in seen:
                raise ChainValidationError("duplicate transaction id")
            if tx.kind is TxKind.PAYMENT:
                if seen.get(tx.sale_ref) is not TxKind.SALE:
                    raise ChainValidationError("payment sale ref does not resolve")
                if seen.get(tx.purchase_ref) is not TxKind.PURCHASE:
                    raise ChainValidationError("payment purchase ref does not resolve")
            seen[txid] = tx.kind
        parent = block


def validate_chain(blocks) -> bool:
    try:
        _check_chain(list(blocks))
        return True
    except ChainValidationError:
        return False


# --- chain files: a length-prefixed block stream ---------------------------


def encode_chain(blocks) -> bytes:
    out = b""
    for block in blocks:
        block_bytes = encode_block(block)
        out += _u32(len(block_bytes)) + block_bytes
    return out


def decode_chain(data: bytes) -> list[Block]:
    reader = _Reader(data)
    blocks = []
    while reader.pos != len(reader.data):
        blocks.append(decode_block(reader.take(reader.u32())))
    return blocks


def write_chain_file(path, blocks) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_chain(blocks))


def read_chain_file(path) -> list[Block]:
    with open(path, "rb") as fh:
        return decode_chain(fh.read())


def validate_chain_bytes(raw: bytes) -> tuple[bool, dict]:
    """Strict decode + full validation; also rejects streams whose bytes
    are not the canonical re-encoding of their content."""
    report: dict = {"v": 1, "valid": False, "blocks": 0, "txs": 0}
    try:
        blocks = decode_chain(raw)
        report["blocks"] = len(blocks)
        report["txs"] = sum(len(b.txs) for b in blocks)
        if encode_chain(blocks) != raw:
            raise ChainValidationError("stream is not canonically encoded")
        _check_chain(blocks)
        report["valid"] = True
    except ValueError as exc:
        report["error"] = str(exc)
    return report["valid"], report


def validate_chain_file(path) -> tuple[bool, dict]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        return False, {"v": 1, "valid": False, "blocks": 0, "txs": 0,
                       "error": str(exc)}
    return validate_chain_bytes(raw)
