"""Deterministic data-trading simulation: sellers, buyers, matcher, settlement.

Single-threaded event loop, no network. Sellers post sale transactions
and upload their data to a storage stub; buyers post purchase
transactions; settlement matches orders FIFO (first compatible pair,
clearing at the seller's ask), moves balances, emits buyer-signed payment
transactions and seals everything posted since the last settle into a new
block. All randomness derives from one seed, so identical runs produce
byte-identical chains.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .bilinear import BilinearParams, setup
from .chain import (
    Block,
    Transaction,
    TxKind,
    build_block,
    genesis,
    sign_tx,
    tx_id,
    validate_chain,
)
from .lrsig import PublicKey, SecretState, encode_public_key, keygen
from .rng import Drbg


class ScenarioError(ValueError):
    pass


@dataclass
class Actor:
    name: str
    role: str               # "seller" | "buyer"
    pk: PublicKey
    state: SecretState
    rng: Drbg
    balance: int = 0


class StorageStub:
    """Content-addressed stand-in for the storage server."""

    def __init__(self):
        self._data: dict[str, bytes] = {}

    def put(self, data: bytes) -> tuple[str, bytes]:
        digest = hashlib.sha256(data).digest()
        uri = "stub://" + digest.hex()
        self._data[uri] = data
        return uri, digest

    def get(self, uri: str) -> bytes:
        return self._data[uri]

    def tamper(self, uri: str, data: bytes) -> None:
        """Test hook: overwrite stored bytes without touching the hash."""
        self._data[uri] = data


@dataclass(frozen=True)
class MatchRecord:
    sale_id: bytes
    purchase_id: bytes
    clearing_price: int
    payment_id: bytes


@dataclass(frozen=True)
class SkipRecord:
    reason: str              # insufficient-balance | storage-hash-mismatch
    purchase_id: bytes | None = None
    sale_id: bytes | None = None


@dataclass
class _OpenOrder:
    tx: Transaction
    txid: bytes
    actor: str


class Market:
    """Single-sequencer market over one chain."""

    def __init__(self, params: BilinearParams | None = None,
                 seed: int | str | bytes | None = None):
        self.params = params if params is not None else setup()
        self._seed = seed if seed is not None else Drbg().randbits(64)
        self.storage = StorageStub()
        self.actors: dict[str, Actor] = {}
        self.blocks: list[Block] = [genesis()]
        self.open_sales: list[_OpenOrder] = []
        self.open_purchases: list[_OpenOrder] = []
        self.pending: list[Transaction] = []
        self.matches: list[MatchRecord] = []
        self.skips: list[SkipRecord] = []

    def add_actor(self, name: str, role: str, balance: int = 0) -> Actor:
        if name in self.actors:
            raise ValueError(f"actor {name!r} already exists")
        if role not in ("seller", "buyer"):
            raise ValueError(f"unknown role {role!r}")
        if balance < 0:
            raise ValueError("balance must be >= 0")
        rng = Drbg(f"market:{self._seed}:actor:{name}")
        pk, state = keygen(self.params, rng)
        actor = Actor(name=name, role=role, pk=pk, state=state, rng=rng,
                      balance=balance)
        self.actors[name] = actor
        return actor

    def fund(self, name: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("amount must be >= 0")
        self._actor(name).balance += amount

    def _actor(self, name: str) -> Actor:
        try:
            return self.actors[name]
        except KeyError:
            raise ValueError(f"unknown actor {name!r}") from None

    def post_sale(self, name: str, topic: str, price: int, data: bytes) -> bytes:
        if price < 0:
            raise ValueError("price must be >= 0")
        actor = self._actor(name)
        uri, digest = self.storage.put(data)
        tx = Transaction(kind=TxKind.SALE, topic=topic, amount=price,
                         author_pk=encode_public_key(actor.pk),
                         data_hash=digest, storage_uri=uri)
        return self._post(actor, tx, self.open_sales)

    def post_purchase(self, name: str, topic: str, max_price: int) -> bytes:
        if max_price < 0:
            raise ValueError("max price must be >= 0")
        actor = self._actor(name)
        tx = Transaction(kind=TxKind.PURCHASE, topic=topic, amount=max_price,
                         author_pk=encode_public_key(actor.pk))
        return self._post(actor, tx, self.open_purchases)

    def _post(self, actor: Actor, tx: Transaction, book: list) -> bytes:
        signed = sign_tx(tx, actor.state, actor.rng)
        txid = tx_id(signed)
        book.append(_OpenOrder(tx=signed, txid=txid, actor=actor.name))
        self.pending.append(signed)
        return txid

    def balance_sum(self) -> int:
        return sum(a.balance for a in self.actors.values())

    def match_and_settle(self) -> list[MatchRecord]:
        """FIFO matching, balance transfer and block sealing.

        Purchases are visited in post order and take the oldest compatible
        sale at the seller's ask. A buyer who cannot pay loses the order;
        a sale whose stored data no longer matches its hash is withdrawn
        and the buyer keeps looking.
        """
        records: list[MatchRecord] = []
        for purchase in list(self.open_purchases):
            buyer = self._actor(purchase.actor)
            sale = self._find_sale(purchase)
            if sale is None:
                continue  # order rests for a later settle
            price = sale.tx.amount
            if buyer.balance < price:
                self.skips.append(SkipRecord("insufficient-balance",
                                             purchase_id=purchase.txid))
                self.open_purchases.remove(purchase)
                continue
            seller = self._actor(sale.actor)
            buyer.balance -= price
            seller.balance += price
            payment = Transaction(kind=TxKind.PAYMENT, topic=sale.tx.topic,
                                  amount=price,
                                  author_pk=encode_public_key(buyer.pk),
                                  sale_ref=sale.txid, purchase_ref=purchase.txid)
            signed = sign_tx(payment, buyer.state, buyer.rng)
            self.pending.append(signed)
            record = MatchRecord(sale_id=sale.txid, purchase_id=purchase.txid,
                                 clearing_price=price, payment_id=tx_id(signed))
            records.append(record)
            self.open_sales.remove(sale)
            self.open_purchases.remove(purchase)
        if self.pending:
            tip = self.blocks[-1]
            block = build_block(tip, self.pending, timestamp=tip.height + 1)
            self.blocks.append(block)
            self.pending = []
        self.matches.extend(records)
        return records

    def _find_sale(self, purchase: _OpenOrder) -> _OpenOrder | None:
        for sale in list(self.open_sales):
            if sale.tx.topic != purchase.tx.topic:
                continue
            if purchase.tx.amount < sale.tx.amount:
                continue
            data = self.storage.get(sale.tx.storage_uri)
            if hashlib.sha256(data).digest() != sale.tx.data_hash:
                # Buyer-side integrity check failed: withdraw the sale.
                self.skips.append(SkipRecord("storage-hash-mismatch",
                                             sale_id=sale.txid))
                self.open_sales.remove(sale)
                continue
            return sale
        return None


# --- scenario runner --------------------------------------------------------


@dataclass
class ScenarioReport:
    blocks: list[Block]
    matches: list[MatchRecord]
    skips: list[SkipRecord]
    balances: dict[str, int]
    settles: int
    conservation_ok: bool
    all_valid: bool
    txs: int = 0

    def to_json(self) -> dict:
        return {
            "v": 1,
            "blocks": len(self.blocks),
            "txs": self.txs,
            "settles": self.settles,
            "matches": [
                {"sale": m.sale_id.hex(), "purchase": m.purchase_id.hex(),
                 "price": m.clearing_price, "payment": m.payment_id.hex()}
                for m in self.matches
            ],
            "skips": [
                {"reason": s.reason,
                 "purchase": s.purchase_id.hex() if s.purchase_id else None,
                 "sale": s.sale_id.hex() if s.sale_id else None}
                for s in self.skips
            ],
            "balances": dict(sorted(self.balances.items())),
            "conservation_ok": self.conservation_ok,
            "all_valid": self.all_valid,
        }


def parse_scenario(text: str) -> list[tuple]:
    """Line-oriented script: SELL/BUY/SETTLE/FUND; '#' starts a comment."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        op, args = fields[0].upper(), fields[1:]
        try:
            if op == "FUND":
                name, amount = args
                ops.append((lineno, "fund", name, int(amount)))
            elif op == "SELL":
                name, topic, price, datafile = args
                ops.append((lineno, "sell", name, topic, int(price), datafile))
            elif op == "BUY":
                name, topic, max_price = args
                ops.append((lineno, "buy", name, topic, int(max_price)))
            elif op == "SETTLE":
                if args:
                    raise ValueError("SETTLE takes no arguments")
                ops.append((lineno, "settle"))
            else:
                raise ValueError(f"unknown command {fields[0]!r}")
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    return ops


def run_scenario(text: str, seed: int | str | bytes | None = None,
                 base_dir: str = ".",
                 params: BilinearParams | None = None) -> ScenarioReport:
    """Execute a scenario script; validates the chain after every settle."""
    import os

    ops = parse_scenario(text)
    market = Market(params=params, seed=seed if seed is not None else 0)
    chain_ok = True
    conservation_ok = True
    settles = 0
    for entry in ops:
        lineno, op = entry[0], entry[1]
        try:
            if op == "fund":
                _, _, name, amount = entry
                _ensure_actor(market, name, "buyer")
                market.fund(name, amount)
            elif op == "sell":
                _, _, name, topic, price, datafile = entry
                _ensure_actor(market, name, "seller")
                path = os.path.join(base_dir, datafile)
                try:
                    with open(path, "rb") as fh:
                        data = fh.read()
                except OSError as exc:
                    raise ValueError(f"cannot read data file: {exc}") from None
                market.post_sale(name, topic, price, data)
            elif op == "buy":
                _, _, name, topic, max_price = entry
                _ensure_actor(market, name, "buyer")
                market.post_purchase(name, topic, max_price)
            else:
                before = market.balance_sum()
                market.match_and_settle()
                settles += 1
                conservation_ok &= market.balance_sum() == before
                chain_ok &= validate_chain(market.blocks)
        except ValueError as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
    chain_ok &= validate_chain(market.blocks)
    return ScenarioReport(
        blocks=market.blocks,
        matches=market.matches,
        skips=market.skips,
        balances={name: actor.balance for name, actor in market.actors.items()},
        settles=settles,
        conservation_ok=conservation_ok,
        all_valid=chain_ok and conservation_ok,
        txs=sum(len(b.txs) for b in market.blocks),
    )


def _ensure_actor(market: Market, name: str, role: str) -> None:
    if name not in market.actors:
        market.add_actor(name, role)
