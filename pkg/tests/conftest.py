import hashlib
import os

import pytest

from lrcoin.bilinear import mock_params, setup
from lrcoin.chain import Transaction, TxKind, build_block, genesis, sign_tx, tx_id
from lrcoin.lrsig import encode_public_key, keygen
from lrcoin.primes import gen_prime
from lrcoin.rng import Drbg

# Conformance fixtures are parameterized so a curve backend can be added
# as another parameter set later.


@pytest.fixture(scope="session")
def toy_params():
    return setup("toy", "mock")


@pytest.fixture(scope="session")
def p160_params():
    # Large-exponent mock parameters; exact arithmetic, test-only override.
    return mock_params(gen_prime(160, Drbg(2024)), allow_large=True)


def make_fixture_chain(params, seed=1305):
    """Deterministic 5-block chain (genesis + 4 blocks of 1-4 txs each)."""
    rng = Drbg(seed)
    pk_s, seller = keygen(params, rng)
    pk_b, buyer = keygen(params, rng)
    seller_pk = encode_public_key(pk_s)
    buyer_pk = encode_public_key(pk_b)

    def sale(topic, price, payload):
        digest = hashlib.sha256(payload).digest()
        tx = Transaction(kind=TxKind.SALE, topic=topic, amount=price,
                         author_pk=seller_pk, data_hash=digest,
                         storage_uri="stub://" + digest.hex())
        return sign_tx(tx, seller, rng)

    def purchase(topic, max_price):
        tx = Transaction(kind=TxKind.PURCHASE, topic=topic, amount=max_price,
                         author_pk=buyer_pk)
        return sign_tx(tx, buyer, rng)

    def payment(topic, price, sale_tx, purchase_tx):
        tx = Transaction(kind=TxKind.PAYMENT, topic=topic, amount=price,
                         author_pk=buyer_pk, sale_ref=tx_id(sale_tx),
                         purchase_ref=tx_id(purchase_tx))
        return sign_tx(tx, buyer, rng)

    blocks = [genesis()]
    s1 = sale("temp", 10, b"temperature series")
    blocks.append(build_block(blocks[-1], [s1]))
    s2 = sale("wind", 20, b"wind series")
    b1 = purchase("temp", 12)
    blocks.append(build_block(blocks[-1], [s2, b1]))
    p1 = payment("temp", 10, s1, b1)
    s3 = sale("humidity", 5, b"humidity series")
    b2 = purchase("wind", 25)
    blocks.append(build_block(blocks[-1], [p1, s3, b2]))
    p2 = payment("wind", 20, s2, b2)
    s4 = sale("pressure", 7, b"pressure series")
    b3 = purchase("humidity", 9)
    p3 = payment("humidity", 5, s3, b3)
    blocks.append(build_block(blocks[-1], [p2, s4, b3, p3]))
    return blocks


FIXTURE_SCENARIO = """\
# three sellers, two buyers, four trades across two settles
FUND buyer1 100
FUND buyer2 80
SELL seller1 temp 10 temp.bin
SELL seller2 humidity 15 humidity.bin
SELL seller3 wind 20 wind.bin
BUY buyer1 temp 12
BUY buyer2 humidity 15
SETTLE
SELL seller1 temp 9 temp2.bin
BUY buyer1 wind 25
BUY buyer2 temp 9
SETTLE
"""

FIXTURE_DATA = {
    "temp.bin": b"temperature readings 2026-01",
    "humidity.bin": b"humidity readings 2026-01",
    "wind.bin": b"wind readings 2026-01",
    "temp2.bin": b"temperature readings 2026-02",
}

# Hand-audited outcome of FIXTURE_SCENARIO: matches at 10, 15, 20, 9.
FIXTURE_BALANCES = {
    "buyer1": 100 - 10 - 20,
    "buyer2": 80 - 15 - 9,
    "seller1": 10 + 9,
    "seller2": 15,
    "seller3": 20,
}


def make_scenario_dir(root):
    os.makedirs(root, exist_ok=True)
    for name, payload in FIXTURE_DATA.items():
        with open(os.path.join(root, name), "wb") as fh:
            fh.write(payload)
    path = os.path.join(root, "scenario.txt")
    with open(path, "w") as fh:
        fh.write(FIXTURE_SCENARIO)
    return path
