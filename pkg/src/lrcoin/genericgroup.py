"""Generic bilinear group oracles with observer-side collision auditing.

Group elements are opaque fixed-length random byte strings handed out by
a stateful world; callers combine them only through the oracles. The
world doubles as the observer: every oracle input and output is recorded
in per-group tables together with an integer combination vector over the
independent representations seen so far, and the audit reports entry
pairs whose combinations differ while their representations coincide.

Representation strings carry 32 slack bits over ceil(log2 p), so the
random byte strings themselves never collide in practice; all collisions
come from value coincidences in Zp.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .primes import is_prime
from .rng import Drbg, as_rng

GROUPS = ("g1", "g2", "gt")


@dataclass(frozen=True)
class Collision:
    group: str
    j: int
    k: int
    combo_j: dict
    combo_k: dict
    rep: bytes


@dataclass(frozen=True)
class CollisionReport:
    p: int
    queries_made: int
    collisions: tuple
    bound: Fraction

    @property
    def bound_float(self) -> float:
        return float(self.bound)


@dataclass
class RepTable:
    """Observer view: L tables (all query I/O) and Q tables (independents)."""

    entries: dict = field(default_factory=lambda: {g: [] for g in GROUPS})
    basis_reps: dict = field(default_factory=lambda: {g: [] for g in GROUPS})
    basis_values: dict = field(default_factory=lambda: {g: [] for g in GROUPS})


class EncodingSpaceExhausted(ValueError):
    """Every value of Zp already has a representation in this group."""


def collision_bound(m: int, p: int) -> Fraction:
    """Collision probability bound for at most m oracle queries: 3*C(m+1,2)/p."""
    return Fraction(3 * (m + 1) * m, 2 * p)


class OracleWorld:
    """Lazily built random bijections Zp -> byte strings, one per group.

    Single-writer mutable state; run independent worlds for parallel
    experiments, never share one.
    """

    def __init__(self, p: int, seed: Drbg | int | None = None):
        if not is_prime(p):
            raise ValueError(f"p must be prime, got {p}")
        self.p = p
        self.rng = as_rng(seed)
        self.rep_len = ((p - 1).bit_length() + 32 + 7) // 8
        self._enc = {g: {} for g in GROUPS}   # value -> representation
        self._dec = {g: {} for g in GROUPS}   # representation -> value
        self._first_combo = {g: {} for g in GROUPS}
        self.tables = RepTable()
        self.query_counts = {"g1": 0, "g2": 0, "gt": 0, "pair": 0}

    # -- representation management ------------------------------------

    def remaining(self, group: str) -> int:
        """Values of Zp not yet bound to a representation in this group."""
        return self.p - len(self._enc[group])

    def _fresh_rep(self, group: str) -> bytes:
        while True:
            rep = self.rng.randbytes(self.rep_len)
            if rep not in self._dec[group]:
                return rep

    def _fresh_value(self, group: str) -> int:
        if self.remaining(group) == 0:
            raise EncodingSpaceExhausted(
                f"all {self.p} values of {group} already have representations; "
                "a never-seen string cannot be a valid encoding"
            )
        while True:
            value = self.rng.randbelow(self.p)
            if value not in self._enc[group]:
                return value

    def _register_independent(self, group: str, rep: bytes, value: int) -> dict:
        basis = self.tables.basis_reps[group]
        index = len(basis)
        basis.append(rep)
        self.tables.basis_values[group].append(value)
        combo = {index: 1}
        self._first_combo[group][rep] = combo
        self._enc[group][value] = rep
        self._dec[group][rep] = value
        return combo

    def _encode(self, group: str, x: int) -> bytes:
        x %= self.p
        rep = self._enc[group].get(x)
        if rep is None:
            rep = self._fresh_rep(group)
            self._register_independent(group, rep, x)
        return rep

    def encode_g1(self, x: int) -> bytes:
        return self._encode("g1", x)

    def encode_g2(self, x: int) -> bytes:
        return self._encode("g2", x)

    def encode_gt(self, x: int) -> bytes:
        return self._encode("gt", x)

    def g1_generator(self) -> bytes:
        return self.encode_g1(1)

    def g2_generator(self) -> bytes:
        return self.encode_g2(1)

    def gt_generator(self) -> bytes:
        return self.encode_gt(1)

    def preimage(self, group: str, rep: bytes) -> int:
        """White-box accessor for tests and audits."""
        return self._dec[group][rep]

    @property
    def queries_made(self) -> int:
        return sum(self.query_counts.values())

    # -- oracle internals ----------------------------------------------

    def _resolve_input(self, group: str, rep: bytes) -> tuple[int, dict]:
        if not isinstance(rep, bytes) or len(rep) != self.rep_len:
            raise ValueError(f"representation must be {self.rep_len} bytes")
        value = self._dec[group].get(rep)
        if value is None:
            # Never-seen string: bind it to a uniformly random unused value.
            value = self._fresh_value(group)
            combo = self._register_independent(group, rep, value)
        else:
            combo = self._first_combo[group][rep]
        return value, combo

    def _bind_output(self, group: str, value: int, combo: dict) -> bytes:
        rep = self._enc[group].get(value)
        if rep is None:
            rep = self._fresh_rep(group)
            self._enc[group][value] = rep
            self._dec[group][rep] = value
            self._first_combo[group][rep] = combo
        return rep

    def _group_query(self, group: str, x_rep: bytes, y_rep: bytes) -> bytes:
        xv, xc = self._resolve_input(group, x_rep)
        yv, yc = self._resolve_input(group, y_rep)
        zv = (xv + yv) % self.p
        zc = _combo_add(xc, yc, self.p)
        z_rep = self._bind_output(group, zv, zc)
        entries = self.tables.entries[group]
        entries.append((x_rep, xc))
        entries.append((y_rep, yc))
        entries.append((z_rep, zc))
        self.query_counts[group] += 1
        return z_rep

    def _pair_query(self, x_rep: bytes, y_rep: bytes) -> bytes:
        xv, xc = self._resolve_input("g1", x_rep)
        yv, yc = self._resolve_input("g2", y_rep)
        zv = xv * yv % self.p
        z_rep = self._enc["gt"].get(zv)
        if z_rep is None:
            # A pairing output has no decomposition over the GT basis seen so
            # far; it enters the GT tables as a fresh independent element.
            z_rep = self._fresh_rep("gt")
            zc = self._register_independent("gt", z_rep, zv)
        else:
            zc = self._first_combo["gt"][z_rep]
        self.tables.entries["g1"].append((x_rep, xc))
        self.tables.entries["g2"].append((y_rep, yc))
        self.tables.entries["gt"].append((z_rep, zc))
        self.query_counts["pair"] += 1
        return z_rep


def _combo_add(a: dict, b: dict, p: int) -> dict:
    out = dict(a)
    for idx, coeff in b.items():
        merged = (out.get(idx, 0) + coeff) % p
        if merged:
            out[idx] = merged
        else:
            out.pop(idx, None)
    return out


def new_world(p: int, seed: Drbg | int | None = None) -> OracleWorld:
    """Fresh oracle world; no encodings are materialized until first use."""
    return OracleWorld(p, seed)


def oracle_g1(world: OracleWorld, x_rep: bytes, y_rep: bytes) -> bytes:
    return world._group_query("g1", x_rep, y_rep)


def oracle_g2(world: OracleWorld, x_rep: bytes, y_rep: bytes) -> bytes:
    return world._group_query("g2", x_rep, y_rep)


def oracle_gt(world: OracleWorld, x_rep: bytes, y_rep: bytes) -> bytes:
    # GT is written multiplicatively; multiplying elements adds exponents.
    return world._group_query("gt", x_rep, y_rep)


def oracle_pair(world: OracleWorld, x_rep: bytes, y_rep: bytes) -> bytes:
    return world._pair_query(x_rep, y_rep)


def audit_collisions(world: OracleWorld) -> CollisionReport:
    """Scan the tables for entry pairs with equal representation but
    different combination vectors."""
    collisions = []
    for group in GROUPS:
        seen: dict[bytes, list[tuple[int, dict]]] = {}
        for idx, (rep, combo) in enumerate(world.tables.entries[group]):
            seen.setdefault(rep, []).append((idx, combo))
        for rep, occurrences in seen.items():
            if len(occurrences) < 2:
                continue
            for i, (j, combo_j) in enumerate(occurrences):
                for k, combo_k in occurrences[i + 1:]:
                    if combo_j != combo_k:
                        collisions.append(
                            Collision(group, j, k, combo_j, combo_k, rep))
    m = world.queries_made
    return CollisionReport(p=world.p, queries_made=m,
                           collisions=tuple(collisions),
                           bound=collision_bound(m, world.p))


@dataclass(frozen=True)
class ExperimentResult:
    p: int
    m: int
    trials: int
    strategy: str
    hits: int
    rate: float
    bound: float

    def csv_line(self) -> str:
        return f"{self.p},{self.m},{self.trials},{self.rate:.6f},{self.bound:.6f}"


def _random_strategy(world: OracleWorld, m: int, rng: Drbg) -> None:
    pools = {
        "g1": [world.g1_generator()],
        "g2": [world.g2_generator()],
        "gt": [world.gt_generator()],
    }

    def pick(group: str, budget: dict) -> bytes:
        # Fresh unknown strings consume unassigned Zp values; budget them
        # per query so degenerate tiny primes never exhaust the space.
        if rng.randbelow(4) == 0 and budget[group] > 0:
            budget[group] -= 1
            return rng.randbytes(world.rep_len)
        return rng.choice(pools[group])

    ops = ("g1", "g2", "gt", "pair")
    for _ in range(m):
        op = ops[rng.randbelow(4)]
        budget = {g: world.remaining(g) for g in GROUPS}
        if op == "pair":
            out = oracle_pair(world, pick("g1", budget), pick("g2", budget))
            pools["gt"].append(out)
        else:
            out = world._group_query(op, pick(op, budget), pick(op, budget))
            pools[op].append(out)


def _birthday_strategy(world: OracleWorld, m: int, rng: Drbg) -> None:
    # Load up unknown independents first, then keep combining known
    # representations to fish for value coincidences.
    pool = [world.g1_generator()]
    for i in range(m):
        if i < m // 3 and world.remaining("g1") >= 2:
            out = oracle_g1(world, rng.randbytes(world.rep_len),
                            rng.randbytes(world.rep_len))
        else:
            out = oracle_g1(world, rng.choice(pool), rng.choice(pool))
        pool.append(out)


_STRATEGIES = {
    "random": _random_strategy,
    "adversarial-birthday": _birthday_strategy,
    "birthday": _birthday_strategy,
}


def collision_experiment(p: int, m: int, trials: int, strategy: str = "random",
                         seed: Drbg | int | None = None) -> ExperimentResult:
    """Monte Carlo fraction of trials in which the audit finds a collision."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    try:
        run = _STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    master = as_rng(seed)
    hits = 0
    for _ in range(trials):
        world = new_world(p, master.randbits(64))
        run(world, m, Drbg(master.randbits(64)))
        if audit_collisions(world).collisions:
            hits += 1
    return ExperimentResult(p=p, m=m, trials=trials, strategy=strategy,
                            hits=hits, rate=hits / trials,
                            bound=float(collision_bound(m, p)))
