"""Command-line interface.

Exit codes are a stable contract: 0 success/valid, 1 invalid (failed
verification, invalid chain, desynchronized signer state), 2 usage error.
All commands are deterministic under --seed except wall-clock benchmark
numbers.
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import dataclass

import click

from . import chain as chainmod
from . import lrsig
from .bilinear import UnsupportedBackendError, setup
from .genericgroup import collision_experiment
from .leakage import run_attack
from .market import ScenarioError, run_scenario
from .rng import Drbg

# Reference timings (ms) from two sample platforms; context only, local
# numbers are hardware-bound and not comparison targets.
REFERENCE_TIMINGS_MS = {
    "ref_laptop_setup_ms": 23.268,
    "ref_laptop_keygen_ms": 1.156,
    "ref_laptop_sign_ms": 11.083,
    "ref_laptop_verify_ms": 6.083,
    "ref_phone_setup_ms": 40.663,
    "ref_phone_keygen_ms": 12.380,
    "ref_phone_sign_ms": 39.083,
    "ref_phone_verify_ms": 14.526,
}


@click.group()
def main():
    """Leakage-resilient split-key signatures, toy chain and experiments."""


# --- key management ---------------------------------------------------------


@main.command("keygen")
@click.option("--security", default="toy", show_default=True)
@click.option("--backend", default="mock", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "prefix", required=True, type=click.Path(),
              help="Output prefix; writes <prefix>.pk (and share files).")
@click.option("--export-secret", is_flag=True,
              help="Also write the two secret share files (required to sign).")
def keygen_cmd(security, backend, seed, prefix, export_secret):
    """Generate a keypair."""
    try:
        params = setup(security, backend, seed)
    except UnsupportedBackendError as exc:
        raise click.UsageError(str(exc))
    pk, state = lrsig.keygen(params, Drbg(seed) if seed is not None else None)
    _write(prefix + ".pk", lrsig.encode_public_key(pk))
    if export_secret:
        blob_a, blob_b = lrsig.export_state(state)
        _write(prefix + ".share-a", blob_a)
        _write(prefix + ".share-b", blob_b)
        click.echo(f"wrote {prefix}.pk, {prefix}.share-a, {prefix}.share-b")
    else:
        click.echo(f"wrote {prefix}.pk (pass --export-secret to keep the "
                   "signing state)")


@main.command("sign")
@click.option("--key", "prefix", required=True, type=click.Path())
@click.option("--message", "msg_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "sig_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
def sign_cmd(prefix, msg_path, sig_path, seed):
    """Sign a message file; rewrites the share files with the round advanced."""
    state = _load_state(prefix)
    msg = _read(msg_path)
    try:
        sig = lrsig.sign(state, msg, Drbg(seed) if seed is not None else None)
    except lrsig.RoundMismatchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _write(sig_path, lrsig.encode_signature(sig))
    blob_a, blob_b = lrsig.export_state(state)
    _write(prefix + ".share-a", blob_a)
    _write(prefix + ".share-b", blob_b)
    click.echo(f"signed {msg_path} at round {state.round}")


@main.command("verify")
@click.option("--pk", "pk_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--message", "msg_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--sig", "sig_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def verify_cmd(pk_path, msg_path, sig_path):
    """Verify a signature file; exit 0 valid, 1 invalid."""
    try:
        pk = lrsig.decode_public_key(_read(pk_path))
        sig = lrsig.decode_signature(pk.params, _read(sig_path))
        ok = lrsig.verify(pk, _read(msg_path), sig)
    except ValueError:
        ok = False
    click.echo("valid" if ok else "invalid")
    sys.exit(0 if ok else 1)


# --- chain and market -------------------------------------------------------


@main.group("chain")
def chain_group():
    """Chain file tools."""


@chain_group.command("validate")
@click.argument("chain_file", type=click.Path(exists=True, dir_okay=False))
def chain_validate_cmd(chain_file):
    """Validate a chain file; JSON report on stdout, exit 0/1."""
    ok, report = chainmod.validate_chain_file(chain_file)
    click.echo(json.dumps(report))
    sys.exit(0 if ok else 1)


@main.group("market")
def market_group():
    """Market scenario tools."""


@market_group.command("run")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "chain_out", type=click.Path(), default=None,
              help="Write the resulting chain to this file.")
def market_run_cmd(scenario, seed, chain_out):
    """Run a scenario script; JSON report on stdout."""
    text = _read(scenario).decode("utf-8")
    try:
        report = run_scenario(text, seed=seed,
                              base_dir=os.path.dirname(os.path.abspath(scenario)))
    except ScenarioError as exc:
        raise click.UsageError(str(exc))
    if chain_out:
        chainmod.write_chain_file(chain_out, report.blocks)
    click.echo(json.dumps(report.to_json()))
    sys.exit(0 if report.all_valid else 1)


# --- experiments ------------------------------------------------------------


@main.command("genericgroup")
@click.option("--p", "prime", type=int, required=True)
@click.option("--queries", type=int, required=True)
@click.option("--trials", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
def genericgroup_cmd(prime, queries, trials, seed):
    """Collision Monte Carlo; one CSV line: p,m,trials,empirical_rate,bound."""
    try:
        result = collision_experiment(prime, queries, trials, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(result.csv_line())


@main.command("leakgame")
@click.option("--variant", type=click.Choice(["naive", "split"]), required=True)
@click.option("--lambda", "lam", type=click.IntRange(min=0), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=100,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def leakgame_cmd(variant, lam, trials, seed):
    """Windowed leakage attack; one CSV line:
    variant,lambda,trials,success_rate,mean_rounds."""
    full = {"naive": "naive-monolithic", "split": "split-refresh"}[variant]
    report = run_attack(full, lam, trials, seed=seed)
    click.echo(report.csv_line())


# --- benchmark --------------------------------------------------------------


@dataclass
class BenchReport:
    setup_ms: float
    keygen_ms: float
    sign_ms: float
    verify_ms: float
    sign_r2: float
    verify_r2: float
    sign_totals_ms: list
    verify_totals_ms: list

    def csv_lines(self) -> list[str]:
        lines = ["metric,value"]
        for name, value in (
            ("setup_ms", self.setup_ms),
            ("keygen_ms", self.keygen_ms),
            ("sign_ms", self.sign_ms),
            ("verify_ms", self.verify_ms),
            ("sign_r2", self.sign_r2),
            ("verify_r2", self.verify_r2),
        ):
            lines.append(f"{name},{value:.6f}")
        for name, value in REFERENCE_TIMINGS_MS.items():
            lines.append(f"{name},{value:.3f}")
        return lines


def _mean_ms(fn, reps: int) -> float:
    total = 0.0
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        total += time.perf_counter() - start
    return total * 1000.0 / reps


def _r_squared(xs, ys) -> float:
    import numpy as np

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - float(np.sum(residuals ** 2)) / ss_tot


def run_bench(n_messages: int = 10, reps: int = 50, inner: int = 25,
              seed: int | None = 0) -> BenchReport:
    """Per-algorithm mean timings plus linearity of total Sign/Verify time
    in the number of signed messages."""
    if n_messages < 1:
        raise ValueError("n_messages must be >= 1")
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    params = setup()
    rng = Drbg(seed)
    pk, state = lrsig.keygen(params, rng)
    messages = [b"bench-message-%d" % i for i in range(n_messages)]
    one_sig = lrsig.sign(state, messages[0], rng)

    setup_ms = _mean_ms(lambda: setup(), reps)
    keygen_ms = _mean_ms(lambda: lrsig.keygen(params, rng), reps)
    sign_ms = _mean_ms(lambda: lrsig.sign(state, messages[0], rng), reps)
    verify_ms = _mean_ms(lambda: lrsig.verify(pk, messages[0], one_sig), reps)

    sigs = [lrsig.sign(state, msg, rng) for msg in messages]

    def sign_batch(n):
        for _ in range(inner):
            for msg in messages[:n]:
                lrsig.sign(state, msg, rng)

    def verify_batch(n):
        for _ in range(inner):
            for msg, sig in zip(messages[:n], sigs[:n]):
                lrsig.verify(pk, msg, sig)

    # The linearity sweep keeps the fastest of `reps` runs per point
    # (scheduler noise only ever adds time) and visits the points
    # round-robin so bursts of machine noise hit every n alike.
    ns = list(range(1, n_messages + 1))
    sign_totals = {n: float("inf") for n in ns}
    verify_totals = {n: float("inf") for n in ns}
    for n in ns:  # warmup
        sign_batch(n)
        verify_batch(n)
    for _ in range(reps):
        for n in ns:
            start = time.perf_counter()
            sign_batch(n)
            sign_totals[n] = min(sign_totals[n], (time.perf_counter() - start) * 1000.0)
            start = time.perf_counter()
            verify_batch(n)
            verify_totals[n] = min(verify_totals[n], (time.perf_counter() - start) * 1000.0)
    sign_totals = [sign_totals[n] for n in ns]
    verify_totals = [verify_totals[n] for n in ns]
    return BenchReport(
        setup_ms=setup_ms,
        keygen_ms=keygen_ms,
        sign_ms=sign_ms,
        verify_ms=verify_ms,
        sign_r2=_r_squared(ns, sign_totals),
        verify_r2=_r_squared(ns, verify_totals),
        sign_totals_ms=sign_totals,
        verify_totals_ms=verify_totals,
    )


@main.command("bench")
@click.option("--messages", "n_messages", type=click.IntRange(min=1),
              default=10, show_default=True)
@click.option("--reps", type=click.IntRange(min=1), default=50,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def bench_cmd(n_messages, reps, seed):
    """Time the four algorithms; CSV with per-algorithm means, the
    linear-fit R2 of total Sign/Verify time versus message count, and
    reference platform timings for context."""
    report = run_bench(n_messages=n_messages, reps=reps, seed=seed)
    for line in report.csv_lines():
        click.echo(line)


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)


def _load_state(prefix: str) -> lrsig.SecretState:
    try:
        blob_a = _read(prefix + ".share-a")
        blob_b = _read(prefix + ".share-b")
    except OSError as exc:
        raise click.UsageError(f"cannot read share files: {exc}")
    try:
        return lrsig.import_state(blob_a, blob_b)
    except ValueError as exc:
        raise click.UsageError(f"bad share files: {exc}")


if __name__ == "__main__":
    main()
