"""``mbf`` command line.

Exit status: 0 success or accept, 1 verification reject, 2 usage or parse
error.  Challenge and proof files carry a 4-byte scheme tag (``MBP1`` or
``RGP1``) followed by the wire encoding.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import struct
import sys
from pathlib import Path

from . import adversary, cost_model, mbound, planner, range_proof
from .mbound import MboundChallenge
from .range_proof import AuditPlan, RangeChallenge, RangeProof
from .walk_core import DEFAULT_TABLE_LEN, NONCE_LEN, PublicTable, build_table

TAG_MBOUND = b"MBP1"
TAG_RANGE = b"RGP1"
CACHE_ENV = "MBF_TABLE_CACHE"

EXIT_OK, EXIT_REJECT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int(text: str) -> int:
    """Integer flag that also accepts ``2^k`` and hex."""
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return int(base, 0) ** int(exp, 0)
    return int(text, 0)


def _int_list(text: str) -> list[int]:
    return [_int(t) for t in text.split(",") if t.strip()]


# -- tables -------------------------------------------------------------------

def cached_table(seed: int, n: int) -> PublicTable:
    cache = os.environ.get(CACHE_ENV)
    if not cache:
        return build_table(seed, n)
    path = Path(cache) / f"table-{seed}-{n}.bin"
    if path.exists():
        return PublicTable.load(path)
    table = build_table(seed, n)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.save(path)
    return table


def load_table(args) -> PublicTable:
    if getattr(args, "table", None):
        return PublicTable.load(args.table)
    return cached_table(args.table_seed, args.table_len)


def _add_table_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--table", help="table file written by 'table build'")
    p.add_argument("--table-seed", type=_int, default=1)
    p.add_argument("--table-len", type=_int, default=DEFAULT_TABLE_LEN)


# -- tagged files ---------------------------------------------------------------

def read_tagged(path: str) -> tuple[bytes, bytes]:
    data = Path(path).read_bytes()
    tag = data[:4]
    if tag not in (TAG_MBOUND, TAG_RANGE):
        raise UsageError(f"{path}: unknown scheme tag {tag!r}")
    return tag, data[4:]


def read_challenge(path: str) -> MboundChallenge | RangeChallenge:
    tag, body = read_tagged(path)
    if tag == TAG_MBOUND:
        return MboundChallenge.from_bytes(body)
    return RangeChallenge.from_bytes(body)


# -- commands ---------------------------------------------------------------------

def cmd_table_build(args) -> int:
    table = build_table(args.seed, args.len)
    data = table.to_bytes()
    Path(args.output).write_bytes(data)
    print(f"seed={table.seed} len={len(table)} bytes={len(data)} -> {args.output}")
    return EXIT_OK


def cmd_challenge(args) -> int:
    if args.nonce_seed is not None:
        nonce = random.Random(args.nonce_seed).randbytes(NONCE_LEN)
    else:
        nonce = os.urandom(NONCE_LEN)
    if args.scheme == "mbound":
        ch = MboundChallenge(nonce, args.e, args.l, args.max_trials)
        data = TAG_MBOUND + ch.to_bytes()
        desc = f"mbound e={ch.e} l={ch.l} max_trials={ch.max_trials}"
    else:
        zeros = args.zeros if args.zeros is not None else args.e - args.m
        n = args.range_len if args.range_len is not None else 1 << args.e
        ch = RangeChallenge(nonce, n, zeros, args.l)
        data = TAG_RANGE + ch.to_bytes()
        desc = f"range range_len={ch.range_len} zeros={ch.zeros} l={ch.l}"
    Path(args.output).write_bytes(data)
    print(f"{desc} nonce={nonce.hex()} -> {args.output}")
    return EXIT_OK


def cmd_generate(args) -> int:
    ch = read_challenge(args.challenge)
    table = load_table(args)
    if isinstance(ch, MboundChallenge):
        res = mbound.generate(table, ch)
        if isinstance(res, mbound.Exhausted):
            print(f"exhausted after {res.trials_attempted} trials; no proof written")
            return EXIT_REJECT
        Path(args.output).write_bytes(TAG_MBOUND + res.to_bytes())
        print(f"index={res.index} trials={res.trials_used} accesses={res.trials_used * ch.l}")
    else:
        proof = range_proof.generate_range_proof(table, ch, workers=args.threads)
        Path(args.output).write_bytes(TAG_RANGE + proof.to_bytes())
        print(f"indices={len(proof)} accesses={ch.range_len * ch.l}")
        if not proof.indices:
            print("empty proof: verifiers reject these; perturb the nonce and retry")
    return EXIT_OK


def cmd_verify(args) -> int:
    ch = read_challenge(args.challenge)
    tag, body = read_tagged(args.proof)
    table = load_table(args)
    if isinstance(ch, MboundChallenge):
        if tag != TAG_MBOUND:
            raise UsageError("proof scheme does not match challenge")
        verdict = mbound.verify(table, ch, mbound.MboundProof.from_bytes(body))
    else:
        if tag != TAG_RANGE:
            raise UsageError("proof scheme does not match challenge")
        proof = RangeProof.decode_lenient(body)
        if args.full_audit and proof is not None:
            plan = AuditPlan.full(proof, args.audit_seed)
        else:
            samples = args.samples if args.samples is not None else min(8, max(1, len(proof or ())))
            plan = AuditPlan(samples, args.gaps, args.audit_seed)
        verdict = range_proof.verify_range_proof(table, ch, proof, plan)
    print(verdict.value)
    return EXIT_OK if verdict else EXIT_REJECT


def cmd_dist(args) -> int:
    out = Path(args.output_dir)
    for e in args.e:
        h = cost_model.trial_distribution(e)
        tries, cost = cost_model.emit_histogram_files(h, out)
        s = cost_model.summarize(h)
        summary = cost_model.write_summary(s, out)
        print(f"e={e}: {tries} {cost} {summary}")
        print(f"  mean={h.total_cost:.1f} median={s['quantiles']['0.5']} "
              f"tail>2x={s['tail_cost_fraction']['2x']:.3f} tail>4x={s['tail_cost_fraction']['4x']:.3f}")
        for note in s["notes"]:
            print(f"  note: {note}")
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.scheme == "mbound":
        plans = [planner.plan_mbound(args.e, args.l)]
        if args.m is not None:
            eq = planner.equivalent_range_params(plans[0], args.m)
            plans += [eq.cost_preserving, eq.literal]
    else:
        if args.m is None:
            raise UsageError("range plans need --m")
        plans = [planner.plan_range(args.e, args.m, args.l, args.range_len)]
    window = planner.deadline_window(plans[0], args.access_time, args.speed_ratio, args.q_low, args.q_high)
    print(json.dumps(planner.plan_report(plans, window), indent=2))
    return EXIT_OK


def cmd_adversary(args) -> int:
    table = load_table(args)
    kind = adversary.PolicyKind(args.strategy)
    if kind is adversary.PolicyKind.EARLY_ABORT:
        policy = adversary.AdversaryPolicy(kind, abort_threshold=args.threshold)
        ch = MboundChallenge(bytes(NONCE_LEN), args.e, args.l)
        report = adversary.run_early_abort(table, ch, policy, args.n, args.rng_seed)
    elif kind is adversary.PolicyKind.PERTURB_RETRY:
        policy = adversary.AdversaryPolicy(kind, retry_budget=args.budget, cheapness_bound=args.bound)
        base = random.Random(args.rng_seed).randbytes(NONCE_LEN)
        report = adversary.run_perturb_retry(table, base, args.e, args.l, policy, args.rng_seed, args.n)
    else:
        policy = adversary.AdversaryPolicy(kind, abort_threshold=args.threshold)
        challenges = []
        for k in range(args.n):
            nonce = adversary.message_nonce(args.rng_seed, k)
            challenges.append(MboundChallenge(nonce, args.e, args.l))
            if args.range_len:
                challenges.append(RangeChallenge(nonce, args.range_len, args.e - args.m, args.l))
        report = adversary.run_selective_failure(table, challenges, policy)
    doc = adversary.report_dict(report)
    text = json.dumps(doc, indent=2)
    print(text)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"adversary-{kind.value}.json").write_text(text + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import access_latency
    for n, ns in access_latency(args.max_log2, accesses=args.accesses, seed=args.table_seed):
        print(f"len=2^{n.bit_length() - 1:<3d} bytes={4 * n:<12d} ns/access={ns:.2f}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbf", description="Memory-bound proof-of-effort toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    tb = sub.add_parser("table", help="table management").add_subparsers(dest="action", required=True)
    p = tb.add_parser("build", help="build and save a public table")
    p.add_argument("--seed", type=_int, default=1)
    p.add_argument("--len", type=_int, default=DEFAULT_TABLE_LEN)
    p.add_argument("--output", default="table.bin")
    p.set_defaults(func=cmd_table_build)

    p = sub.add_parser("challenge", help="issue a challenge")
    p.add_argument("--scheme", choices=("mbound", "range"), default="mbound")
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--l", type=_int, required=True)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--zeros", type=int, help="range scheme: override e - m")
    p.add_argument("--range-len", type=_int, help="range scheme: defaults to 2^e")
    p.add_argument("--max-trials", type=_int, help="mbound: defaults to 2^(2e)")
    p.add_argument("--nonce-seed", type=_int, help="derive the nonce from a seed instead of the OS")
    p.add_argument("--output", default="challenge.bin")
    p.set_defaults(func=cmd_challenge)

    p = sub.add_parser("generate", help="answer a challenge")
    p.add_argument("--challenge", required=True)
    p.add_argument("--output", default="proof.bin")
    p.add_argument("--threads", type=int, default=1)
    _add_table_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check a proof (exit 0 accept, 1 reject)")
    p.add_argument("--challenge", required=True)
    p.add_argument("--proof", required=True)
    p.add_argument("--samples", type=int, help="range: listed indices to re-walk (default min(8, n))")
    p.add_argument("--gaps", type=int, default=4, help="range: gaps to search exhaustively")
    p.add_argument("--audit-seed", type=_int, default=0)
    p.add_argument("--full-audit", action="store_true", help="range: check everything")
    _add_table_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dist", help="trial-count histograms (tries.dat / cost.dat)")
    p.add_argument("--e", type=_int_list, default=[6, 12, 15, 18])
    p.add_argument("--output-dir", default="data")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("plan", help="parameter planning report")
    p.add_argument("--scheme", choices=("mbound", "range"), default="mbound")
    p.add_argument("--e", type=int, required=True)
    p.add_argument("--l", type=_int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--range-len", type=_int)
    p.add_argument("--access-time", type=float, default=1e-7, help="seconds per access, fast machine")
    p.add_argument("--speed-ratio", type=float, default=planner.DEFAULT_SPEED_RATIO)
    p.add_argument("--q-low", type=float, default=planner.DEFAULT_QUANTILES[0])
    p.add_argument("--q-high", type=float, default=planner.DEFAULT_QUANTILES[1])
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("adversary", help="adversary strategy experiments")
    p.add_argument("strategy", choices=[k.value for k in adversary.PolicyKind])
    p.add_argument("--e", type=int, default=6)
    p.add_argument("--l", type=_int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--threshold", type=_int)
    p.add_argument("--bound", type=_int, default=8, help="perturb-retry: cheapness bound in trials")
    p.add_argument("--budget", type=_int, default=10_000, help="perturb-retry: rewordings per message")
    p.add_argument("--range-len", type=_int, help="selective-failure: also issue range challenges")
    p.add_argument("--n", type=_int, default=10_000)
    p.add_argument("--rng-seed", type=_int, default=0)
    p.add_argument("--output-dir")
    _add_table_flags(p)
    p.set_defaults(func=cmd_adversary, table_len=1 << 16)

    p = sub.add_parser("bench", help="per-access latency vs table size (informational)")
    p.add_argument("--max-log2", type=int, default=26)
    p.add_argument("--accesses", type=_int, default=1 << 20)
    p.add_argument("--table-seed", type=_int, default=1)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, struct.error, OSError) as exc:
        print(f"mbf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
