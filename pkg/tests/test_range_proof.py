import math
import random
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mbfcost.range_proof import (
    AuditPlan, RangeChallenge, RangeProof, empty_proof_probability, empty_proof_refutation_effort,
    gaps, generate_range_proof, verification_effort, verify_range_proof,
)
from mbfcost.verdict import Verdict
from mbfcost.walk_core import CountingTable, build_table

from conftest import ZERO_NONCE
from oracles import brute_range


def honest(table, nonce=ZERO_NONCE, n=1024, zeros=4, l=16):
    ch = RangeChallenge(nonce, n, zeros, l)
    return ch, generate_range_proof(table, ch)


def test_matches_oracle_golden(table):
    ch, proof = honest(table)
    assert list(proof.indices) == brute_range(table, ZERO_NONCE, 1024, 4, 16)
    assert len(proof) == 70  # expected 64


def test_single_index_zero_zeros(table):
    assert generate_range_proof(table, RangeChallenge(ZERO_NONCE, 1, 0, 3)).indices == (0,)


def test_empty_proof_found_by_search(table):
    for k in range(256):
        nonce = bytes([k]) + bytes(15)
        if not brute_range(table, nonce, 64, 6, 8):
            break
    else:
        pytest.fail("no empty configuration found")
    ch = RangeChallenge(nonce, 64, 6, 8)
    proof = generate_range_proof(table, ch)
    assert proof.indices == ()
    assert verify_range_proof(table, ch, proof, AuditPlan()) is Verdict.EMPTY_PROOF


@settings(max_examples=25, deadline=None)
@given(nonce=st.binary(min_size=16, max_size=16), n=st.integers(1, 1 << 12), zeros=st.integers(0, 8),
       l=st.integers(1, 6))
def test_completeness(table, nonce, n, zeros, l):
    assert list(generate_range_proof(table, RangeChallenge(nonce, n, zeros, l)).indices) == \
        brute_range(table, nonce, n, zeros, l)


def test_threaded_generation_matches(table):
    ch = RangeChallenge(b"\x07" * 16, 1 << 16, 9, 2)
    assert generate_range_proof(table, ch, workers=4) == generate_range_proof(table, ch)


@pytest.mark.parametrize("nonce", [ZERO_NONCE, b"\xff" * 16, bytes(range(16))])
def test_fixed_generation_cost(table, nonce):
    t = CountingTable(table)
    generate_range_proof(t, RangeChallenge(nonce, 777, 3, 5))
    assert t.accesses == 777 * 5


def test_wire_round_trip():
    ch = RangeChallenge(bytes(range(16)), 1 << 15, 11, 2048)
    data = ch.to_bytes()
    assert len(data) == 16 + 8 + 1 + 4
    assert RangeChallenge.from_bytes(data) == ch
    proof = RangeProof((1, 5, 1 << 40))
    data = proof.to_bytes()
    assert data[:4] == (3).to_bytes(4, "little") and len(data) == 4 + 24
    assert RangeProof.from_bytes(data) == proof
    assert RangeProof.decode_lenient(data[:-1]) is None
    assert RangeProof.from_bytes(RangeProof(()).to_bytes()) == RangeProof(())


def test_gaps_include_boundaries():
    assert gaps(RangeProof((2, 3, 7)), 10) == [(0, 2), (3, 3), (4, 7), (8, 10)]
    assert gaps(RangeProof((0, 9)), 10) == [(0, 0), (1, 9), (10, 10)]


def test_honest_round_trip_any_plan(table):
    ch, proof = honest(table)
    for seed in range(20):
        plan = AuditPlan(1 + seed % 9, seed % 6, seed)
        assert verify_range_proof(table, ch, proof, plan)


@pytest.mark.parametrize("indices", [(5, 3), (3, 3), (1, 1024), (-1,)])
def test_malformed(table, indices):
    ch, _ = honest(table)
    assert verify_range_proof(table, ch, RangeProof(indices), AuditPlan()) is Verdict.MALFORMED


def test_oversized_proof_is_malformed(table):
    ch = RangeChallenge(ZERO_NONCE, 1024, 4, 16)
    assert ch.size_cap == 512
    assert verify_range_proof(table, ch, RangeProof(tuple(range(513))), AuditPlan()) is Verdict.MALFORMED


def test_undecodable_is_malformed(table):
    ch, _ = honest(table)
    assert verify_range_proof(table, ch, None) is Verdict.MALFORMED


def test_bogus_index_caught_by_full_sample(table):
    ch, proof = honest(table)
    bogus = next(i for i in range(1024) if i not in proof.indices)
    tampered = RangeProof(tuple(sorted(proof.indices + (bogus,))))
    plan = AuditPlan(len(tampered), 0)
    assert verify_range_proof(table, ch, tampered, plan) is Verdict.BOGUS_INDEX


def test_omission_caught_by_full_gap_search(table):
    ch, proof = honest(table)
    tampered = RangeProof(proof.indices[:10] + proof.indices[11:])
    plan = AuditPlan(1, len(tampered) + 1)
    assert verify_range_proof(table, ch, tampered, plan) is Verdict.OMITTED_INDEX


def test_truncated_tail_caught_via_boundary_gap(table):
    ch, proof = honest(table)
    tampered = RangeProof(proof.indices[:-1])
    assert verify_range_proof(table, ch, tampered, AuditPlan.full(tampered)) is Verdict.OMITTED_INDEX


def test_bogus_detection_rate_is_k_over_n(table):
    ch, proof = honest(table)
    bogus = next(i for i in range(1024) if i not in proof.indices)
    tampered = RangeProof(tuple(sorted(proof.indices + (bogus,))))
    n, k, runs = len(tampered), 5, 4000
    caught = sum(verify_range_proof(table, ch, tampered, AuditPlan(k, 0, s)) is Verdict.BOGUS_INDEX
                 for s in range(runs))
    rate = 1 - comb(n - 1, k) / comb(n, k)
    assert math.isclose(rate, k / n)
    se = math.sqrt(rate * (1 - rate) / runs)
    assert abs(caught / runs - rate) <= 3 * se


def test_omission_detection_grows_with_gap_count(table):
    ch, proof = honest(table, l=4)
    tampered = RangeProof(proof.indices[:30] + proof.indices[31:])
    rates = []
    for g in (1, 4, 16, 64):
        caught = sum(verify_range_proof(table, ch, tampered, AuditPlan(1, g, s)) is Verdict.OMITTED_INDEX
                     for s in range(300))
        rates.append(caught / 300)
    assert rates == sorted(rates) and rates[-1] > rates[0]


def test_verifier_never_exceeds_generator(table):
    ch, proof = honest(table, l=4)
    n = len(proof)
    for plan in [AuditPlan(1, 0), AuditPlan(8, 4, 3), AuditPlan(n, n), AuditPlan.full(proof), AuditPlan(1000, 1000)]:
        t = CountingTable(table)
        assert verify_range_proof(t, ch, proof, plan)
        assert t.accesses <= ch.range_len * ch.l
        full = plan.sample_count >= n and plan.gap_count >= n + 1
        assert (t.accesses == ch.range_len * ch.l) == full


def test_verification_effort_formula(table):
    ch, proof = honest(table)
    assert verification_effort(ch, proof, AuditPlan(1, 0)) == ch.l
    assert verification_effort(ch, proof, AuditPlan.full(proof)) == ch.range_len * ch.l
    # expected gap width matches the empirical mean over audit seeds
    plan = AuditPlan(3, 5)
    widths = []
    g = gaps(proof, ch.range_len)
    for s in range(3000):
        rng = random.Random(s)
        rng.sample(range(len(proof)), 3)
        widths.append(sum(g[j][1] - g[j][0] for j in rng.sample(range(len(proof) + 1), 5)))
    est = (3 + np.mean(widths)) * ch.l
    assert abs(est - verification_effort(ch, proof, plan)) / est < 0.03


def test_empty_proof_refutation_cost():
    # range 2^e, zeros e - m: refuting emptiness costs about 2^-m of generation
    e, m, l = 12, 3, 5
    ch = RangeChallenge(ZERO_NONCE, 1 << e, e - m, l)
    cost = empty_proof_refutation_effort(ch)
    assert math.isclose(cost, (1 << (e - m)) * l, rel_tol=1e-3)
    assert math.isclose(cost / (ch.range_len * l), 2.0 ** -m, rel_tol=1e-3)


def test_empty_proof_frequency():
    # e=10, m=2: probability (1 - 2^-8)^1024 ~ e^-4
    table = build_table(4, 1 << 10)
    p = empty_proof_probability(1024, 8)
    assert math.isclose(p, (1 - 2 ** -8) ** 1024)
    rng = np.random.default_rng(8)
    runs = 3000
    empty = sum(not generate_range_proof(table, RangeChallenge(rng.bytes(16), 1024, 8, 2)).indices
                for _ in range(runs))
    se = math.sqrt(p * (1 - p) / runs)
    assert abs(empty / runs - p) <= 3 * se


def test_plan_validation():
    with pytest.raises(ValueError):
        AuditPlan(0, 1)
    with pytest.raises(ValueError):
        AuditPlan(1, -1)
    with pytest.raises(ValueError):
        RangeChallenge(ZERO_NONCE, 0, 4, 4)
    with pytest.raises(ValueError):
        RangeChallenge(ZERO_NONCE, 8, 25, 4)
