"""Range-enumeration proofs.

The generator must list *every* index in ``[0, range_len)`` whose walk value
has at least ``zeros`` trailing zero bits, so generation cost is fixed at
``range_len * l`` table accesses.  The verifier spot-checks listed indices and
exhaustively re-searches a few randomly chosen gaps between them.
"""
from __future__ import annotations

import math
import random
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .verdict import Verdict
from .walk_core import NONCE_LEN, PublicTable, has_zeros, walk_many

MAX_ZEROS = 24
CHALLENGE_LEN = NONCE_LEN + 8 + 1 + 4
SIZE_CAP_FACTOR = 8
MIN_SIZE_CAP = 8
_CHUNK = 1 << 14


@dataclass(frozen=True)
class RangeChallenge:
    nonce: bytes
    range_len: int
    zeros: int
    l: int

    def __post_init__(self):
        if len(self.nonce) != NONCE_LEN:
            raise ValueError(f"nonce must be {NONCE_LEN} bytes")
        if not 1 <= self.range_len < 1 << 64:
            raise ValueError("range_len must be a positive 64-bit integer")
        if not 0 <= self.zeros <= MAX_ZEROS:
            raise ValueError(f"zeros must be in [0, {MAX_ZEROS}], got {self.zeros}")
        if self.l < 1:
            raise ValueError("path length l must be >= 1")

    @property
    def expected_hits(self) -> float:
        return self.range_len * 2.0 ** -self.zeros

    @property
    def size_cap(self) -> int:
        """Longest list the verifier will look at."""
        return max(MIN_SIZE_CAP, math.ceil(SIZE_CAP_FACTOR * self.expected_hits))

    def to_bytes(self) -> bytes:
        return self.nonce + struct.pack("<QBI", self.range_len, self.zeros, self.l)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RangeChallenge":
        if len(data) != CHALLENGE_LEN:
            raise ValueError(f"range challenge must be {CHALLENGE_LEN} bytes, got {len(data)}")
        range_len, zeros, l = struct.unpack_from("<QBI", data, NONCE_LEN)
        return cls(bytes(data[:NONCE_LEN]), range_len, zeros, l)


@dataclass(frozen=True)
class RangeProof:
    indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    def is_well_formed(self, range_len: int) -> bool:
        idx = self.indices
        if any(i < 0 or i >= range_len for i in idx):
            return False
        return all(a < b for a, b in zip(idx, idx[1:]))

    def to_bytes(self) -> bytes:
        return struct.pack(f"<I{len(self.indices)}Q", len(self.indices), *self.indices)

    @classmethod
    def from_bytes(cls, data: bytes) -> "RangeProof":
        """Strict decode.  Raises ValueError if the count disagrees with the
        payload length; see ``decode_lenient`` for the verifier's view."""
        if len(data) < 4:
            raise ValueError("range proof shorter than its count prefix")
        (count,) = struct.unpack_from("<I", data)
        if len(data) != 4 + 8 * count:
            raise ValueError(f"range proof claims {count} indices but carries {len(data) - 4} bytes")
        return cls(struct.unpack_from(f"<{count}Q", data, 4))

    @classmethod
    def decode_lenient(cls, data: bytes) -> "RangeProof | None":
        """Decode, returning None instead of raising on a bad layout."""
        try:
            return cls.from_bytes(data)
        except (ValueError, struct.error):
            return None


@dataclass(frozen=True)
class AuditPlan:
    sample_count: int = 8
    gap_count: int = 4
    audit_seed: int = 0

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.gap_count < 0:
            raise ValueError("gap_count must be >= 0")

    @classmethod
    def full(cls, proof: RangeProof, audit_seed: int = 0) -> "AuditPlan":
        """Check every listed index and search every gap."""
        n = len(proof)
        return cls(max(1, n), n + 1, audit_seed)


def _qualifying(table, ch: RangeChallenge, lo: int, hi: int) -> list[int]:
    found = []
    for a in range(lo, hi, _CHUNK):
        b = min(a + _CHUNK, hi)
        values = walk_many(table, ch.nonce, range(a, b), ch.l)
        found.extend((a + np.flatnonzero(has_zeros(values, ch.zeros))).tolist())
    return found


def generate_range_proof(table: PublicTable, ch: RangeChallenge, workers: int = 1) -> RangeProof:
    """Walk every index in the range and keep the qualifying ones.

    With ``workers > 1`` the range is split into contiguous slices walked on a
    thread pool; concatenating the slices in order keeps the result sorted and
    identical to the sequential one.
    """
    if workers <= 1 or ch.range_len < 2 * _CHUNK:
        return RangeProof(tuple(_qualifying(table, ch, 0, ch.range_len)))
    step = -(-ch.range_len // workers)
    bounds = [(a, min(a + step, ch.range_len)) for a in range(0, ch.range_len, step)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda ab: _qualifying(table, ch, *ab), bounds)
        return RangeProof(tuple(i for part in parts for i in part))


def gaps(proof: RangeProof, range_len: int) -> list[tuple[int, int]]:
    """Half-open intervals of unlisted indices, including both boundary gaps.

    A proof of n indices always has n + 1 gaps, some possibly empty.
    """
    edges = [-1, *proof.indices, range_len]
    return [(a + 1, b) for a, b in zip(edges, edges[1:])]


def verify_range_proof(table: PublicTable, ch: RangeChallenge, proof: RangeProof | None,
                       plan: AuditPlan = AuditPlan()) -> Verdict:
    """Audit a range proof.

    ``proof=None`` stands for bytes that did not decode to a proof and is
    reported as Malformed.  Samples are checked before gaps and the audit
    stops at the first failure.
    """
    if proof is None:
        return Verdict.MALFORMED
    n = len(proof)
    if n == 0:
        return Verdict.EMPTY_PROOF
    if n > ch.size_cap or not proof.is_well_formed(ch.range_len):
        return Verdict.MALFORMED

    rng = random.Random(plan.audit_seed)
    picks = sorted(rng.sample(range(n), min(plan.sample_count, n)))
    sampled = [proof.indices[j] for j in picks]
    if not has_zeros(walk_many(table, ch.nonce, sampled, ch.l), ch.zeros).all():
        return Verdict.BOGUS_INDEX

    all_gaps = gaps(proof, ch.range_len)
    for g in rng.sample(range(n + 1), min(plan.gap_count, n + 1)):
        lo, hi = all_gaps[g]
        if hi > lo and _qualifying(table, ch, lo, hi):
            return Verdict.OMITTED_INDEX
    return Verdict.ACCEPT


def verification_effort(ch: RangeChallenge, proof: RangeProof, plan: AuditPlan) -> float:
    """Expected table accesses of ``verify_range_proof`` on an honest proof.

    Gaps are drawn uniformly without replacement from the n + 1 gaps, whose
    widths sum to ``range_len - n``; so the expected width walked is
    ``g / (n + 1) * (range_len - n)``.  Never exceeds ``range_len * l``.
    """
    n = len(proof)
    if n == 0:
        return 0.0
    k = min(plan.sample_count, n)
    g = min(plan.gap_count, n + 1)
    if g == n + 1:
        gap_width = float(ch.range_len - n)
    else:
        gap_width = g / (n + 1) * (ch.range_len - n)
    return (k + gap_width) * ch.l


def empty_proof_refutation_effort(ch: RangeChallenge) -> float:
    """Expected accesses to refute a false empty proof by scanning from 0.

    The scan stops at the first qualifying index, a geometric variable with
    success probability ``2^-zeros`` truncated at ``range_len``.
    """
    p = 2.0 ** -ch.zeros
    return -math.expm1(ch.range_len * math.log1p(-p)) / p * ch.l if p < 1 else float(ch.l)


def empty_proof_probability(range_len: int, zeros: int) -> float:
    """Chance that no index in the range qualifies."""
    if zeros == 0:
        return 0.0
    return math.exp(range_len * math.log1p(-(2.0 ** -zeros)))
