"""Algorithm MBound: search start indices s = 0, 1, 2, ... for the first walk
whose value ends in ``e`` zero bits.  The proof is that index."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .verdict import Verdict
from .walk_core import NONCE_LEN, PublicTable, has_zeros, trailing_zero_count, walk, walk_many

MAX_E = 24
CHALLENGE_LEN = NONCE_LEN + 1 + 4 + 8
PROOF_LEN = 8

# batch sizes for the vectorised search; the first batch is sized to the
# expected trial count, later ones double
_MIN_BATCH = 16
_MAX_BATCH = 1 << 14


def rejection_bound(e: int) -> int:
    """Indices at or above ``2^(2e)`` are rejected by the verifier."""
    return 1 << (2 * e)


@dataclass(frozen=True)
class MboundChallenge:
    nonce: bytes
    e: int
    l: int
    max_trials: int | None = None

    def __post_init__(self):
        if len(self.nonce) != NONCE_LEN:
            raise ValueError(f"nonce must be {NONCE_LEN} bytes")
        if not 0 <= self.e <= MAX_E:
            raise ValueError(f"e must be in [0, {MAX_E}], got {self.e}")
        if self.l < 1:
            raise ValueError("path length l must be >= 1")
        if self.max_trials is None:
            object.__setattr__(self, "max_trials", rejection_bound(self.e))
        if not 1 <= self.max_trials < 1 << 64:
            raise ValueError("max_trials must be a positive 64-bit integer")

    def with_max_trials(self, max_trials: int) -> "MboundChallenge":
        return MboundChallenge(self.nonce, self.e, self.l, max_trials)

    def to_bytes(self) -> bytes:
        return self.nonce + struct.pack("<BIQ", self.e, self.l, self.max_trials)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MboundChallenge":
        if len(data) != CHALLENGE_LEN:
            raise ValueError(f"mbound challenge must be {CHALLENGE_LEN} bytes, got {len(data)}")
        e, l, max_trials = struct.unpack_from("<BIQ", data, NONCE_LEN)
        return cls(bytes(data[:NONCE_LEN]), e, l, max_trials)


@dataclass(frozen=True)
class MboundProof:
    index: int
    # generator-side bookkeeping; never serialized
    trials_used: int = 0

    def to_bytes(self) -> bytes:
        return struct.pack("<Q", self.index)

    @classmethod
    def from_bytes(cls, data: bytes) -> "MboundProof":
        if len(data) != PROOF_LEN:
            raise ValueError(f"mbound proof must be {PROOF_LEN} bytes, got {len(data)}")
        return cls(struct.unpack("<Q", data)[0])


@dataclass(frozen=True)
class Exhausted:
    trials_attempted: int


def generate(table: PublicTable, ch: MboundChallenge) -> MboundProof | Exhausted:
    """Honest generator: the minimum s < max_trials with enough trailing zeros.

    Walks are evaluated in batches, so a few walks past the winning index may
    be computed; ``trials_used`` counts only walks up to and including it.
    """
    if ch.e == 0:
        return MboundProof(0, 1)
    s = 0
    batch = max(_MIN_BATCH, min(1 << ch.e, _MAX_BATCH))
    while s < ch.max_trials:
        stop = min(s + batch, ch.max_trials)
        values = walk_many(table, ch.nonce, range(s, stop), ch.l)
        hits = np.flatnonzero(has_zeros(values, ch.e))
        if hits.size:
            i = s + int(hits[0])
            return MboundProof(i, i + 1)
        s = stop
        batch = min(batch * 2, _MAX_BATCH)
    return Exhausted(ch.max_trials)


def verify(table: PublicTable, ch: MboundChallenge, proof: MboundProof) -> Verdict:
    if proof.index >= rejection_bound(ch.e):
        return Verdict.TOO_LARGE
    if trailing_zero_count(walk(table, ch.nonce, proof.index, ch.l)) < ch.e:
        return Verdict.BAD_ZEROS
    return Verdict.ACCEPT
