"""Public table T and the deterministic pseudo-random walk over it.

A walk starts from ``A0 = sha256(nonce || s)`` truncated to 64 bits and
performs ``path_len`` steps.  Each step reads one table entry chosen by the
high half of the accumulator and folds it back in::

    idx = (A >> 32) & (table_len - 1)
    A   = mix64(A ^ rotl(A, 23) ^ T[idx])

``mix64`` is the splitmix64 finalizer.  Two code paths are provided: a scalar
walk on Python ints (``walk``) and a numpy walk over many start indices at
once (``walk_many``).  They must agree bit for bit.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MASK64 = (1 << 64) - 1
NONCE_LEN = 16
MIN_TABLE_LEN = 1 << 10
DEFAULT_TABLE_LEN = 1 << 22
ROTATE = 23

TABLE_MAGIC = b"MBFTABLE" + b"\x00" * 7 + b"\x01"
TABLE_HEADER_LEN = 32

_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U64 = np.uint64


def mix64(x: int) -> int:
    """Invertible 64-bit multiply-xorshift round (splitmix64 finalizer)."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def _mix64_np(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64, matching the masked int version
    x = (x ^ (x >> _U64(30))) * _U64(_M1)
    x = (x ^ (x >> _U64(27))) * _U64(_M2)
    return x ^ (x >> _U64(31))


def _check_len(n: int) -> None:
    if n <= 0 or n & (n - 1):
        raise ValueError(f"table length must be a power of two, got {n}")
    if n < MIN_TABLE_LEN:
        raise ValueError(f"table length must be at least 2^10, got {n}")


class PublicTable:
    """Immutable table of 32-bit words derived from a 64-bit seed."""

    def __init__(self, seed: int, entries: np.ndarray):
        _check_len(len(entries))
        self.seed = seed
        self.entries = np.ascontiguousarray(entries, dtype=np.uint32)
        self.entries.flags.writeable = False
        self.mask = len(self.entries) - 1
        self._list: list[int] | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PublicTable):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"PublicTable(seed={self.seed}, len={len(self)})"

    def fetch(self, idx: int) -> int:
        if self._list is None:
            self._list = self.entries.tolist()
        return self._list[idx]

    def gather(self, idx: np.ndarray) -> np.ndarray:
        return self.entries[idx]

    # -- persistence -------------------------------------------------------

    def to_bytes(self) -> bytes:
        header = TABLE_MAGIC + struct.pack("<QQ", self.seed, len(self))
        return header + self.entries.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicTable":
        if len(data) < TABLE_HEADER_LEN or data[:16] != TABLE_MAGIC:
            raise ValueError("not a table file (bad magic)")
        seed, n = struct.unpack_from("<QQ", data, 16)
        _check_len(n)
        body = data[TABLE_HEADER_LEN:]
        if len(body) != 4 * n:
            raise ValueError(f"table file truncated: expected {4 * n} entry bytes, got {len(body)}")
        return cls(seed, np.frombuffer(body, dtype="<u4").astype(np.uint32))

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "PublicTable":
        return cls.from_bytes(Path(path).read_bytes())


class CountingTable(PublicTable):
    """A table that counts every entry fetch.  Used to audit access costs."""

    def __init__(self, table: PublicTable):
        super().__init__(table.seed, table.entries)
        self.accesses = 0

    def fetch(self, idx: int) -> int:
        self.accesses += 1
        return super().fetch(idx)

    def gather(self, idx: np.ndarray) -> np.ndarray:
        self.accesses += int(np.size(idx))
        return super().gather(idx)


def build_table(seed: int, n: int = DEFAULT_TABLE_LEN) -> PublicTable:
    """Counter-mode expansion of ``seed``: entry j is the high word of
    ``mix64(mix64(seed) + (j + 1) * golden)``."""
    _check_len(n)
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    key = _U64(mix64(seed))
    counters = np.arange(1, n + 1, dtype=np.uint64)
    words = _mix64_np(key + counters * _U64(_GOLDEN))
    return PublicTable(seed, (words >> _U64(32)).astype(np.uint32))


@dataclass(frozen=True)
class WalkParams:
    path_len: int
    table_len: int

    def __post_init__(self):
        if self.path_len < 1:
            raise ValueError("path_len must be >= 1")
        _check_len(self.table_len)


def _nonce_hasher(nonce: bytes):
    if len(nonce) != NONCE_LEN:
        raise ValueError(f"nonce must be {NONCE_LEN} bytes, got {len(nonce)}")
    return hashlib.sha256(nonce)


def initial_value(nonce: bytes, start: int) -> int:
    h = _nonce_hasher(nonce)
    h.update(start.to_bytes(8, "little"))
    return int.from_bytes(h.digest()[:8], "little")


def initial_values(nonce: bytes, starts) -> np.ndarray:
    base = _nonce_hasher(nonce)
    out = []
    for s in starts:
        h = base.copy()
        h.update(int(s).to_bytes(8, "little"))
        out.append(h.digest()[:8])
    return np.frombuffer(b"".join(out), dtype="<u8").astype(np.uint64)


def _step(a: int, entry: int) -> int:
    rot = ((a << ROTATE) | (a >> (64 - ROTATE))) & MASK64
    return mix64(a ^ rot ^ entry)


def walk(table: PublicTable, nonce: bytes, start: int, params: WalkParams | int) -> int:
    """Run one walk and return the final 64-bit accumulator."""
    path_len = params.path_len if isinstance(params, WalkParams) else int(params)
    if path_len < 1:
        raise ValueError("path_len must be >= 1")
    a = initial_value(nonce, start)
    mask = table.mask
    fetch = table.fetch
    for _ in range(path_len):
        a = _step(a, fetch((a >> 32) & mask))
    return a


def walk_many(table: PublicTable, nonce: bytes, starts, path_len: int) -> np.ndarray:
    """Vectorised ``walk`` over an array of start indices."""
    if path_len < 1:
        raise ValueError("path_len must be >= 1")
    a = initial_values(nonce, starts)
    mask = _U64(table.mask)
    rot_l, rot_r = _U64(ROTATE), _U64(64 - ROTATE)
    for _ in range(path_len):
        entry = table.gather((a >> _U64(32)) & mask).astype(np.uint64)
        a = _mix64_np(a ^ ((a << rot_l) | (a >> rot_r)) ^ entry)
    return a


def trailing_zero_count(v: int) -> int:
    v &= MASK64
    if v == 0:
        return 64
    return (v & -v).bit_length() - 1


def trailing_zeros_np(v: np.ndarray) -> np.ndarray:
    """Elementwise trailing zero count of a uint64 array (64 for zero)."""
    v = np.asarray(v, dtype=np.uint64)
    low = v & (~v + _U64(1))
    out = np.full(v.shape, 64, dtype=np.int64)
    nz = low != 0
    # low is an exact power of two, so log2 of its float is exact
    out[nz] = np.log2(low[nz].astype(np.float64)).astype(np.int64)
    return out


def has_zeros(v: np.ndarray, zeros: int) -> np.ndarray:
    """Mask of values whose low ``zeros`` bits are all zero."""
    if zeros >= 64:
        return np.asarray(v, dtype=np.uint64) == 0
    return (np.asarray(v, dtype=np.uint64) & _U64((1 << zeros) - 1)) == 0
