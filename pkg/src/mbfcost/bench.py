"""Rough per-access latency of dependent random table reads.

Informational only: numbers depend on the machine and on numpy overheads,
and nothing in the test suite asserts on them.
"""
from __future__ import annotations

import time

import numpy as np

from .walk_core import MIN_TABLE_LEN, build_table


def access_latency(max_log2: int = 26, accesses: int = 1 << 20, seed: int = 1, batch: int = 64):
    """Yield ``(table_len, ns_per_access)`` for table sizes 2^10 .. 2^max_log2.

    ``batch`` independent pointer chases run side by side so the numpy call
    overhead is amortised; each chase is serially dependent on its last read.
    """
    n = MIN_TABLE_LEN
    while n <= 1 << max_log2:
        table = build_table(seed, n)
        entries = table.entries.astype(np.int64)
        mask = n - 1
        pos = np.arange(batch, dtype=np.int64) * 7919 & mask
        steps = max(1, accesses // batch)
        t0 = time.perf_counter()
        for _ in range(steps):
            pos = (entries[pos] + pos) & mask
        dt = time.perf_counter() - t0
        yield n, dt / (steps * batch) * 1e9
        n <<= 2
