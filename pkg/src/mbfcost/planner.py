"""Deployment arithmetic for both schemes: costs, proof sizes, empty-proof
odds and completion-time windows."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

from . import cost_model
from .range_proof import empty_proof_probability

MAX_E = 24
INDEX_BYTES = 8
COUNT_PREFIX_BYTES = 4
# compact size: 32-bit indices, no count prefix
COMPACT_INDEX_BYTES = 4
DEFAULT_SPEED_RATIO = 5.0
DEFAULT_QUANTILES = (0.05, 0.95)
EMPTY_PROOF_WARN = 1e-3


class Scheme(str, Enum):
    MBOUND = "mbound"
    RANGE = "range"


@dataclass
class SchemePlan:
    scheme: Scheme
    e: int
    l: int
    m: int | None = None
    range_len: int | None = None
    expected_accesses: float = 0.0
    verify_accesses_min: float = 0.0
    verify_accesses_max: float = 0.0
    expected_indices: float = 1.0
    expected_proof_bytes: float = INDEX_BYTES
    compact_proof_bytes: float | None = None
    empty_proof_prob: float | None = None
    empty_proof_prob_literal: float | None = None
    label: str = ""
    warnings: list[str] = field(default_factory=list)

    @property
    def zeros(self) -> int:
        return self.e - (self.m or 0)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["scheme"] = self.scheme.value
        return d


def plan_mbound(e: int, l: int) -> SchemePlan:
    if not 1 <= e <= MAX_E:
        raise ValueError(f"e must be in [1, {MAX_E}], got {e}")
    if l < 1:
        raise ValueError("l must be >= 1")
    return SchemePlan(
        Scheme.MBOUND, e, l,
        expected_accesses=float((1 << e) * l),
        verify_accesses_min=float(l),
        verify_accesses_max=float(l),
        label="mbound",
    )


def literal_empty_probability(e: int, m: int) -> float:
    """``(1 - 2^-m)^(2^e)``, with m in place of the required zero count; underflows to 0 for the
    published parameters."""
    if m == 0:
        return 0.0
    return math.exp((1 << e) * math.log1p(-(2.0 ** -m)))


def plan_range(e: int, m: int, l: int, range_len: int | None = None) -> SchemePlan:
    """Range plan over ``2^e`` indices (or ``range_len``) with ``e - m`` zeros.

    Verification ranges from one sampled walk up to a full replay.
    """
    if not 0 <= m < e <= MAX_E:
        raise ValueError(f"need 0 <= m < e <= {MAX_E}, got m={m}, e={e}")
    if l < 1:
        raise ValueError("l must be >= 1")
    n = range_len if range_len is not None else 1 << e
    zeros = e - m
    hits = n * 2.0 ** -zeros
    plan = SchemePlan(
        Scheme.RANGE, e, l, m=m, range_len=n,
        expected_accesses=float(n * l),
        verify_accesses_min=float(l),
        verify_accesses_max=float(n * l),
        expected_indices=hits,
        expected_proof_bytes=hits * INDEX_BYTES + COUNT_PREFIX_BYTES,
        compact_proof_bytes=hits * COMPACT_INDEX_BYTES,
        empty_proof_prob=empty_proof_probability(n, zeros),
        empty_proof_prob_literal=literal_empty_probability(e, m),
        label="range",
    )
    if plan.empty_proof_prob > EMPTY_PROOF_WARN:
        plan.warnings.append(
            f"empty proofs are common: probability {plan.empty_proof_prob:.3g}; raise m or the range")
    return plan


@dataclass
class RangeEquivalents:
    cost_preserving: SchemePlan
    literal: SchemePlan


def equivalent_range_params(mbound_plan: SchemePlan, m: int) -> RangeEquivalents:
    """Range plans comparable to an MBound plan.

    ``cost_preserving`` keeps the path length, so range_len * l equals the
    MBound expected cost exactly.  ``literal`` halves the path length, matching
    the published choice of 2^15 indices x 2048 steps (2^26 rather than 2^27).
    """
    if mbound_plan.scheme is not Scheme.MBOUND:
        raise ValueError("expected an mbound plan")
    e, l = mbound_plan.e, mbound_plan.l
    same = plan_range(e, m, l)
    same.label = "cost-preserving"
    half = plan_range(e, m, max(1, l // 2))
    half.label = "published"
    return RangeEquivalents(same, half)


@dataclass
class DeadlineWindow:
    access_time_fast: float
    access_time_slow: float
    speed_ratio: float
    q_low: float
    q_high: float
    trials_low: int
    trials_high: int
    earliest: float
    latest: float

    @property
    def width_ratio(self) -> float:
        return self.latest / self.earliest


def deadline_window(plan: SchemePlan, access_time_fast: float,
                    speed_ratio: float = DEFAULT_SPEED_RATIO,
                    q_low: float = DEFAULT_QUANTILES[0],
                    q_high: float = DEFAULT_QUANTILES[1]) -> DeadlineWindow:
    """Completion times from a fast machine at ``q_low`` to a slow one at
    ``q_high``.  A range proof always takes ``range_len`` trials, so only
    the speed ratio remains."""
    if access_time_fast <= 0 or speed_ratio < 1:
        raise ValueError("need access_time_fast > 0 and speed_ratio >= 1")
    if not 0 < q_low <= q_high < 1:
        raise ValueError("need 0 < q_low <= q_high < 1")
    slow = access_time_fast * speed_ratio
    if plan.scheme is Scheme.MBOUND:
        lo, hi = cost_model.quantile(plan.e, q_low), cost_model.quantile(plan.e, q_high)
    else:
        lo = hi = plan.range_len
    return DeadlineWindow(
        access_time_fast, slow, speed_ratio, q_low, q_high, lo, hi,
        earliest=lo * plan.l * access_time_fast,
        latest=hi * plan.l * slow,
    )


def achievable_costs(scheme: Scheme, l_values, e_values=range(1, 11), range_values=range(1, 65)) -> set[int]:
    """Expected access counts reachable on a small parameter grid."""
    if scheme is Scheme.MBOUND:
        return {(1 << e) * l for e in e_values for l in l_values}
    return {r * l for r in range_values for l in l_values}


def plan_report(plans: list[SchemePlan], window: DeadlineWindow | None = None) -> dict:
    out: dict = {"plans": [p.as_dict() for p in plans]}
    if window is not None:
        out["deadline_window"] = asdict(window) | {"width_ratio": window.width_ratio}
    return out
