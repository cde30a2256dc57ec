"""Simulated cheating strategies against both proof schemes.

Everything is counted in trials (walks), not seconds.  Each simulated message
draws its nonce from a private generator keyed by ``(rng_seed, message
index)`` so outcomes do not depend on execution order.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import cost_model, mbound
from .mbound import Exhausted, MboundChallenge
from .range_proof import RangeChallenge, generate_range_proof
from .walk_core import NONCE_LEN, PublicTable


class PolicyKind(str, Enum):
    EARLY_ABORT = "early-abort"
    PERTURB_RETRY = "perturb-retry"
    SELECTIVE_FAILURE = "selective-failure"


@dataclass(frozen=True)
class AdversaryPolicy:
    kind: PolicyKind
    abort_threshold: int | None = None
    retry_budget: int = 1
    cheapness_bound: int | None = None

    def __post_init__(self):
        if self.abort_threshold is not None and self.abort_threshold < 1:
            raise ValueError("abort_threshold must be >= 1")
        if self.retry_budget < 1:
            raise ValueError("retry_budget must be >= 1")
        if self.cheapness_bound is not None and self.cheapness_bound < 1:
            raise ValueError("cheapness_bound must be >= 1")


@dataclass
class StrategyOutcome:
    attempts: int = 0
    delivered: int = 0
    total_trials_spent: int = 0
    trials_per_delivered: float = math.nan
    delivery_rate: float = math.nan
    trials_per_delivered_se: float = math.nan
    delivery_rate_se: float = math.nan

    @classmethod
    def from_samples(cls, spent, delivered, attempts: int | None = None) -> "StrategyOutcome":
        """Tally per-unit spend and delivery flags.  ``attempts`` defaults to
        the number of units."""
        spent = np.asarray(spent, dtype=np.float64)
        ok = np.asarray(delivered, dtype=np.float64)
        n = len(spent)
        out = cls(attempts if attempts is not None else n, int(ok.sum()), int(spent.sum()))
        if n:
            out.delivery_rate = float(ok.mean())
            out.delivery_rate_se = float(math.sqrt(out.delivery_rate * (1 - out.delivery_rate) / n))
        if out.delivered:
            out.trials_per_delivered, out.trials_per_delivered_se = cost_model.ratio_estimate(spent, ok)
        return out


def message_nonce(rng_seed: int, stream: int) -> bytes:
    return np.random.default_rng([rng_seed, stream]).bytes(NONCE_LEN)


def perturbed_nonce(base_nonce: bytes, counter: int) -> bytes:
    """Nonce of the ``counter``-th rewording of a message."""
    return hashlib.sha256(base_nonce + counter.to_bytes(8, "little")).digest()[:NONCE_LEN]


@dataclass
class EarlyAbortReport:
    policy: AdversaryPolicy
    e: int
    l: int
    simulated: StrategyOutcome
    closed_form: cost_model.AbortReport
    honest_trials_per_message: float
    # fraction of honest total spend saved, and fraction of deliveries lost
    spend_saving: float = 0.0
    delivery_loss: float = 0.0
    notes: list[str] = field(default_factory=list)


def run_early_abort(table: PublicTable, challenge: MboundChallenge, policy: AdversaryPolicy,
                    n_messages: int, rng_seed: int) -> EarlyAbortReport:
    """Send ``n_messages`` messages, each abandoned after ``abort_threshold``
    trials.  Only the challenge's e and l are used; nonces are per message."""
    if policy.kind is not PolicyKind.EARLY_ABORT or policy.abort_threshold is None:
        raise ValueError("run_early_abort needs an early-abort policy with a threshold")
    tau = policy.abort_threshold
    spent = np.empty(n_messages, dtype=np.int64)
    ok = np.zeros(n_messages, dtype=bool)
    for k in range(n_messages):
        ch = MboundChallenge(message_nonce(rng_seed, k), challenge.e, challenge.l, tau)
        res = mbound.generate(table, ch)
        if isinstance(res, Exhausted):
            spent[k] = res.trials_attempted
        else:
            spent[k] = res.trials_used
            ok[k] = True
    closed = cost_model.abort_analysis(challenge.e, tau)
    honest = float(1 << challenge.e)
    report = EarlyAbortReport(
        policy, challenge.e, challenge.l,
        StrategyOutcome.from_samples(spent, ok), closed, honest,
        spend_saving=1 - closed.cost_per_attempt / honest,
        delivery_loss=1 - closed.delivery_rate,
    )
    report.notes.append(
        f"aborting at {tau} trials saves {report.spend_saving:.1%} of total spend and loses "
        f"{report.delivery_loss:.1%} of deliveries; cost per delivered proof stays 2^{challenge.e} = "
        f"{honest:g} trials because the search is memoryless: early abort does not halve the cost "
        f"of a delivered proof, it only trades deliveries for spend one for one")
    return report


@dataclass
class PerturbRetryReport:
    policy: AdversaryPolicy
    e: int
    l: int
    simulated: StrategyOutcome
    closed_form_trials_per_delivered: float
    closed_form_delivery_rate: float
    # accesses until a proof when every rewording runs on its own hardware
    parallel_latency_accesses: int
    serial_expected_accesses: int


def run_perturb_retry(table: PublicTable, base_nonce: bytes, e: int, l: int,
                      policy: AdversaryPolicy, rng_seed: int, n_messages: int = 1) -> PerturbRetryReport:
    """Reword each message until one wording yields a proof within
    ``cheapness_bound`` trials, giving up after ``retry_budget`` wordings.

    ``attempts`` in the outcome counts wordings tried; delivery rate is per
    message.
    """
    if policy.kind is not PolicyKind.PERTURB_RETRY or policy.cheapness_bound is None:
        raise ValueError("run_perturb_retry needs a perturb-retry policy with a cheapness bound")
    bound = policy.cheapness_bound
    spent = np.zeros(n_messages, dtype=np.int64)
    ok = np.zeros(n_messages, dtype=bool)
    wordings = 0
    for k in range(n_messages):
        msg = hashlib.sha256(base_nonce + message_nonce(rng_seed, k)).digest()[:NONCE_LEN]
        for r in range(policy.retry_budget):
            wordings += 1
            res = mbound.generate(table, MboundChallenge(perturbed_nonce(msg, r), e, l, bound))
            if isinstance(res, Exhausted):
                spent[k] += res.trials_attempted
            else:
                spent[k] += res.trials_used
                ok[k] = True
                break
    out = StrategyOutcome.from_samples(spent, ok)
    out.attempts = wordings
    closed = cost_model.abort_analysis(e, bound)
    return PerturbRetryReport(
        policy, e, l, out,
        closed_form_trials_per_delivered=closed.cost_per_delivered,
        closed_form_delivery_rate=-math.expm1(policy.retry_budget * math.log1p(-closed.delivery_rate))
        if closed.delivery_rate < 1 else 1.0,
        parallel_latency_accesses=min(bound, mbound.rejection_bound(e)) * l,
        serial_expected_accesses=(1 << e) * l,
    )


@dataclass
class SelectiveFailureReport:
    policy: AdversaryPolicy
    mbound: StrategyOutcome | None
    range: StrategyOutcome | None
    mbound_closed_form_delivery_rate: float | None = None
    notes: list[str] = field(default_factory=list)


def run_selective_failure(table: PublicTable, challenges: Sequence[MboundChallenge | RangeChallenge],
                          policy: AdversaryPolicy) -> SelectiveFailureReport:
    """Refuse any challenge that would cost more than ``abort_threshold``
    trials (``None`` means never refuse).

    An MBound search is abandoned once it passes the threshold, after paying
    for it.  A range challenge announces its cost up front, so the adversary
    either pays ``range_len`` in full or declines for free; refused or empty
    range proofs are not delivered.
    """
    if policy.kind is not PolicyKind.SELECTIVE_FAILURE:
        raise ValueError("run_selective_failure needs a selective-failure policy")
    tau = policy.abort_threshold
    mb_spent, mb_ok, rg_spent, rg_ok = [], [], [], []
    e_seen = set()
    for ch in challenges:
        if isinstance(ch, MboundChallenge):
            e_seen.add(ch.e)
            cap = ch.max_trials if tau is None else min(tau, ch.max_trials)
            res = mbound.generate(table, ch.with_max_trials(cap))
            if isinstance(res, Exhausted):
                mb_spent.append(res.trials_attempted)
                mb_ok.append(False)
            else:
                mb_spent.append(res.trials_used)
                mb_ok.append(True)
        else:
            if tau is not None and ch.range_len > tau:
                rg_spent.append(0)
                rg_ok.append(False)
                continue
            proof = generate_range_proof(table, ch)
            rg_spent.append(ch.range_len)
            rg_ok.append(len(proof) > 0)
    report = SelectiveFailureReport(
        policy,
        StrategyOutcome.from_samples(mb_spent, mb_ok) if mb_spent else None,
        StrategyOutcome.from_samples(rg_spent, rg_ok) if rg_spent else None,
    )
    if len(e_seen) == 1 and tau is not None:
        report.mbound_closed_form_delivery_rate = cost_model.abort_analysis(e_seen.pop(), tau).delivery_rate
    elif len(e_seen) == 1:
        report.mbound_closed_form_delivery_rate = 1.0
    report.notes.append(
        "range challenges cost exactly range_len trials when answered and nothing when refused; "
        "no delivered range proof is cheaper than requested")
    return report


def report_dict(report) -> dict:
    def clean(v):
        if isinstance(v, Enum):
            return v.value
        if isinstance(v, float) and math.isnan(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v
    return clean(asdict(report))
