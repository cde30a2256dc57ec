"""Trial-count distribution of the MBound search.

Each walk succeeds independently with probability ``p = 2^-e``, so the number
of trials X is geometric.  ``trial_distribution`` reproduces the original
histogram program step for step (including its convention that the first try
already carries a ``(1 - p)`` factor); the closed forms further down use the
plain geometric law ``P(X = i) = p (1 - p)^(i - 1)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

MIN_E, MAX_E = 1, 24
EXTRA_BINS = 8
_CHUNK = 1 << 20

SUMMARY_QUANTILES = (0.001, 0.25, 0.5, 0.75, 0.999)
SUMMARY_MULTIPLES = (2, 4)


def _check_e(e: int) -> None:
    if not MIN_E <= e <= MAX_E:
        raise ValueError(f"e must be in [{MIN_E}, {MAX_E}], got {e}")


def bin_of(i: int) -> int:
    """floor(log2 i) for i >= 1."""
    return abs(i).bit_length() - 1


@dataclass
class TrialHistogram:
    e: int
    p: float
    max_tries: int
    bins_tries: list[float]
    bins_cost: list[float]
    total_cost: float
    # raw per-bin sums before scaling to percent
    raw_tries: list[float] = field(repr=False, default_factory=list)
    raw_cost: list[float] = field(repr=False, default_factory=list)


def trial_distribution(e: int) -> TrialHistogram:
    """Binned distribution of trials and of cost, as percentages.

    Replays the loop ``for i in 1..max_tries-1: prob *= 1-p; here = p*prob;
    tries[bin(i)] += here; cost[bin(i)] += i*here`` with identical operation
    order.  numpy's cumprod and cumsum are strictly sequential, so seeding each
    chunk with the running value reproduces the scalar loop bit for bit.
    """
    _check_e(e)
    p = 1.0 / (1 << e)
    q = 1.0 - p
    max_tries = 1 << (e + EXTRA_BINS)
    nbins = e + EXTRA_BINS
    tries = [0.0] * nbins
    cost = [0.0] * nbins
    total = 0.0
    prob_so_far = 1.0

    for b in range(nbins):
        lo, hi = 1 << b, min(1 << (b + 1), max_tries)
        for a in range(lo, hi, _CHUNK):
            c_hi = min(a + _CHUNK, hi)
            n = c_hi - a
            factors = np.full(n, q)
            factors[0] = prob_so_far * q
            prob = np.cumprod(factors)
            prob_so_far = float(prob[-1])
            here = p * prob
            c = np.arange(a, c_hi, dtype=np.float64) * here

            here[0] += tries[b]
            tries[b] = float(np.cumsum(here)[-1])
            cc = c.copy()
            cc[0] += cost[b]
            cost[b] = float(np.cumsum(cc)[-1])
            c[0] += total
            total = float(np.cumsum(c)[-1])

    return TrialHistogram(
        e=e, p=p, max_tries=max_tries,
        bins_tries=[t * 100 for t in tries],
        bins_cost=[(100 * c) / total for c in cost],
        total_cost=total,
        raw_tries=tries, raw_cost=cost,
    )


# -- closed forms (plain geometric) -------------------------------------------

def cdf(e: int, n: int) -> float:
    """P(X <= n)."""
    if n <= 0:
        return 0.0
    return -math.expm1(n * math.log1p(-(2.0 ** -e)))


def quantile(e: int, q: float) -> int:
    """Smallest n with P(X <= n) >= q."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must be in (0, 1), got {q}")
    n = max(1, math.ceil(math.log1p(-q) / math.log1p(-(2.0 ** -e))))
    # guard against rounding in the log ratio
    while n > 1 and cdf(e, n - 1) >= q:
        n -= 1
    while cdf(e, n) < q:
        n += 1
    return n


def tail_cost_fraction(e: int, multiple: float) -> float:
    """Share of total cost carried by searches needing more than
    ``multiple * 2^e`` trials, by direct summation over 1..2^(e+8)-1."""
    if multiple <= 0:
        raise ValueError("multiple must be positive")
    p = 2.0 ** -e
    log_q = math.log1p(-p)
    cut = math.floor(multiple * (1 << e))
    stop = 1 << (e + EXTRA_BINS)
    above = total = 0.0
    for a in range(1, stop, _CHUNK):
        i = np.arange(a, min(a + _CHUNK, stop), dtype=np.float64)
        w = i * p * np.exp((i - 1) * log_q)
        total += w.sum()
        above += w[i > cut].sum()
    return above / total


@dataclass
class AbortReport:
    e: int
    threshold: int
    delivery_rate: float
    cost_per_attempt: float
    cost_per_delivered: float
    mc_samples: int = 0
    mc_delivery_rate: float | None = None
    mc_cost_per_attempt: float | None = None
    mc_cost_per_delivered: float | None = None
    mc_cost_per_delivered_se: float | None = None


def abort_analysis(e: int, threshold: int, monte_carlo: int = 0, seed: int = 0) -> AbortReport:
    """Cost of a searcher that gives up after ``threshold`` trials.

    Expected spend per attempt is E[min(X, t)] = (1 - (1-p)^t) / p, and the
    success rate is 1 - (1-p)^t, so cost per delivered proof is exactly 1/p
    whatever the threshold.  ``monte_carlo`` > 0 adds a simulated check.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    p = 2.0 ** -e
    rate = -math.expm1(threshold * math.log1p(-p))
    per_attempt = rate / p
    report = AbortReport(e, threshold, rate, per_attempt, per_attempt / rate)
    if monte_carlo:
        x = np.random.default_rng(seed).geometric(p, size=monte_carlo)
        spent = np.minimum(x, threshold).astype(np.float64)
        ok = (x <= threshold).astype(np.float64)
        report.mc_samples = monte_carlo
        report.mc_delivery_rate = float(ok.mean())
        report.mc_cost_per_attempt = float(spent.mean())
        if ok.sum():
            r, se = ratio_estimate(spent, ok)
            report.mc_cost_per_delivered = r
            report.mc_cost_per_delivered_se = se
    return report


def ratio_estimate(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """sum(num)/sum(den) with its delta-method standard error."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    n = len(num)
    r = num.sum() / den.sum()
    resid = num - r * den
    se = math.sqrt(resid.var(ddof=1) / n) / den.mean() if n > 1 else math.inf
    return float(r), float(se)


# -- output files ---------------------------------------------------------------

def format_percent(x: float) -> str:
    return f"{x:.2f}"


def emit_histogram_files(h: TrialHistogram, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``e{e}/tries.dat`` and ``e{e}/cost.dat`` (``bin<TAB>percent``)."""
    d = Path(out_dir) / f"e{h.e}"
    d.mkdir(parents=True, exist_ok=True)
    tries_path, cost_path = d / "tries.dat", d / "cost.dat"
    tries_path.write_text("".join(f"{b}\t{format_percent(v)}\n" for b, v in enumerate(h.bins_tries)))
    cost_path.write_text("".join(f"{b}\t{format_percent(v)}\n" for b, v in enumerate(h.bins_cost)))
    return tries_path, cost_path


# Statements about e = 15 that the geometric model does not bear out.
_E15_NOTES = [
    "discrepancy: the published figure of over 63% of searches ending below 16384 trials does not "
    "hold; the model gives P(X <= 16384) = {p16k:.1%}, and 63.2% is P(X <= 32768) = {p32k:.1%}",
    "discrepancy: the published median range 8192..16384 does not hold; the model median is {median}",
]


def summarize(h: TrialHistogram) -> dict:
    e = h.e
    mean = 1 << e
    out = {
        "e": e,
        "p": h.p,
        "max_tries": h.max_tries,
        "total_cost": h.total_cost,
        "total_cost_over_mean": h.total_cost / mean,
        "bins": [
            {"bin": b, "trials_from": 1 << b, "trials_to": (1 << (b + 1)) - 1,
             "tries_percent": t, "cost_percent": c}
            for b, (t, c) in enumerate(zip(h.bins_tries, h.bins_cost))
        ],
        "quantiles": {str(q): quantile(e, q) for q in SUMMARY_QUANTILES},
        "tail_cost_fraction": {f"{m}x": tail_cost_fraction(e, m) for m in SUMMARY_MULTIPLES},
        "cdf": {str(n): cdf(e, n) for n in (32, mean // 8, mean // 2, mean)},
        "notes": [],
    }
    if e == 15:
        vals = {"p16k": cdf(e, 16384), "p32k": cdf(e, 32768), "median": quantile(e, 0.5)}
        out["notes"] = [n.format(**vals) for n in _E15_NOTES]
    return out


def write_summary(summary: dict, out_dir: str | Path) -> Path:
    """Write the output of ``summarize`` to ``e{e}/summary.json``."""
    path = Path(out_dir) / f"e{summary['e']}" / "summary.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2) + "\n")
    return path


def report_dict(r: AbortReport) -> dict:
    return asdict(r)
