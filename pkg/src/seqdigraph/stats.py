"""Experiment harness: uniformity, failure probability and runtime scaling.

All thresholds used with these reports are harness calibrations; nothing
here estimates asymptotic constants.
"""

from __future__ import annotations

import gc
import json
import math
import statistics
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats as sps

from .counting import DEFAULT_ENUM_BUDGET, enumerate_exact, rejection_codes
from .degrees import DegreeSequence
from .graph import Digraph
from .parallel import map_runs
from .rng import fresh_seed, run_stream
from .sampler import DEFAULT_MAX_RETRIES, run_with_retries, sample_fast, sample_reference

SCHEMA_VERSION = 1


def graph_key(g: Digraph) -> tuple[int, ...]:
    """Canonical key: sorted edge codes ``u * n + v``."""
    a = g.array
    return tuple(sorted((a[:, 0] * g.n + a[:, 1]).tolist()))


def _root_seed(rng) -> int:
    if rng is None:
        return fresh_seed()
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return int(rng)


@dataclass
class UniformityReport:
    support_size: int
    samples: int
    tv_distance: float
    chi_square_stat: float
    p_value: float
    min_freq: float
    max_freq: float
    baseline_tv: float
    missing: list = field(default_factory=list)
    out_of_support: int = 0
    attempts: int = 0
    seed: Optional[int] = None

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["missing"] = [list(k) for k in self.missing]
        rec["schema_version"] = SCHEMA_VERSION
        rec["thresholds"] = "harness calibration"
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


@dataclass
class FailureReport:
    trials: int
    failures: int
    failure_rate: float
    rate_se: float
    mean_failure_step: Optional[float]
    max_gap: int
    gap_bound: int
    failure_steps: list = field(default_factory=list, repr=False)
    seed: Optional[int] = None

    def to_record(self) -> dict:
        rec = asdict(self)
        del rec["failure_steps"]
        rec["schema_version"] = SCHEMA_VERSION
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def tv_to_uniform(counts: Counter, support: list) -> float:
    """Total variation between the empirical law and uniform on ``support``.

    Mass outside the support counts fully toward the distance.
    """
    total = sum(counts.values())
    k = len(support)
    inside = set(support)
    tv = sum(abs(counts.get(s, 0) / total - 1 / k) for s in support)
    tv += sum(c / total for key, c in counts.items() if key not in inside)
    return tv / 2


def tv_between(a: Counter, b: Counter) -> float:
    na, nb = sum(a.values()), sum(b.values())
    keys = set(a) | set(b)
    return sum(abs(a.get(k, 0) / na - b.get(k, 0) / nb) for k in keys) / 2


def _draw_key(payload, run_index: int):
    d, seed, sampler, max_retries = payload
    out = run_with_retries(d, run_stream(seed, run_index), max_retries=max_retries,
                           sampler=sampler)
    return graph_key(out.graph), out.retries_used


def tally_samples(d: DegreeSequence, num_samples: int, seed: int,
                  sampler: Callable = sample_fast, max_retries: int = DEFAULT_MAX_RETRIES,
                  jobs: int = 1) -> tuple[Counter, int]:
    """Counts of canonical graph keys over ``num_samples`` retried runs, and total attempts."""
    draws = map_runs(_draw_key, (d, seed, sampler, max_retries), num_samples, jobs)
    return Counter(k for k, _ in draws), sum(r for _, r in draws)


def tally_rejection(d: DegreeSequence, num_samples: int, seed: int) -> Counter:
    codes = rejection_codes(d, num_samples, run_stream(seed, 2**32))
    return Counter(map(tuple, codes.tolist()))


def measure_uniformity(d: DegreeSequence, num_samples: int, rng=None,
                       budget: int = DEFAULT_ENUM_BUDGET, sampler: Callable = sample_fast,
                       max_retries: int = DEFAULT_MAX_RETRIES, jobs: int = 1) -> UniformityReport:
    """Compare sampled frequencies against the enumerated support.

    The rejection sampler is run at the same sample count; its TV distance
    is the noise floor for this instance and sample size.
    """
    seed = _root_seed(rng)
    _, graphs = enumerate_exact(d, budget=budget, return_graphs=True)
    support = [graph_key(g) for g in graphs]
    counts, attempts = tally_samples(d, num_samples, seed, sampler, max_retries, jobs)
    inside = set(support)
    observed = np.array([counts.get(s, 0) for s in support], dtype=np.float64)
    if len(support) > 1:
        chi = sps.chisquare(observed)
        chi_stat, p_value = float(chi.statistic), float(chi.pvalue)
    else:
        chi_stat, p_value = 0.0, 1.0
    baseline = tally_rejection(d, num_samples, seed)
    return UniformityReport(
        support_size=len(support),
        samples=num_samples,
        tv_distance=tv_to_uniform(counts, support),
        chi_square_stat=chi_stat,
        p_value=p_value,
        min_freq=float(observed.min() / num_samples),
        max_freq=float(observed.max() / num_samples),
        baseline_tv=tv_to_uniform(baseline, support),
        missing=[s for s in support if s not in counts],
        out_of_support=sum(c for k, c in counts.items() if k not in inside),
        attempts=attempts,
        seed=seed,
    )


def _attempt(payload, run_index: int):
    d, seed, sampler = payload
    out = sampler(d, run_stream(seed, run_index))
    return out.failure_step


def failure_rate(d: DegreeSequence, trials: int, rng=None, sampler: Callable = sample_fast,
                 jobs: int = 1) -> FailureReport:
    """Single-attempt failure frequency with per-failure gap diagnostics.

    Raises AssertionError if any failure occurs more than ``d_max**2``
    steps before the end.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = _root_seed(rng)
    steps = [s for s in map_runs(_attempt, (d, seed, sampler), trials, jobs) if s is not None]
    bound = d.d_max**2
    gaps = [d.m - s for s in steps]
    bad = [g for g in gaps if g > bound]
    if bad:
        raise AssertionError(f"{len(bad)} failures with m - s > d_max^2 = {bound}: {bad[:5]}")
    rate = len(steps) / trials
    return FailureReport(
        trials=trials,
        failures=len(steps),
        failure_rate=rate,
        rate_se=math.sqrt(rate * (1 - rate) / trials),
        mean_failure_step=statistics.fmean(steps) if steps else None,
        max_gap=max(gaps, default=0),
        gap_bound=bound,
        failure_steps=steps,
        seed=seed,
    )


# --- degree-sequence families -------------------------------------------------

def regular_family(k: int) -> Callable[[int], DegreeSequence]:
    def make(n: int) -> DegreeSequence:
        return DegreeSequence.regular(n, k)

    make.label = f"regular:{k}"
    return make


def heavy_tail_sequence(n: int, exponent: float = 2.5, cap_power: float = 0.2,
                        seed: int = 0) -> DegreeSequence:
    """Power-law-like degrees capped at about ``m**cap_power``.

    Out-degrees are deterministic quantiles ``floor(q**(-1/(exponent-1)))``
    of a Pareto law at ``q = (i + 1/2)/n``, capped at ``c`` where ``c`` is
    iterated to ``round(m**cap_power)``. In-degrees are a seeded random
    permutation of the out-degrees, redrawn until the pair is digraphical
    and every ``out_i * in_j`` stays below ``2m``.
    """
    q = (np.arange(n) + 0.5) / n
    base = np.floor(q ** (-1.0 / (exponent - 1))).astype(np.int64)
    cap = 1
    for _ in range(50):
        outs = np.minimum(base, cap)
        new_cap = max(1, round(int(outs.sum()) ** cap_power))
        if new_cap == cap:
            break
        cap = new_cap
    outs = np.minimum(base, cap)
    gen = np.random.default_rng(seed)
    for _ in range(100):
        ins = gen.permutation(outs)
        d = DegreeSequence(tuple(outs.tolist()), tuple(ins.tolist()))
        if d.max_weight_product < 2 * d.m and d.digraphical:
            return d
    raise ValueError(f"no digraphical heavy-tail arrangement found for n={n}")


def heavy_tail_family(exponent: float = 2.5, cap_power: float = 0.2,
                      seed: int = 0) -> Callable[[int], DegreeSequence]:
    def make(n: int) -> DegreeSequence:
        return heavy_tail_sequence(n, exponent, cap_power, seed)

    make.label = f"heavy:{exponent}"
    return make


def parse_family(text: str) -> Callable[[int], DegreeSequence]:
    """``regular:K`` or ``heavy[:EXPONENT]``."""
    name, _, arg = text.partition(":")
    if name == "regular":
        return regular_family(int(arg or 3))
    if name == "heavy":
        return heavy_tail_family(float(arg or 2.5))
    raise ValueError(f"unknown family {text!r}")


# --- runtime ------------------------------------------------------------------

@dataclass
class BenchTable:
    family: str
    rows: list
    slope: float
    intercept: float

    def to_record(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "family": self.family,
                "rows": self.rows, "slope": self.slope, "intercept": self.intercept}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _median_time(fn, repeats: int) -> float:
    fn(-1)  # warmup
    times = []
    enabled = gc.isenabled()
    gc.disable()
    try:
        for k in range(repeats):
            t0 = time.perf_counter()
            fn(k)
            times.append(time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return statistics.median(times)


def bench_runtime(family, sizes: list, repeats: int = 7, seed: int = 0,
                  backend: Optional[str] = None, reference_sizes: tuple = (),
                  reference_repeats: int = 1) -> BenchTable:
    """Median single-attempt time of ``sample_fast`` per size.

    Fits ``log(time)`` against ``log(m * d_max)``. Sizes listed in
    ``reference_sizes`` also get a ``sample_reference`` timing.
    """
    if isinstance(family, str):
        family = parse_family(family)
    rows = []
    for n in sizes:
        d = family(n)
        d.strip_isolated()

        def fast(k, d=d):
            sample_fast(d, run_stream(seed, k + 1), backend=backend)

        t = _median_time(fast, repeats)
        work = d.m * d.d_max
        row = {"n": n, "m": d.m, "d_max": d.d_max, "work": work,
               "median_s": t, "ratio": t / work}
        if n in reference_sizes:
            def ref(k, d=d):
                sample_reference(d, run_stream(seed, k + 1))

            row["reference_s"] = _median_time(ref, reference_repeats)
            row["fast_over_reference"] = t / row["reference_s"]
        rows.append(row)
    if len(rows) >= 2:
        slope, intercept = np.polyfit(np.log([r["work"] for r in rows]),
                                      np.log([r["median_s"] for r in rows]), 1)
    else:
        slope, intercept = math.nan, math.nan
    return BenchTable(getattr(family, "label", "custom"), rows, float(slope), float(intercept))
