"""Counting simple digraphs with a given degree sequence.

``estimate_count`` averages the sampler's importance weights
``N = 1 / (m! P)``. ``asymptotic_count`` evaluates the closed-form
approximation. ``enumerate_exact`` and ``sample_configuration_rejection``
are exact oracles for small instances.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .degrees import DegreeSequence
from .errors import AllRunsFailed, BudgetExceeded, NotDigraphical, RejectionBudgetExceeded
from .graph import Digraph
from .parallel import map_runs
from .rng import as_generator, fresh_seed, run_stream
from .sampler import sample_fast

DEFAULT_ENUM_BUDGET = 10**7
DEFAULT_REJECTION_DRAWS = 10**6


@dataclass(frozen=True)
class CountEstimate:
    """Mean of ``N`` over all runs, failed runs contributing zero.

    ``standard_error`` is the jackknife standard error of the mean and
    ``log_standard_error`` its logarithm (``-inf`` when zero), kept so that
    instances whose counts overflow a float still report a usable spread.
    """

    log_mean_N: float
    standard_error: float
    samples_used: int
    failures: int
    log_standard_error: float = -math.inf

    @property
    def mean_N(self) -> float:
        try:
            return math.exp(self.log_mean_N)
        except OverflowError:
            return math.inf

    def to_record(self) -> dict:
        def finite(x):
            return x if math.isfinite(x) else None

        return {
            "log_mean_N": finite(self.log_mean_N),
            "mean_N": finite(self.mean_N),
            "se": finite(self.standard_error),
            "samples": self.samples_used,
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _log_weight(payload, run_index: int) -> float:
    d, seed = payload
    return sample_fast(d, run_stream(seed, run_index)).log_count_estimate


def collect_log_weights(d: DegreeSequence, num_samples: int, seed: int,
                        jobs: int = 1) -> np.ndarray:
    """``log N`` of runs ``0..num_samples-1`` (``-inf`` for failures).

    Run ``k`` always uses the stream derived from ``(seed, k)``, so the
    result does not depend on ``jobs``.
    """
    vals = map_runs(_log_weight, (d, seed), num_samples, jobs)
    return np.asarray(vals, dtype=np.float64)


def summarize_log_weights(log_w: np.ndarray) -> CountEstimate:
    """Mean and jackknife SE of ``exp(log_w)`` computed on a shifted scale."""
    n = len(log_w)
    ok = np.isfinite(log_w)
    failures = int(n - ok.sum())
    if not ok.any():
        raise AllRunsFailed(f"all {n} runs failed")
    shift = float(log_w[ok].max())
    x = np.where(ok, np.exp(np.where(ok, log_w, shift) - shift), 0.0)
    mean = x.mean()
    if n > 1:
        loo = (x.sum() - x) / (n - 1)
        se = math.sqrt((n - 1) / n * float(((loo - loo.mean()) ** 2).sum()))
    else:
        se = 0.0
    log_mean = shift + math.log(mean)
    log_se = shift + math.log(se) if se > 0 else -math.inf
    try:
        se_abs = math.exp(log_se)
    except OverflowError:
        se_abs = math.inf
    return CountEstimate(log_mean, se_abs, n, failures, log_se)


def estimate_count(d: DegreeSequence, rng=None, num_samples: int = 1000,
                   jobs: int = 1) -> CountEstimate:
    """Estimate the number of simple digraphs realizing ``d``.

    ``rng`` is a seed or a Generator; a Generator only supplies the root seed
    for the per-run streams. Failed runs are kept with ``N = 0``, which keeps
    the mean unbiased for the true count.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    if not d.digraphical:
        raise NotDigraphical("degree sequence has no simple realization")
    seed = _root_seed(rng)
    return summarize_log_weights(collect_log_weights(d, num_samples, seed, jobs))


def _root_seed(rng) -> int:
    if rng is None:
        return fresh_seed()
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63))
    return int(rng)


def asymptotic_count(d: DegreeSequence) -> float:
    """Log of the closed-form approximation to the number of realizations.

    ``log[m! / (prod in_i! prod out_i!)]`` plus the correction
    ``-sum in*out/m + sum(in^2+out^2)/2m - sum in^2 sum out^2/4m^2 - 1/2``.
    Only trustworthy when ``d_max**4 < m``; see
    ``DegreeSequence.satisfies_degree_condition``.
    """
    m = d.m
    if m < 1:
        raise ValueError("need at least one edge")
    out_a, in_a = (a.astype(np.float64) for a in d.arrays)
    base = math.lgamma(m + 1) - sum(math.lgamma(x + 1) for x in d.in_degrees) \
        - sum(math.lgamma(x + 1) for x in d.out_degrees)
    s_in2 = float((in_a**2).sum())
    s_out2 = float((out_a**2).sum())
    corr = (-float((in_a * out_a).sum()) / m + (s_in2 + s_out2) / (2 * m)
            - s_in2 * s_out2 / (4 * m * m) - 0.5)
    return base + corr


def enumerate_exact(d: DegreeSequence, budget: int = DEFAULT_ENUM_BUDGET,
                    return_graphs: bool = False,
                    limit: Optional[int] = None) -> tuple[int, Optional[list[Digraph]]]:
    """Count every simple digraph realizing ``d`` by backtracking.

    Sources are processed in descending total degree; each picks its
    out-neighbours as a combination of vertices with residual in-degree. A
    branch is cut as soon as some residual in-degree exceeds the number of
    later sources that could still feed it. ``budget`` caps the number of
    combinations tried; ``limit`` stops the search once that many graphs
    are found (``limit=1`` is an existence test).
    """
    n = d.n
    out_d, in_d = d.out_degrees, d.in_degrees
    if sum(out_d) == 0:
        return 1, ([Digraph(n, ())] if return_graphs else None)
    sources = sorted((v for v in range(n) if out_d[v]),
                     key=lambda v: (-(out_d[v] + in_d[v]), v))
    # feeders[p][j]: sources at positions >= p other than j
    k = len(sources)
    feeders = [[0] * n for _ in range(k + 1)]
    for p in range(k - 1, -1, -1):
        row = feeders[p + 1][:]
        s = sources[p]
        for j in range(n):
            if j != s:
                row[j] += 1
        feeders[p] = row

    res_in = list(in_d)
    chosen: list[tuple[int, ...]] = [()] * k
    graphs: list[Digraph] = []
    count = 0
    spent = 0

    def place(p: int) -> None:
        nonlocal count, spent
        if limit is not None and count >= limit:
            return
        if p == k:
            if any(res_in):
                return
            count += 1
            if return_graphs:
                edges = sorted((sources[q], v) for q in range(k) for v in chosen[q])
                graphs.append(Digraph(n, edges))
            return
        i = sources[p]
        targets = [j for j in range(n) if j != i and res_in[j]]
        after = feeders[p + 1]
        for combo in combinations(targets, out_d[i]):
            spent += 1
            if spent > budget:
                raise BudgetExceeded(f"enumeration budget of {budget} exhausted")
            for j in combo:
                res_in[j] -= 1
            if all(res_in[j] <= after[j] for j in range(n)):
                chosen[p] = combo
                place(p + 1)
            for j in combo:
                res_in[j] += 1

    place(0)
    if return_graphs:
        graphs.sort(key=Digraph.canonical)
        return count, graphs
    return count, None


def sample_configuration_rejection(d: DegreeSequence, rng=None,
                                   max_draws: int = DEFAULT_REJECTION_DRAWS) -> Digraph:
    """Exactly uniform sample: redraw random stub matchings until simple."""
    gen = as_generator(rng)
    out_stubs = np.repeat(np.arange(d.n), d.out_degrees)
    in_stubs = np.repeat(np.arange(d.n), d.in_degrees)
    if len(out_stubs) == 0:
        return Digraph(d.n, ())
    for _ in range(max_draws):
        heads = gen.permutation(in_stubs)
        if np.any(out_stubs == heads):
            continue
        codes = out_stubs * d.n + heads
        if len(np.unique(codes)) < len(codes):
            continue
        return Digraph(d.n, np.column_stack((out_stubs, heads)))
    raise RejectionBudgetExceeded(f"no simple matching in {max_draws} draws")


def rejection_codes(d: DegreeSequence, count: int, rng=None,
                    max_draws: int = DEFAULT_REJECTION_DRAWS) -> np.ndarray:
    """Vectorized rejection sampling returning sorted edge codes ``u*n + v``.

    Row ``k`` encodes one accepted graph; rows of equal graphs are equal.
    ``max_draws`` bounds the draws spent before the first acceptance.
    """
    gen = as_generator(rng)
    n = d.n
    out_stubs = np.repeat(np.arange(n), d.out_degrees)
    in_stubs = np.repeat(np.arange(n), d.in_degrees)
    m = len(out_stubs)
    accepted = []
    have = 0
    drawn = 0
    while have < count:
        if have == 0 and drawn >= max_draws:
            raise RejectionBudgetExceeded(f"no simple matching in {drawn} draws")
        batch = min(max(2 * (count - have), 1024), 1 << 16)
        heads = gen.permuted(np.broadcast_to(in_stubs, (batch, m)), axis=1)
        drawn += batch
        codes = np.sort(out_stubs * n + heads, axis=1)
        simple = ~np.any(heads == out_stubs, axis=1)
        if m > 1:
            simple &= ~np.any(codes[:, 1:] == codes[:, :-1], axis=1)
        good = codes[simple]
        accepted.append(good[: count - have])
        have += len(accepted[-1])
    return np.concatenate(accepted) if accepted else np.zeros((0, m), dtype=np.int64)
