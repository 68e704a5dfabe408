"""Exit criteria. Each test prints one PASS/FAIL line via the ``report`` fixture."""

import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import degrees_of, random_digraph
from seqdigraph.counting import enumerate_exact, estimate_count
from seqdigraph.degrees import DegreeSequence
from seqdigraph.graph import Digraph
from seqdigraph.psi import (
    compute_psi_exact,
    expected_components,
    monte_carlo_components,
    scaled_denominator_bruteforce,
)
from seqdigraph.sampler import sample_reference, step_probability
from seqdigraph.state import BOUND_STATS, FAILURE_STATS, SamplerState
from seqdigraph.stats import (
    bench_runtime,
    failure_rate,
    measure_uniformity,
    regular_family,
    tally_rejection,
    tally_samples,
    tv_between,
    tv_to_uniform,
    graph_key,
)

pytestmark = pytest.mark.acceptance

ONES4 = DegreeSequence.regular(4, 1)
FURTHER = {
    "2-regular n=4": DegreeSequence.regular(4, 2),
    "mixed n=4": DegreeSequence.from_in_out([(1, 2), (2, 1), (1, 1), (1, 1)]),
    "star n=5": DegreeSequence.from_in_out([(0, 2), (1, 1), (1, 1), (1, 0), (1, 0)]),
    "isolated n=5": DegreeSequence.from_in_out([(1, 2), (2, 1), (1, 1), (1, 1), (0, 0)]),
}
COUNT_INSTANCES = {
    "single edge": DegreeSequence.from_in_out([(0, 1), (1, 0)]),
    "ones3": DegreeSequence.regular(3, 1),
    "ones4": ONES4,
    **FURTHER,
    "ones5": DegreeSequence.regular(5, 1),
    "mixed n=5": DegreeSequence.from_in_out([(2, 1), (1, 2), (1, 1), (1, 1), (1, 1)]),
}


def _in_contract_sequence(rng, n_max=12):
    """Degrees of a random simple digraph with every acceptance weight positive."""
    while True:
        n = int(rng.integers(2, n_max + 1))
        edges = random_digraph(rng, n, float(rng.uniform(0.1, 0.5)))
        d = degrees_of(n, edges)
        if d.m and d.max_weight_product < 2 * d.m:
            return d


def test_criterion_1_exact_accounting(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    trajectories = steps = mismatches = bad_sums = 0
    while trajectories < 1000:
        d = _in_contract_sequence(rng)
        state = SamplerState(d)
        while True:
            steps += 1
            denom = state.scaled_denominator
            if denom != scaled_denominator_bruteforce(state):
                mismatches += 1
            if compute_psi_exact(state).scaled_denominator != denom:
                mismatches += 1
            if denom <= 0:
                break
            pairs = [(u, v) for u in range(d.n) for v in range(d.n) if state.admissible(u, v)]
            probs = [step_probability(state, u, v) for u, v in pairs]
            if sum(probs, Fraction(0)) != 1:
                bad_sums += 1
            weights = np.array([float(p) for p in probs])
            u, v = pairs[rng.choice(len(pairs), p=weights / weights.sum())]
            state.add_edge(u, v)
        trajectories += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and bad_sums == 0 and elapsed < 60
    report(1, ok, f"{trajectories} trajectories, {steps} states, {mismatches} denominator "
                  f"mismatches, {bad_sums} bad probability sums, {elapsed:.1f}s")
    assert ok


def _uniformity_line(name, d, seed):
    rep = measure_uniformity(d, 10**5, seed)
    ok = rep.tv_distance < 0.05 and rep.baseline_tv < 0.01 and rep.out_of_support == 0
    return ok, (f"{name}: support {rep.support_size}, tv {rep.tv_distance:.4f}, "
                f"baseline {rep.baseline_tv:.4f}")


def test_criterion_2_uniformity(report):
    t0 = time.perf_counter()
    assert enumerate_exact(ONES4)[0] == 9
    results = [_uniformity_line("ones4", ONES4, 202)]
    for k, (name, d) in enumerate(FURTHER.items()):
        results.append(_uniformity_line(name, d, 203 + k))
    elapsed = time.perf_counter() - t0
    ok = all(r for r, _ in results) and elapsed < 300
    report(2, ok, "; ".join(line for _, line in results) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_3_count_estimator(report):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for k, (name, d) in enumerate(COUNT_INSTANCES.items()):
        exact = enumerate_exact(d)[0]
        est = estimate_count(d, 300 + k, num_samples=10**5)
        z = abs(est.mean_N - exact) / est.standard_error if est.standard_error else (
            0.0 if est.mean_N == exact else np.inf)
        ok &= z <= 3
        parts.append(f"{name}: exact {exact}, mean {est.mean_N:.4f} +- {est.standard_error:.4f}")
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < 300
    report(3, ok, "; ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


def test_criterion_4_expectation_formulas(report):
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    checked = worst = 0.0
    failures = []
    for t in range(20):
        n = int(rng.integers(3, 11))
        while True:
            edges = random_digraph(rng, n, float(rng.uniform(0.2, 0.6)))
            if len(edges) >= 2:
                break
        d = degrees_of(n, edges)
        g = Digraph(n, edges)
        r = int(rng.integers(0, d.m + 1))
        exact = expected_components(d, g, r).as_floats()
        mc = monte_carlo_components(d, g, r, 10**6, rng)
        for name, (mean, se) in mc.items():
            checked += 1
            if se == 0:
                good = abs(mean - exact[name]) <= 1e-9 * max(1.0, abs(exact[name]))
                z = 0.0 if good else np.inf
            else:
                z = abs(mean - exact[name]) / se
            worst = max(worst, z)
            if z > 3:
                failures.append(f"triple {t} {name} z={z:.2f}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 600
    report(4, ok, f"{int(checked)} comparisons on 20 triples, max |z| {worst:.2f}, "
                  f"{elapsed:.0f}s" + (f"; {failures}" if failures else ""))
    assert ok


def test_criterion_5_failure_behavior(report):
    ones3 = failure_rate(DegreeSequence.regular(3, 1), 10**5, 505)
    within = abs(ones3.failure_rate - 1 / 3) <= 3 * np.sqrt((1 / 3) * (2 / 3) / 10**5)
    rates = [failure_rate(DegreeSequence.regular(n, 1), 10**4, 506 + n).failure_rate
             for n in (10, 20, 40)]
    monotone = rates[0] > rates[1] > rates[2]
    ok = bool(within and monotone)
    report(5, ok, f"ones3 rate {ones3.failure_rate:.4f} (1/3 +- 3 sigma: {within}); "
                  f"n=10,20,40 rates {rates[0]:.4f} > {rates[1]:.4f} > {rates[2]:.4f}: {monotone}")
    assert ok


def test_criterion_6_runtime_scaling(report):
    t0 = time.perf_counter()
    table = bench_runtime(regular_family(3), [10**3, 10**4, 10**5], repeats=7, seed=606)
    elapsed = time.perf_counter() - t0
    ok = 0.8 <= table.slope <= 1.3 and elapsed < 600
    times = ", ".join(f"n={r['n']}: {r['median_s'] * 1e3:.2f}ms" for r in table.rows)
    report(6, ok, f"slope {table.slope:.3f} in [0.8, 1.3]; {times}; {elapsed:.0f}s")
    assert ok


def test_criterion_8_reference_agreement(report):
    fast, _ = tally_samples(ONES4, 10**5, 808)
    ref, _ = tally_samples(ONES4, 10**5, 809, sampler=sample_reference)
    support = [graph_key(g) for g in enumerate_exact(ONES4, return_graphs=True)[1]]
    noise = tv_to_uniform(tally_rejection(ONES4, 10**5, 810), support)
    tv = tv_between(fast, ref)
    ok = tv < 0.01 + 2 * noise
    report(8, ok, f"TV(fast, reference) {tv:.4f} < 0.01 + 2 * {noise:.4f}")
    assert ok


@pytest.mark.suite_wide
def test_criterion_5_failure_gaps_suite_wide(report):
    ok = FAILURE_STATS["gap_violations"] == 0 and FAILURE_STATS["failures"] > 0
    report(5, ok, f"suite-wide: {FAILURE_STATS['failures']} failures, "
                  f"{FAILURE_STATS['gap_violations']} with m - s > d_max^2, "
                  f"max (m-s)/d_max^2 = {FAILURE_STATS['max_gap_ratio']:.3f}")
    assert ok


@pytest.mark.suite_wide
def test_criterion_7_bounds_suite_wide(report):
    ok = BOUND_STATS["violations"] == 0 and BOUND_STATS["states"] > 0
    report(7, ok, f"{BOUND_STATS['states']} states checked, {BOUND_STATS['violations']} violations")
    assert ok
