import math
import warnings
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_realizations, degrees_of, ordering_law, random_digraph
from seqdigraph import sampler
from seqdigraph.counting import enumerate_exact
from seqdigraph.degrees import DegreeSequence
from seqdigraph.errors import BiasWarning, DegreeTooLarge, NotDigraphical, RetriesExhausted
from seqdigraph.rng import run_stream
from seqdigraph.sampler import (
    exact_distribution,
    run_with_retries,
    sample_fast,
    sample_reference,
    step_probability,
)
from seqdigraph.state import SamplerState

ONES3 = DegreeSequence.regular(3, 1)
SINGLE = DegreeSequence.from_in_out([(0, 1), (1, 0)])
# A has out-degree 4, B in-degree 4; out_A * in_B = 16 >= 2m = 14
TOO_LARGE = DegreeSequence((4, 0, 0, 0, 0, 1, 1, 1), (0, 4, 1, 1, 1, 0, 0, 0))


def test_single_edge_deterministic():
    for fn in (sample_reference, sample_fast):
        out = fn(SINGLE, 0)
        assert out.success and out.graph.edges == ((0, 1),)
        assert out.log_prob == 0.0
        assert out.log_count_estimate == 0.0


def test_ones3_outcomes_are_cycles_or_failures():
    cycles = {((0, 1), (1, 2), (2, 0)), ((0, 2), (1, 0), (2, 1))}
    for seed in range(200):
        out = sample_fast(ONES3, seed)
        if out.success:
            assert out.graph.canonical() in cycles
            assert math.exp(out.log_count_estimate) == pytest.approx(3.0)
        else:
            assert out.failure_step == 2
            assert sum(out.residual["residual_out"].values()) == 1


def test_step_probabilities():
    state = SamplerState(ONES3)
    assert step_probability(state, 0, 1) == Fraction(1, 6)
    assert step_probability(state, 0, 0) == 0
    state.add_edge(0, 1)
    state.add_edge(1, 2)
    assert step_probability(state, 2, 0) == 1


def test_step_probabilities_normalize():
    rng = np.random.default_rng(8)
    for _ in range(40):
        n = int(rng.integers(2, 8))
        d = degrees_of(n, random_digraph(rng, n, 0.4))
        state = SamplerState(d)
        while state.remaining:
            pairs = [(u, v) for u in range(n) for v in range(n) if state.admissible(u, v)]
            if not pairs or state.scaled_denominator == 0:
                break
            assert sum(step_probability(state, u, v) for u, v in pairs) == 1
            state.add_edge(*pairs[rng.integers(len(pairs))])


@pytest.mark.skipif(sampler.BACKEND != "cython", reason="compiled kernel not built")
def test_backends_draw_for_draw_identical():
    rng = np.random.default_rng(9)
    seqs = [DegreeSequence.regular(n, k) for n, k in [(30, 3), (200, 2), (50, 5)]]
    seqs += [degrees_of(12, random_digraph(rng, 12, 0.2)) for _ in range(20)]
    for d in seqs:
        if d.max_weight_product >= 2 * d.m:
            continue
        for seed in range(10):
            a = sample_fast(d, seed, backend="cython")
            b = sample_fast(d, seed, backend="python")
            assert a.failure_step == b.failure_step
            if a.success:
                assert a.graph.edges == b.graph.edges
            assert a.log_prob == pytest.approx(b.log_prob, rel=1e-12, abs=1e-12)


def test_log_prob_matches_exact_step_product():
    d = DegreeSequence.regular(6, 2)
    for seed in range(20):
        for fn in (sample_reference, sample_fast):
            out = fn(d, seed)
            if not out.success:
                continue
            state = SamplerState(d)
            logp = 0.0
            for u, v in out.graph.edges:
                logp += math.log(step_probability(state, u, v))
                state.add_edge(u, v)
            assert out.log_prob == pytest.approx(logp, rel=1e-10)


@pytest.mark.parametrize("d", [
    ONES3,
    DegreeSequence.regular(4, 1),
    DegreeSequence.from_in_out([(1, 2), (2, 1), (1, 1), (1, 1)]),
    DegreeSequence.from_in_out([(0, 2), (1, 1), (1, 1), (1, 0), (1, 0), (0, 0)]),
])
def test_exact_distribution_matches_ordering_oracle(d):
    law, fail = exact_distribution(d)
    want, want_fail, _ = ordering_law(d)
    assert fail == want_fail
    assert law == want
    assert sum(law.values()) + fail == 1
    if d.n <= 4:
        assert set(law) <= set(brute_realizations(d))
    else:
        assert set(law) <= {g.canonical() for g in enumerate_exact(d, return_graphs=True)[1]}


def test_ones3_failure_probability_is_one_third():
    assert exact_distribution(ONES3)[1] == Fraction(1, 3)


@pytest.mark.parametrize("d,count", [
    (ONES3, 2),
    (DegreeSequence.regular(4, 1), 9),
    (DegreeSequence.from_in_out([(1, 2), (2, 1), (1, 1), (1, 1)]), 7),
])
def test_count_estimator_is_exactly_unbiased(d, count):
    # E[N] with failures counted as zero equals the number of realizations
    _, _, n_mass = ordering_law(d)
    assert sum(n_mass.values()) == count
    assert all(v == 1 for v in n_mass.values())


def test_rejects_non_digraphical_when_asked():
    d = DegreeSequence.from_in_out([(0, 2), (2, 0)])
    with pytest.raises(NotDigraphical):
        sample_fast(d, 0, check_graphical=True)


def test_degree_too_large_and_force():
    assert TOO_LARGE.digraphical
    with pytest.raises(DegreeTooLarge):
        sample_fast(TOO_LARGE, 0)
    with pytest.warns(BiasWarning):
        out = sample_fast(TOO_LARGE, 0, force=True)
    assert any("bias" in w for w in out.warnings)
    if out.success:
        assert out.graph.realizes(TOO_LARGE)


def test_loopy_single_vertex_always_fails():
    d = DegreeSequence((1,), (1,))
    out = sample_fast(d, 0)
    assert not out.success and out.failure_step == 0
    with pytest.raises(RetriesExhausted) as exc:
        run_with_retries(d, 0, max_retries=5)
    assert exc.value.attempts == 5


def test_retries_reach_success():
    out = run_with_retries(ONES3, 1, max_retries=50)
    assert out.success and out.retries_used >= 1
    with pytest.raises(ValueError):
        run_with_retries(ONES3, 1, max_retries=0)


def test_isolated_vertices_keep_labels():
    d = DegreeSequence.from_in_out([(0, 0), (0, 1), (0, 0), (1, 0)])
    for fn in (sample_reference, sample_fast):
        out = fn(d, 3)
        assert out.graph.n == 4 and out.graph.edges == ((1, 3),)


def test_reproducible_per_seed():
    d = DegreeSequence.regular(50, 3)
    a = sample_fast(d, run_stream(5, 2))
    b = sample_fast(d, run_stream(5, 2))
    assert a.graph == b.graph and a.log_prob == b.log_prob


def test_outputs_are_simple_realizations():
    rng = np.random.default_rng(10)
    for _ in range(30):
        n = int(rng.integers(2, 30))
        d = degrees_of(n, random_digraph(rng, n, 0.15))
        if d.max_weight_product >= 2 * d.m:
            continue
        for fn in (sample_reference, sample_fast):
            out = fn(d, int(rng.integers(1 << 30)))
            if out.success:
                assert out.graph.is_simple() and out.graph.realizes(d)
            else:
                assert d.m - out.failure_step <= d.d_max**2


def test_two_regular_n40_failure_rate_below_five_percent():
    d = DegreeSequence.regular(40, 2)
    fails = sum(not sample_fast(d, run_stream(11, k)).success for k in range(10000))
    assert fails / 10000 < 0.05


def test_two_regular_n40_failure_rate_agrees_across_samplers():
    d = DegreeSequence.regular(40, 2)
    k = 3000
    fast = sum(not sample_fast(d, run_stream(14, j)).success for j in range(k)) / k
    ref = sum(not sample_reference(d, run_stream(15, j)).success for j in range(k)) / k
    se = np.sqrt(fast * (1 - fast) / k + ref * (1 - ref) / k)
    assert abs(fast - ref) < 3 * se


def test_mean_retries_modest():
    d = DegreeSequence.regular(20, 1)
    used = [run_with_retries(d, run_stream(12, k)).retries_used for k in range(2000)]
    assert np.mean(used) < 1.2


def test_reference_ones3_splits_cycles_evenly():
    tally = Counter()
    for k in range(20000):
        out = run_with_retries(ONES3, run_stream(13, k), sampler=sample_reference)
        tally[out.graph.canonical()] += 1
    share = tally[((0, 1), (1, 2), (2, 0))] / 20000
    assert abs(share - 0.5) < 0.01


def test_no_negative_zero_log_count():
    out = sample_fast(SINGLE, 0)
    assert repr(out.log_count_estimate) == "0.0"
    with warnings.catch_warnings():
        warnings.simplefilter("error", BiasWarning)
        sample_fast(SINGLE, 0)


def test_pure_python_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, SEQDIGRAPH_PURE_PYTHON="1")
    code = ("from seqdigraph import sampler; from seqdigraph.degrees import DegreeSequence;"
            "print(sampler.BACKEND, sampler.sample_fast(DegreeSequence.regular(5, 1), 3).failure_step)")
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert proc.stdout.split()[0] == "python"


@pytest.mark.skipif(sampler.BACKEND != "cython", reason="compiled kernel not built")
def test_backend_benchmark_script_reports_identical_outputs():
    import json
    import subprocess
    import sys
    from pathlib import Path
    script = Path(__file__).parent.parent / "benchmarks" / "bench_backends.py"
    proc = subprocess.run([sys.executable, str(script), "--sizes", "100,300", "--repeats", "3", "--json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    rows = json.loads(proc.stdout)["rows"]
    assert all(r["identical"] for r in rows)
