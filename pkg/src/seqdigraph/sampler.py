"""Sequential stub matching for simple digraphs.

At every step an admissible ordered pair ``(i, j)`` (``i != j``, edge not yet
present, both residual degrees positive) is chosen with probability
proportional to ``rout_i * rin_j * (1 - out_i * in_j / 2m)``. The product of
the step probabilities ``P`` gives the count estimate ``N = 1 / (m! P)``.

Two samplers share this distribution. ``sample_reference`` enumerates every
admissible pair at every step. ``sample_fast`` reaches the same step
probabilities by rejection in three phases and is backed by a compiled
kernel when available.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .degrees import DegreeSequence
from .errors import (
    BiasWarning,
    BoundViolation,
    DegenerateDenominator,
    DegreeConditionWarning,
    DegreeTooLarge,
    NotDigraphical,
    RetriesExhausted,
)
from .graph import Digraph
from .rng import RawStream, as_generator
from .state import BOUND_STATS, SamplerState, record_failure

DEFAULT_MAX_RETRIES = 100

try:
    if os.environ.get("SEQDIGRAPH_PURE_PYTHON"):
        raise ImportError("compiled kernel disabled by environment")
    from . import _kernel
except ImportError:
    _kernel = None

BACKEND = "cython" if _kernel is not None else "python"


@dataclass
class SampleOutcome:
    graph: Optional[Digraph] = None
    log_prob: float = 0.0
    failure_step: Optional[int] = None
    residual: Optional[dict] = None
    retries_used: int = 1
    warnings: list[str] = field(default_factory=list)
    m: int = 0

    @property
    def success(self) -> bool:
        return self.graph is not None

    @property
    def log_count_estimate(self) -> float:
        """``log N = -log m! - log P``; only defined on success."""
        if not self.success:
            return -math.inf
        return -math.lgamma(self.m + 1) - self.log_prob + 0.0  # no negative zero


def _prepare(d: DegreeSequence, force: bool,
             check_graphical: bool) -> tuple[DegreeSequence, list[int], list[str], bool]:
    """Validate ``d`` and strip isolated vertices.

    Returns the reduced sequence, the index map back to ``d``, outcome
    warnings, and whether weights must be clamped at zero. Without
    ``check_graphical`` a sequence with no simple realization is sampled
    anyway and every run ends in failure.
    """
    if check_graphical and not d.digraphical:
        raise NotDigraphical("degree sequence has no simple realization")
    reduced, index_map = d.strip_isolated()
    notes = []
    clamp = False
    if reduced.m and reduced.max_weight_product >= 2 * reduced.m:
        if not force:
            raise DegreeTooLarge(
                f"out_i*in_j reaches {reduced.max_weight_product} >= 2m = {2 * reduced.m}"
            )
        clamp = True
        notes.append("bias: nonpositive acceptance weights clamped to zero")
        warnings.warn("acceptance weights clamped; output is biased", BiasWarning, stacklevel=3)
    if reduced.m and not reduced.satisfies_degree_condition():
        notes.append("d_max^4 >= m: asymptotic guarantees do not apply")
        warnings.warn(
            f"d_max^4 = {reduced.d_max ** 4} >= m = {reduced.m}",
            DegreeConditionWarning,
            stacklevel=3,
        )
    return reduced, index_map, notes, clamp


def step_probability(state: SamplerState, i: int, j: int) -> Fraction:
    """Exact probability that the next edge is ``(i, j)``."""
    if not state.admissible(i, j):
        return Fraction(0)
    denom = state.scaled_denominator
    if denom == 0:
        raise DegenerateDenominator(f"no admissible weight left at step {state.r}")
    return Fraction(state.scaled_weight(i, j), denom)


def _finish(state: SamplerState, d: DegreeSequence, index_map: list[int],
            notes: list[str], failed_at: Optional[int]) -> SampleOutcome:
    if failed_at is not None:
        record_failure(state.m, failed_at, state.d_max)
        snap = state.residual_snapshot()
        snap = {k: {index_map[v]: x for v, x in s.items()} for k, s in snap.items()}
        return SampleOutcome(failure_step=failed_at, residual=snap, log_prob=state.log_prob,
                             warnings=notes, m=d.m)
    g = Digraph(state.d.n, state.edges)
    if state.d is not d:
        g = g.relabel(index_map, d.n)
    return SampleOutcome(graph=g, log_prob=state.log_prob, warnings=notes, m=d.m)


def sample_reference(d: DegreeSequence, rng=None, force: bool = False,
                     check_bounds: bool = True, check_graphical: bool = False) -> SampleOutcome:
    """Draw one graph by full enumeration of admissible pairs at each step.

    Pair weights are laid out row-major over ``(u, v)``; one bounded integer
    below their exact total picks the pair. Weights live in an int64 matrix
    when the total provably fits, otherwise in Python integers.
    """
    reduced, index_map, notes, clamp = _prepare(d, force, check_graphical)
    raw = RawStream(as_generator(rng))
    state = SamplerState(reduced)
    n, m = reduced.n, reduced.m
    fits = n * n * reduced.d_max**2 * 4 * max(m, 1) < 2**62
    pick = _pick_numpy(reduced) if fits else _pick_python(reduced)
    while state.remaining:
        if check_bounds:
            state.check_bounds()
        chosen = pick(state, raw, clamp)
        if chosen is None:
            return _finish(state, d, index_map, notes, state.r)
        (u, v), w, total = chosen
        state.log_prob += math.log(w) - math.log(total)
        state.add_edge(u, v)
    return _finish(state, d, index_map, notes, None)


def _pick_python(d: DegreeSequence):
    n = d.n

    def pick(state: SamplerState, raw: RawStream, clamp: bool):
        pairs = []
        weights = []
        for u in range(n):
            if not state.res_out[u]:
                continue
            for v in range(n):
                if state.admissible(u, v):
                    w = state.scaled_weight(u, v)
                    if clamp:
                        w = max(w, 0)
                    if w:
                        pairs.append((u, v))
                        weights.append(w)
        total = sum(weights)
        if total == 0:
            return None
        if not clamp and total != state.scaled_denominator:
            raise AssertionError("incremental denominator drifted from pair enumeration")
        x = raw.randbelow(total)
        k = 0
        while x >= weights[k]:
            x -= weights[k]
            k += 1
        return pairs[k], weights[k], total

    return pick


def _pick_numpy(d: DegreeSequence):
    """Row-major pick over an int64 weight matrix kept current in O(n) per edge.

    Adding ``(u, v)`` only changes row ``u`` (its residual out-degree) and
    column ``v`` (its residual in-degree), so those are recomputed and the
    row sums patched. The pair is located by scanning row sums, then the row.
    """
    n, m = d.n, d.m
    out_a, in_a = d.arrays
    static = 4 * m - 2 * np.outer(out_a, in_a)
    blocked = np.eye(n, dtype=bool)
    res_out = out_a.copy()
    res_in = in_a.copy()
    w = np.outer(res_out, res_in) * static
    w[blocked] = 0
    row_sums = w.sum(axis=1)
    seen = [0]

    def pick(state: SamplerState, raw: RawStream, clamp: bool):
        if seen[0] == 0 and clamp:
            np.maximum(w, 0, out=w)
            row_sums[:] = w.sum(axis=1)
        for u, v in state.edges[seen[0]:]:
            blocked[u, v] = True
            res_out[u] = state.res_out[u]
            res_in[v] = state.res_in[v]
            col = res_out * res_in[v] * static[:, v]
            if clamp:
                np.maximum(col, 0, out=col)
            col[blocked[:, v]] = 0
            row_sums[:] += col - w[:, v]
            w[:, v] = col
            row = res_out[u] * res_in * static[u]
            if clamp:
                np.maximum(row, 0, out=row)
            row[blocked[u]] = 0
            w[u] = row
            row_sums[u] = row.sum()
        seen[0] = len(state.edges)
        cum_rows = np.cumsum(row_sums)
        total = int(cum_rows[-1])
        if total == 0:
            return None
        if not clamp and total != state.scaled_denominator:
            raise AssertionError("incremental denominator drifted from pair enumeration")
        x = raw.randbelow(total)
        u = int(np.searchsorted(cum_rows, x, side="right"))
        x -= int(cum_rows[u - 1]) if u else 0
        v = int(np.searchsorted(np.cumsum(w[u]), x, side="right"))
        return (u, v), int(w[u, v]), total

    return pick


def _fast_python(state: SamplerState, raw: RawStream, check_bounds: bool,
                 trace: Optional[list] = None) -> Optional[int]:
    """Three-phase rejection sampler; returns the failure step or None.

    Phase 1 draws uniform (out-stub, in-stub) pairs until fewer than
    ``2 d_max^2`` in-stubs remain. Phase 2 draws vertices, accepting each
    with probability residual/d_max, until fewer than ``2 d_max`` vertices
    remain on either side. Phase 3 draws from the materialized list of
    admissible pairs with acceptance ``rout rin (2m - out in) / (d_max^2 2m)``.
    Every phase realizes the same step distribution; the denominator is
    only used for the log-probability and the failure test.
    """
    m = state.m
    dmax = state.d_max
    two_m = 2 * m
    out_deg, in_deg = state.out_deg, state.in_deg
    res_out, res_in = state.res_out, state.res_in
    out_adj = state.out_adj
    n = len(out_deg)

    out_stubs = [v for v in range(n) for _ in range(out_deg[v])]
    in_stubs = [v for v in range(n) for _ in range(in_deg[v])]
    phase = 1
    out_verts: list[int] = []
    in_verts: list[int] = []
    out_pos: list[int] = []
    in_pos: list[int] = []
    cand: list[tuple[int, int]] = []

    r = 0
    while r < m:
        if check_bounds:
            state.check_bounds()
        denom = state.scaled_denominator
        if trace is not None:
            trace.append(denom)
        if denom <= 0:
            return r
        if phase == 1 and m - r < 2 * dmax * dmax:
            phase = 2
            out_verts = [v for v in range(n) if res_out[v]]
            in_verts = [v for v in range(n) if res_in[v]]
            out_pos = [-1] * n
            in_pos = [-1] * n
            for k, v in enumerate(out_verts):
                out_pos[v] = k
            for k, v in enumerate(in_verts):
                in_pos[v] = k
        if phase == 2 and (len(out_verts) < 2 * dmax or len(in_verts) < 2 * dmax):
            phase = 3
            cand = [(u, v) for u in out_verts for v in in_verts
                    if u != v and v not in out_adj[u]]

        if phase == 1:
            while True:
                a = raw.randbelow(len(out_stubs))
                b = raw.randbelow(len(in_stubs))
                i = out_stubs[a]
                j = in_stubs[b]
                if i == j or j in out_adj[i]:
                    continue
                if raw.randbelow(two_m) >= two_m - out_deg[i] * in_deg[j]:
                    continue
                break
            out_stubs[a] = out_stubs[-1]
            out_stubs.pop()
            in_stubs[b] = in_stubs[-1]
            in_stubs.pop()
        elif phase == 2:
            while True:
                i = out_verts[raw.randbelow(len(out_verts))]
                if raw.randbelow(dmax) >= res_out[i]:
                    continue
                j = in_verts[raw.randbelow(len(in_verts))]
                if raw.randbelow(dmax) >= res_in[j]:
                    continue
                if i == j or j in out_adj[i]:
                    continue
                if raw.randbelow(two_m) >= two_m - out_deg[i] * in_deg[j]:
                    continue
                break
        else:
            bound = dmax * dmax * two_m
            while True:
                k = raw.randbelow(len(cand))
                i, j = cand[k]
                if not res_out[i] or not res_in[j]:
                    cand[k] = cand[-1]
                    cand.pop()
                    continue
                if raw.randbelow(bound) >= res_out[i] * res_in[j] * (two_m - out_deg[i] * in_deg[j]):
                    continue
                cand[k] = cand[-1]
                cand.pop()
                break

        weight = res_out[i] * res_in[j] * (2 * two_m - 2 * out_deg[i] * in_deg[j])
        state.log_prob += math.log(weight) - math.log(denom)
        state.add_edge(i, j)
        r += 1
        if phase == 2:
            if not res_out[i]:
                _swap_remove(out_verts, out_pos, i)
            if not res_in[j]:
                _swap_remove(in_verts, in_pos, j)
    if check_bounds:
        state.check_bounds()
    return None


def _swap_remove(items: list[int], pos: list[int], v: int) -> None:
    k = pos[v]
    last = items[-1]
    items[k] = last
    pos[last] = k
    items.pop()
    pos[v] = -1


def sample_fast(d: DegreeSequence, rng=None, force: bool = False,
                check_bounds: bool = True, backend: Optional[str] = None,
                check_graphical: bool = False) -> SampleOutcome:
    """Draw one graph with the three-phase rejection scheme.

    ``backend`` is ``"cython"``, ``"python"`` or None for the import-time
    default. With ``force`` and oversized degrees the clamped weights no
    longer match the rejection scheme, so the reference path is used.
    """
    reduced, index_map, notes, clamp = _prepare(d, force, check_graphical)
    if clamp:
        return sample_reference(d, rng, force=True, check_bounds=False)
    gen = as_generator(rng)
    backend = backend or BACKEND
    if reduced.m == 0:
        return SampleOutcome(graph=Digraph(d.n, ()), warnings=notes, m=0)
    if backend == "cython":
        if _kernel is None:
            raise RuntimeError("compiled kernel is not available")
        return _fast_kernel(reduced, d, index_map, notes, gen, check_bounds)
    state = SamplerState(reduced)
    failed_at = _fast_python(state, RawStream(gen), check_bounds)
    return _finish(state, d, index_map, notes, failed_at)


def _fast_kernel(reduced: DegreeSequence, d: DegreeSequence, index_map: list[int],
                 notes: list[str], gen: np.random.Generator, check_bounds: bool) -> SampleOutcome:
    out_a, in_a = reduced.arrays
    res = _kernel.sample(out_a, in_a, gen.bit_generator, check_bounds)
    BOUND_STATS["states"] += res["states_checked"]
    if res["violations"]:
        BOUND_STATS["violations"] += res["violations"]
        raise BoundViolation(f"{res['violations']} bound violations in compiled sampler")
    edges = res["edges"]
    r = res["r"]
    if res["failed"]:
        record_failure(reduced.m, r, reduced.d_max)
        ro, ri = res["res_out"], res["res_in"]
        snap = {
            "residual_out": {index_map[v]: int(x) for v, x in enumerate(ro) if x},
            "residual_in": {index_map[v]: int(x) for v, x in enumerate(ri) if x},
        }
        return SampleOutcome(failure_step=r, residual=snap, log_prob=res["log_prob"],
                             warnings=notes, m=d.m)
    g = Digraph(reduced.n, edges[:r])
    if reduced is not d:
        g = g.relabel(index_map, d.n)
    return SampleOutcome(graph=g, log_prob=res["log_prob"], warnings=notes, m=d.m)


def run_with_retries(d: DegreeSequence, rng=None, max_retries: int = DEFAULT_MAX_RETRIES,
                     force: bool = False, sampler=None, **kwargs) -> SampleOutcome:
    """Restart the whole construction after each failure, up to ``max_retries`` attempts."""
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    sampler = sampler or sample_fast
    gen = as_generator(rng)
    last = None
    for attempt in range(1, max_retries + 1):
        out = sampler(d, gen, force=force, **kwargs)
        if out.success:
            out.retries_used = attempt
            return out
        last = out
    raise RetriesExhausted(max_retries, last.failure_step)


def exact_distribution(d: DegreeSequence) -> tuple[dict, Fraction]:
    """Exact output law of the sampler, for tiny instances.

    Propagates probability mass over partial edge sets (the step law only
    depends on the set, not its order). Returns ``{canonical edges: prob}``
    over successful outputs and the total failure probability, both as
    Fractions. Cost grows with the number of reachable edge sets.
    """
    reduced, index_map = d.strip_isolated()
    n, m = reduced.n, reduced.m
    out_d, in_d = reduced.out_degrees, reduced.in_degrees
    layer = {frozenset(): Fraction(1)}
    failure = Fraction(0)
    for _ in range(m):
        nxt: dict = {}
        for edges, mass in layer.items():
            res_out = list(out_d)
            res_in = list(in_d)
            for u, v in edges:
                res_out[u] -= 1
                res_in[v] -= 1
            moves = [((u, v), res_out[u] * res_in[v] * (4 * m - 2 * out_d[u] * in_d[v]))
                     for u in range(n) if res_out[u]
                     for v in range(n) if res_in[v] and u != v and (u, v) not in edges]
            total = sum(w for _, w in moves)
            if total <= 0:
                failure += mass
                continue
            for e, w in moves:
                key = edges | {e}
                nxt[key] = nxt.get(key, 0) + mass * Fraction(w, total)
        layer = nxt
    out = {}
    for edges, mass in layer.items():
        g = Digraph(n, sorted(edges))
        if reduced is not d:
            g = g.relabel(index_map, d.n)
        out[g.canonical()] = mass
    return out, failure
