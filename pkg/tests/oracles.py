"""Independent brute-force oracles used by the tests.

Nothing here reuses package internals beyond the DegreeSequence/Digraph
containers, so agreement with the package is meaningful.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from seqdigraph.degrees import DegreeSequence


def ordered_pairs(n):
    return [(u, v) for u in range(n) for v in range(n) if u != v]


@lru_cache(maxsize=None)
def all_digraphs_by_degrees(n: int) -> dict:
    """Map ``(out_degrees, in_degrees)`` to the sorted edge tuples of every simple digraph on n vertices."""
    pairs = ordered_pairs(n)
    table: dict = {}
    for mask in range(1 << len(pairs)):
        edges = tuple(p for k, p in enumerate(pairs) if mask >> k & 1)
        out_d = [0] * n
        in_d = [0] * n
        for u, v in edges:
            out_d[u] += 1
            in_d[v] += 1
        table.setdefault((tuple(out_d), tuple(in_d)), []).append(edges)
    return table


def brute_realizations(d: DegreeSequence) -> list:
    return all_digraphs_by_degrees(d.n).get((d.out_degrees, d.in_degrees), [])


def degree_counts_n5() -> Counter:
    """Number of simple digraphs on 5 vertices for each degree sequence (vectorized)."""
    pairs = ordered_pairs(5)
    masks = np.arange(1 << len(pairs), dtype=np.int64)
    bits = (masks[:, None] >> np.arange(len(pairs))) & 1
    src = np.zeros((len(pairs), 5), dtype=np.int64)
    dst = np.zeros((len(pairs), 5), dtype=np.int64)
    for k, (u, v) in enumerate(pairs):
        src[k, u] = 1
        dst[k, v] = 1
    outs = bits @ src
    ins = bits @ dst
    keys = np.concatenate([outs, ins], axis=1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    return Counter({(tuple(r[:5].tolist()), tuple(r[5:].tolist())): int(c)
                    for r, c in zip(uniq, counts)})


def pair_weight(d: DegreeSequence, edges: frozenset, u: int, v: int) -> int:
    """Scaled weight ``rout_u rin_v (4m - 2 out_u in_v)`` of pair (u, v), from scratch."""
    if u == v or (u, v) in edges:
        return 0
    rout = d.out_degrees[u] - sum(1 for a, _ in edges if a == u)
    rin = d.in_degrees[v] - sum(1 for _, b in edges if b == v)
    if rout <= 0 or rin <= 0:
        return 0
    return rout * rin * (4 * d.m - 2 * d.out_degrees[u] * d.in_degrees[v])


def denominator_from_scratch(d: DegreeSequence, edges) -> int:
    edges = frozenset(edges)
    return sum(pair_weight(d, edges, u, v) for u in range(d.n) for v in range(d.n))


def ordering_law(d: DegreeSequence):
    """Exact law of the sequential procedure by recursion over edge orderings.

    Returns ``({sorted edges: probability}, failure probability,
    {sorted edges: E[N * 1{output}]})`` with Fractions. The last map gives
    the contribution of each graph to the mean of ``N = 1/(m! P)``.
    """
    m = d.m
    fact = 1
    for k in range(2, m + 1):
        fact *= k
    law: dict = {}
    n_mass: dict = {}
    fail = Fraction(0)

    def walk(edges: tuple, prob: Fraction):
        nonlocal fail
        if len(edges) == m:
            key = tuple(sorted(edges))
            law[key] = law.get(key, 0) + prob
            # E[N 1{G}] = sum over orderings of P(order) / (m! P(order))
            n_mass[key] = n_mass.get(key, 0) + Fraction(1, fact)
            return
        present = frozenset(edges)
        weights = [((u, v), pair_weight(d, present, u, v))
                   for u in range(d.n) for v in range(d.n)]
        weights = [(e, w) for e, w in weights if w > 0]
        total = sum(w for _, w in weights)
        if total == 0:
            fail += prob
            return
        for e, w in weights:
            walk(edges + (e,), prob * Fraction(w, total))

    walk((), Fraction(1))
    return law, fail, n_mass


def exact_component_expectations(d: DegreeSequence, edges: list, r: int) -> dict:
    """Expectations of the residual components when each edge of the graph is kept w.p. r/m.

    Enumerates all 2^m kept-subsets with their binomial weights.
    """
    m = len(edges)
    p = Fraction(r, m)
    o, i = d.out_degrees, d.in_degrees
    acc = dict.fromkeys(("delta1", "delta2", "lambda1_product", "lambda2", "lambda3"), Fraction(0))
    for keep in product((0, 1), repeat=m):
        k = sum(keep)
        w = p**k * (1 - p) ** (m - k)
        if w == 0:
            continue
        ro = list(o)
        ri = list(i)
        for (u, v), kk in zip(edges, keep):
            if kk:
                ro[u] -= 1
                ri[v] -= 1
        kept = [e for e, kk in zip(edges, keep) if kk]
        acc["delta1"] += w * sum(ro[x] * ri[x] for x in range(d.n))
        acc["delta2"] += w * sum(ro[u] * ri[v] for u, v in kept)
        acc["lambda1_product"] += w * sum(ro[x] * o[x] for x in range(d.n)) * sum(ri[x] * i[x] for x in range(d.n))
        acc["lambda2"] += w * sum(ro[x] * o[x] * ri[x] * i[x] for x in range(d.n))
        acc["lambda3"] += w * sum(ro[u] * ri[v] * o[u] * i[v] for u, v in kept)
    return acc


def random_digraph(rng: np.random.Generator, n: int, p: float) -> list:
    return [(u, v) for u, v in ordered_pairs(n) if rng.random() < p]


def degrees_of(n: int, edges) -> DegreeSequence:
    out_d = [0] * n
    in_d = [0] * n
    for u, v in edges:
        out_d[u] += 1
        in_d[v] += 1
    return DegreeSequence(tuple(out_d), tuple(in_d))


def derangement_count(n: int) -> int:
    return sum(1 for perm in permutations(range(n)) if all(perm[k] != k for k in range(n)))
