"""Denominator accounting: exact components, expectations, bounds.

The algorithm normalizes step ``r`` by
``D_r = sum over admissible (u, v) of rout_u rin_v (1 - out_u in_v / 2m)``,
written ``(m - r)**2 - Psi_r``. Everything here is kept scaled by ``4m`` so
that it stays in exact integers.

Two groupings of the weight correction are exposed. ``scaled_lambda``
follows the split grouping ``lam1p*lam1m - lam2 - 2*lam3``; the quantity
that actually enters ``D_r`` is ``2*(lam1p*lam1m - lam2 - lam3)``, exposed as
``scaled_lambda_direct``. They differ by ``lam1p*lam1m - lam2``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .degrees import DegreeSequence
from .graph import Digraph
from .state import BOUND_STATS, SamplerState


@dataclass(frozen=True)
class PsiBreakdown:
    r: int
    m: int
    remaining: int
    delta1: int
    delta2: int
    lambda1_plus: int
    lambda1_minus: int
    lambda2: int
    lambda3: int

    @property
    def delta(self) -> int:
        return self.delta1 + self.delta2

    @property
    def scaled_lambda(self) -> int:
        return self.lambda1_plus * self.lambda1_minus - self.lambda2 - 2 * self.lambda3

    @property
    def scaled_psi(self) -> int:
        return 4 * self.m * self.delta + self.scaled_lambda

    @property
    def scaled_lambda_direct(self) -> int:
        return 2 * (self.lambda1_plus * self.lambda1_minus - self.lambda2 - self.lambda3)

    @property
    def scaled_psi_direct(self) -> int:
        return 4 * self.m * self.delta + self.scaled_lambda_direct

    @property
    def psi(self) -> Fraction:
        return Fraction(self.scaled_psi_direct, 4 * self.m) if self.m else Fraction(0)

    @property
    def scaled_denominator(self) -> int:
        return 4 * self.m * self.remaining**2 - self.scaled_psi_direct

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    def to_record(self) -> dict:
        return {
            "r": self.r,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "lambda1p": self.lambda1_plus,
            "lambda1m": self.lambda1_minus,
            "lambda2": self.lambda2,
            "lambda3": self.lambda3,
            "scaled_psi": self.scaled_psi,
            "scaled_denominator": self.scaled_denominator,
        }


def breakdown_from_state(state: SamplerState) -> PsiBreakdown:
    """Read the incrementally maintained components (no recomputation)."""
    return PsiBreakdown(
        state.r, state.m, state.remaining,
        state.delta1, state.delta2, state.lam1p, state.lam1m, state.lam2, state.lam3,
    )


def compute_psi_exact(state: SamplerState, full_degrees: DegreeSequence | None = None) -> PsiBreakdown:
    """Recompute every component from scratch out of the residuals and edge set."""
    d = full_degrees if full_degrees is not None else state.d
    o, i = d.out_degrees, d.in_degrees
    ro, ri = state.res_out, state.res_in
    n = d.n
    delta1 = sum(ri[v] * ro[v] for v in range(n))
    lam1p = sum(ro[v] * o[v] for v in range(n))
    lam1m = sum(ri[v] * i[v] for v in range(n))
    lam2 = sum(ro[v] * o[v] * ri[v] * i[v] for v in range(n))
    delta2 = 0
    lam3 = 0
    for u, v in state.present:
        delta2 += ro[u] * ri[v]
        lam3 += ro[u] * ri[v] * o[u] * i[v]
    return PsiBreakdown(
        len(state.edges), d.m, d.m - len(state.edges),
        delta1, delta2, lam1p, lam1m, lam2, lam3,
    )


def scaled_denominator_bruteforce(state: SamplerState) -> int:
    """``4m * D_r`` by direct summation over all ordered vertex pairs."""
    total = 0
    n = state.d.n
    for u in range(n):
        if not state.res_out[u]:
            continue
        for v in range(n):
            if state.admissible(u, v):
                total += state.scaled_weight(u, v)
    return total


def update_denominator_incremental(state: SamplerState, new_edge: tuple[int, int]) -> int:
    """Accept ``new_edge`` into ``state`` and return the new scaled denominator."""
    state.add_edge(*new_edge)
    return state.scaled_denominator


def psi_upper_bound_check(breakdown: PsiBreakdown, r: int, m: int, d_max: int) -> bool:
    """Residual-pair bounds: Delta, each Lambda^1 and Lambda against ``m - r``."""
    left = m - r
    dm2 = d_max * d_max
    BOUND_STATS["states"] += 1
    ok = (
        breakdown.delta <= left * dm2
        and breakdown.lambda1_plus <= d_max * left
        and breakdown.lambda1_minus <= d_max * left
        # Lambda <= d_max^2 (m-r)^2 / 2m, scaled by 2m
        and breakdown.lambda1_plus * breakdown.lambda1_minus
        - breakdown.lambda2 - breakdown.lambda3 <= dm2 * left * left
    )
    if not ok:
        BOUND_STATS["violations"] += 1
    return ok


def bound_check_stats() -> dict:
    return dict(BOUND_STATS)


@dataclass(frozen=True)
class ExpectedComponents:
    """Expectations over the subgraph keeping each edge with probability r/m."""

    delta1: Fraction
    delta2: Fraction
    lambda1_product: Fraction
    lambda2: Fraction
    lambda3: Fraction

    def as_floats(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


def expected_components(d: DegreeSequence, g: Digraph, r: int) -> ExpectedComponents:
    m = d.m
    o, i = d.out_degrees, d.in_degrees
    left = m - r
    s_io = sum(a * b for a, b in zip(o, i))
    s_in2 = sum(b * b for b in i)
    s_out2 = sum(a * a for a in o)
    s_in2out2 = sum(a * a * b * b for a, b in zip(o, i))
    e_pm1 = sum((o[u] - 1) * (i[v] - 1) for u, v in g.edges)
    e_prod = sum(o[u] * i[v] for u, v in g.edges)
    e_pm3 = sum(o[u] * (o[u] - 1) * i[v] * (i[v] - 1) for u, v in g.edges)
    q2 = Fraction(left * left, m * m)
    return ExpectedComponents(
        delta1=q2 * s_io,
        delta2=Fraction(r * left * left, m**3) * e_pm1,
        lambda1_product=q2 * s_in2 * s_out2 + Fraction(r * left, m * m) * e_prod,
        lambda2=q2 * s_in2out2,
        lambda3=Fraction(r * left * left, m**3) * e_pm3,
    )


def expected_psi(d: DegreeSequence, g: Digraph, r: int, split: bool = True) -> float:
    """Expected correction term at step ``r`` from the exact component expectations.

    ``split=True`` assembles ``E[D1] + E[D2] + (E[L1+L1-] - E[L2])/4m - E[L3]/2m``;
    ``split=False`` gives the expectation of the direct correction,
    ``E[D1] + E[D2] + (E[L1+L1-] - E[L2] - E[L3])/2m``.
    """
    e = expected_components(d, g, r)
    m = d.m
    if split:
        val = e.delta1 + e.delta2 + (e.lambda1_product - e.lambda2) / (4 * m) - e.lambda3 / (2 * m)
    else:
        val = e.delta1 + e.delta2 + (e.lambda1_product - e.lambda2 - e.lambda3) / (2 * m)
    return float(val)


def monte_carlo_components(d: DegreeSequence, g: Digraph, r: int, draws: int,
                           rng: np.random.Generator, chunk: int = 100_000) -> dict:
    """Sample mean and standard error of each component over random subgraphs of ``g``.

    Each edge of ``g`` is kept independently with probability ``r/m``; the
    kept edges play the role of the already-created edges.
    """
    m = d.m
    n = d.n
    o = np.asarray(d.out_degrees, dtype=np.float64)
    i = np.asarray(d.in_degrees, dtype=np.float64)
    src = np.array([u for u, _ in g.edges], dtype=np.int64)
    dst = np.array([v for _, v in g.edges], dtype=np.int64)
    out_inc = np.zeros((m, n))
    out_inc[np.arange(m), src] = 1.0
    in_inc = np.zeros((m, n))
    in_inc[np.arange(m), dst] = 1.0
    p = r / m
    names = ("delta1", "delta2", "lambda1_product", "lambda2", "lambda3")
    sums = dict.fromkeys(names, 0.0)
    sq = dict.fromkeys(names, 0.0)
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        kept = rng.random((b, m)) < p
        missing = (~kept).astype(np.float64)
        ro = missing @ out_inc
        ri = missing @ in_inc
        ro_e = ro[:, src]
        ri_e = ri[:, dst]
        vals = {
            "delta1": (ro * ri).sum(axis=1),
            "delta2": (kept * ro_e * ri_e).sum(axis=1),
            "lambda1_product": (ro @ o) * (ri @ i),
            "lambda2": (ro * ri) @ (o * i),
            "lambda3": (kept * ro_e * ri_e * (o[src] * i[dst])).sum(axis=1),
        }
        for k in names:
            sums[k] += vals[k].sum()
            sq[k] += (vals[k] ** 2).sum()
        done += b
    out = {}
    for k in names:
        mean = sums[k] / draws
        var = max(sq[k] / draws - mean * mean, 0.0) * draws / max(draws - 1, 1)
        out[k] = (mean, float(np.sqrt(var / draws)))
    return out


def psi_trajectory(d: DegreeSequence, rng=None) -> dict:
    """Run one exact-enumeration trajectory and record the components per step.

    Each record is the incrementally maintained breakdown; ``exact_match``
    says whether every one agreed with a from-scratch recomputation, and
    ``bound_violations`` counts states outside the residual-pair bounds.
    """
    from .rng import RawStream, as_generator
    from .sampler import _pick_numpy, _pick_python

    reduced, _ = d.strip_isolated()
    state = SamplerState(reduced)
    raw = RawStream(as_generator(rng))
    fits = reduced.n**2 * reduced.d_max**2 * 4 * max(reduced.m, 1) < 2**62
    pick = _pick_numpy(reduced) if fits else _pick_python(reduced)
    records = []
    exact = True
    violations = 0
    failure_step = None
    while True:
        b = breakdown_from_state(state)
        records.append(b.to_record())
        exact &= b == compute_psi_exact(state)
        if not psi_upper_bound_check(b, state.r, state.m, state.d_max):
            violations += 1
        if not state.remaining:
            break
        chosen = pick(state, raw, False)
        if chosen is None:
            failure_step = state.r
            break
        state.add_edge(*chosen[0])
    return {"steps": records, "exact_match": bool(exact),
            "bound_violations": violations, "failure_step": failure_step}
