"""Mutable state of one sampling run.

Alongside residual degrees and the partial edge set the state carries the
six integer components of the denominator correction, updated in
``O(d_max)`` per accepted edge:

* ``delta1``  -- sum_i rin_i * rout_i (residual pairs that would form a loop)
* ``delta2``  -- sum over created (u, v) of rout_u * rin_v (pairs that would
  duplicate an edge)
* ``lam1p``   -- sum_i rout_i * out_i
* ``lam1m``   -- sum_i rin_i * in_i
* ``lam2``    -- sum_i rout_i * out_i * rin_i * in_i
* ``lam3``    -- sum over created (u, v) of rout_u * rin_v * out_u * in_v

From these, ``scaled_denominator`` is
``4m * sum_{(u,v) admissible} rout_u rin_v (1 - out_u in_v / 2m)``
as an exact integer.
"""

from __future__ import annotations

from .degrees import DegreeSequence
from .errors import BoundViolation

# Process-wide tally of bound checks; see psi.bound_check_stats().
BOUND_STATS = {"states": 0, "violations": 0}

# Process-wide tally of failed runs and of failures whose gap m - s exceeds
# d_max**2 (expected to stay zero).
FAILURE_STATS = {"failures": 0, "gap_violations": 0, "max_gap_ratio": 0.0}


def record_failure(m: int, step: int, d_max: int) -> None:
    gap = m - step
    FAILURE_STATS["failures"] += 1
    if gap > d_max * d_max:
        FAILURE_STATS["gap_violations"] += 1
    ratio = gap / max(d_max * d_max, 1)
    if ratio > FAILURE_STATS["max_gap_ratio"]:
        FAILURE_STATS["max_gap_ratio"] = ratio


class SamplerState:
    def __init__(self, d: DegreeSequence):
        self.d = d
        self.m = d.m
        self.d_max = d.d_max
        self.out_deg = list(d.out_degrees)
        self.in_deg = list(d.in_degrees)
        self.res_out = list(d.out_degrees)
        self.res_in = list(d.in_degrees)
        self.edges: list[tuple[int, int]] = []
        self.present: set[tuple[int, int]] = set()
        self.out_adj: list[list[int]] = [[] for _ in range(d.n)]
        self.in_adj: list[list[int]] = [[] for _ in range(d.n)]
        self.log_prob = 0.0

        o, i = self.out_deg, self.in_deg
        self.delta1 = sum(a * b for a, b in zip(o, i))
        self.delta2 = 0
        self.lam1p = sum(a * a for a in o)
        self.lam1m = sum(b * b for b in i)
        self.lam2 = sum(a * a * b * b for a, b in zip(o, i))
        self.lam3 = 0

    @property
    def r(self) -> int:
        return len(self.edges)

    @property
    def remaining(self) -> int:
        return self.m - len(self.edges)

    @property
    def scaled_denominator(self) -> int:
        m, left = self.m, self.remaining
        return (
            4 * m * left * left
            - 2 * self.lam1p * self.lam1m
            - 4 * m * (self.delta1 + self.delta2)
            + 2 * self.lam2
            + 2 * self.lam3
        )

    def scaled_weight(self, i: int, j: int) -> int:
        """``4m * rout_i * rin_j * (1 - out_i in_j / 2m)``; not clamped."""
        return self.res_out[i] * self.res_in[j] * (4 * self.m - 2 * self.out_deg[i] * self.in_deg[j])

    def admissible(self, i: int, j: int) -> bool:
        return (
            i != j
            and self.res_out[i] > 0
            and self.res_in[j] > 0
            and (i, j) not in self.present
        )

    def add_edge(self, i: int, j: int) -> None:
        """Record edge ``(i, j)`` and update every component incrementally."""
        ro, ri = self.res_out, self.res_in
        o, n_in = self.out_deg, self.in_deg
        self.delta1 -= ri[i] + ro[j]
        self.lam2 -= o[i] * n_in[i] * ri[i] + o[j] * n_in[j] * ro[j]
        self.lam1p -= o[i]
        self.lam1m -= n_in[j]
        for v in self.out_adj[i]:
            self.delta2 -= ri[v]
            self.lam3 -= o[i] * ri[v] * n_in[v]
        for u in self.in_adj[j]:
            self.delta2 -= ro[u]
            self.lam3 -= n_in[j] * ro[u] * o[u]
        ro[i] -= 1
        ri[j] -= 1
        self.delta2 += ro[i] * ri[j]
        self.lam3 += ro[i] * ri[j] * o[i] * n_in[j]
        self.edges.append((i, j))
        self.present.add((i, j))
        self.out_adj[i].append(j)
        self.in_adj[j].append(i)

    def check_bounds(self) -> None:
        """Raise BoundViolation if a residual-pair bound fails at this state."""
        left, dm = self.remaining, self.d_max
        BOUND_STATS["states"] += 1
        ok = (
            self.delta1 + self.delta2 <= left * dm * dm
            and self.lam1p <= dm * left
            and self.lam1m <= dm * left
            and self.lam1p * self.lam1m - self.lam2 - self.lam3 <= dm * dm * left * left
        )
        if not ok:
            BOUND_STATS["violations"] += 1
            raise BoundViolation(f"bound violated at step {self.r}")

    def residual_snapshot(self) -> dict:
        return {
            "residual_out": {v: x for v, x in enumerate(self.res_out) if x},
            "residual_in": {v: x for v, x in enumerate(self.res_in) if x},
        }
