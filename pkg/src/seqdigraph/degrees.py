"""Directed degree sequences: parsing, serialization and graphicality."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import MalformedLine, SumMismatch
from .graph import Digraph


@dataclass(frozen=True)
class DegreeSequence:
    """Per-vertex (out-degree, in-degree) pairs.

    ``labels`` holds the original vertex identifiers when the input file
    carried an id column; otherwise vertices are named ``0..n-1``.
    """

    out_degrees: tuple[int, ...]
    in_degrees: tuple[int, ...]
    labels: Optional[tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        out_d = tuple(int(x) for x in self.out_degrees)
        in_d = tuple(int(x) for x in self.in_degrees)
        if len(out_d) != len(in_d):
            raise ValueError("out/in degree lists differ in length")
        if any(x < 0 for x in out_d) or any(x < 0 for x in in_d):
            raise ValueError("degrees must be nonnegative")
        if sum(out_d) != sum(in_d):
            raise SumMismatch(
                f"sum of out-degrees {sum(out_d)} != sum of in-degrees {sum(in_d)}"
            )
        if self.labels is not None and len(self.labels) != len(out_d):
            raise ValueError("labels must have one entry per vertex")
        object.__setattr__(self, "out_degrees", out_d)
        object.__setattr__(self, "in_degrees", in_d)

    @classmethod
    def from_in_out(cls, pairs: Sequence[tuple[int, int]]) -> "DegreeSequence":
        """Build from ``(in, out)`` pairs, the order used in most literature."""
        return cls(tuple(p[1] for p in pairs), tuple(p[0] for p in pairs))

    @classmethod
    def regular(cls, n: int, k: int) -> "DegreeSequence":
        return cls((k,) * n, (k,) * n)

    @property
    def n(self) -> int:
        return len(self.out_degrees)

    @cached_property
    def m(self) -> int:
        return sum(self.out_degrees)

    @cached_property
    def d_max(self) -> int:
        return max(self.out_degrees + self.in_degrees, default=0)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Read-only int64 copies of the out- and in-degrees."""
        out_a = np.asarray(self.out_degrees, dtype=np.int64)
        in_a = np.asarray(self.in_degrees, dtype=np.int64)
        out_a.flags.writeable = False
        in_a.flags.writeable = False
        return out_a, in_a

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)

    def has_isolated(self) -> bool:
        return any(a == 0 and b == 0 for a, b in zip(self.out_degrees, self.in_degrees))

    @cached_property
    def _stripped(self) -> tuple["DegreeSequence", list[int]]:
        return self._strip()

    def strip_isolated(self) -> tuple["DegreeSequence", list[int]]:
        """Drop vertices with zero in- and out-degree.

        Returns the reduced sequence and ``index_map`` with
        ``index_map[new] == old``. The result is cached.
        """
        return self._stripped

    def _strip(self) -> tuple["DegreeSequence", list[int]]:
        if not self.has_isolated():
            return self, list(range(self.n))
        keep = [v for v in range(self.n) if self.out_degrees[v] or self.in_degrees[v]]
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[v] for v in keep)
        reduced = DegreeSequence(
            tuple(self.out_degrees[v] for v in keep),
            tuple(self.in_degrees[v] for v in keep),
            labels,
        )
        return reduced, keep

    @cached_property
    def digraphical(self) -> bool:
        return is_digraphical(self)

    @cached_property
    def max_weight_product(self) -> int:
        """Largest ``out_i * in_j`` over ordered pairs ``i != j``."""
        if self.n < 2:
            return 0
        outs, ins = self.arrays
        i = int(np.argmax(outs))
        masked = ins.copy()
        masked[i] = -1
        best = int(outs[i] * masked.max())
        j = int(np.argmax(ins))
        masked = outs.copy()
        masked[j] = -1
        return max(best, int(ins[j] * masked.max()))

    def satisfies_degree_condition(self) -> bool:
        """Whether ``d_max**4 < m``, the regime where the sampler's guarantees apply."""
        return self.d_max**4 < self.m

    def to_text(self) -> str:
        return serialize_degree_sequence(self)


def parse_degree_sequence(text: str) -> DegreeSequence:
    """Parse ``out in`` records, one vertex per line.

    Lines with three fields are read as ``id out in``; blank lines and
    ``#`` comments are skipped. All records must use the same layout.
    """
    rows = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise MalformedLine(lineno, raw, f"expected 2 or 3 fields, got {len(tokens)}")
        if width is None:
            width = len(tokens)
        elif len(tokens) != width:
            raise MalformedLine(lineno, raw, "mixed 2- and 3-field records")
        try:
            out_d, in_d = int(tokens[-2]), int(tokens[-1])
        except ValueError:
            raise MalformedLine(lineno, raw, "degrees must be integers") from None
        if out_d < 0 or in_d < 0:
            raise MalformedLine(lineno, raw, "degrees must be nonnegative")
        rows.append((tokens[0] if width == 3 else None, out_d, in_d))

    labels = None
    if width == 3:
        labels = tuple(r[0] for r in rows)
        if len(set(labels)) != len(labels):
            raise MalformedLine(0, "", "duplicate vertex ids")
    return DegreeSequence(
        tuple(r[1] for r in rows), tuple(r[2] for r in rows), labels
    )


def serialize_degree_sequence(d: DegreeSequence) -> str:
    lines = []
    for v in range(d.n):
        prefix = f"{d.labels[v]} " if d.labels is not None else ""
        lines.append(f"{prefix}{d.out_degrees[v]} {d.in_degrees[v]}\n")
    return "".join(lines)


def is_digraphical(d: DegreeSequence) -> bool:
    """Fulkerson-Chen-Anstee test.

    Vertices are sorted by in-degree (descending, out-degree descending on
    ties). For every k the k largest in-degrees must be coverable:
    ``sum_{i<=k} in_i <= sum_{i<=k} min(out_i, k-1) + sum_{i>k} min(out_i, k)``.
    Only ``k <= d_max`` can fail; beyond that the right side is ``m``.
    """
    if d.m == 0:
        return True
    ins = np.asarray(d.in_degrees, dtype=np.int64)
    outs = np.asarray(d.out_degrees, dtype=np.int64)
    order = np.lexsort((-outs, -ins))
    ins, outs = ins[order], outs[order]
    lhs = np.cumsum(ins)
    n = len(ins)
    for k in range(1, min(n, d.d_max + 1) + 1):
        rhs = np.minimum(outs[:k], k - 1).sum() + np.minimum(outs[k:], k).sum()
        if lhs[k - 1] > rhs:
            return False
    return True


def realize_via_flow(d: DegreeSequence) -> Optional[Digraph]:
    """Find one realization by max-flow on the stub bipartite graph.

    Source feeds each out-copy with capacity ``out_i``; out-copy ``i``
    links to in-copy ``j != i`` with capacity 1; in-copy ``j`` drains to
    the sink with capacity ``in_j``. A flow of value ``m`` is a simple
    digraph.
    """
    import networkx as nx

    g = nx.DiGraph()
    for i in range(d.n):
        if d.out_degrees[i]:
            g.add_edge("s", ("o", i), capacity=d.out_degrees[i])
        if d.in_degrees[i]:
            g.add_edge(("i", i), "t", capacity=d.in_degrees[i])
    for i in range(d.n):
        if not d.out_degrees[i]:
            continue
        for j in range(d.n):
            if i != j and d.in_degrees[j]:
                g.add_edge(("o", i), ("i", j), capacity=1)
    if d.m == 0:
        return Digraph(d.n, ())
    value, flow = nx.maximum_flow(g, "s", "t")
    if value < d.m:
        return None
    edges = []
    for i in range(d.n):
        for target, f in flow.get(("o", i), {}).items():
            if f:
                edges.append((i, target[1]))
    return Digraph(d.n, tuple(sorted(edges)))
