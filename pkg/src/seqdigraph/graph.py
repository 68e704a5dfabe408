"""Simple directed graphs as labeled edge lists."""

from __future__ import annotations

from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Union

import numpy as np

if TYPE_CHECKING:
    from .degrees import DegreeSequence


class Digraph:
    """Edges kept in creation order; identity is by canonical (sorted) form.

    Edges are stored as an ``(m, 2)`` int64 array so large samples avoid a
    tuple per edge; ``edges`` materializes Python tuples on first access.
    """

    __slots__ = ("n", "array", "__dict__")

    def __init__(self, n: int, edges: Union[np.ndarray, Iterable[tuple[int, int]]]):
        self.n = int(n)
        arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
        self.array = arr.reshape(-1, 2)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(map(tuple, self.array.tolist()))

    @property
    def m(self) -> int:
        return len(self.array)

    def canonical(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash((self.n, self.canonical()))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, edges={list(self.edges)!r})"

    def is_simple(self) -> bool:
        a = self.array
        if np.any(a[:, 0] == a[:, 1]):
            return False
        return len(np.unique(a[:, 0] * max(self.n, 1) + a[:, 1])) == len(a)

    def out_degrees(self) -> tuple[int, ...]:
        return tuple(np.bincount(self.array[:, 0], minlength=self.n).tolist())

    def in_degrees(self) -> tuple[int, ...]:
        return tuple(np.bincount(self.array[:, 1], minlength=self.n).tolist())

    def realizes(self, d: "DegreeSequence") -> bool:
        return (
            self.n == d.n
            and self.is_simple()
            and self.out_degrees() == d.out_degrees
            and self.in_degrees() == d.in_degrees
        )

    def relabel(self, index_map, n: int) -> "Digraph":
        return Digraph(n, np.asarray(index_map, dtype=np.int64)[self.array])

    def to_edgelist(self, labels=None, canonical: bool = False) -> str:
        edges = self.canonical() if canonical else self.edges
        name = (lambda v: labels[v]) if labels is not None else str
        return "".join(f"{name(u)} {name(v)}\n" for u, v in edges)
