"""Indexed fan-out of independent runs.

``map_runs(fn, payload, count, jobs)`` returns ``[fn(payload, k) for k in
range(count)]`` in index order, optionally computed in worker processes.
Each run derives its randomness from its own index, so the output does not
depend on ``jobs``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def _chunk(args):
    fn, payload, lo, hi = args
    return [fn(payload, k) for k in range(lo, hi)]


def map_runs(fn, payload, count: int, jobs: int = 1) -> list:
    if jobs <= 1 or count < 2 * jobs:
        return [fn(payload, k) for k in range(count)]
    step = -(-count // (4 * jobs))
    chunks = [(fn, payload, lo, min(lo + step, count)) for lo in range(0, count, step)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [x for part in pool.map(_chunk, chunks) for x in part]
