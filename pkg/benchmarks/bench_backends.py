"""Compare the compiled and pure-Python sampler backends.

For each size the two backends are run on the same seeds; outputs must be
identical (same edges, same log-probability), and median wall times are
reported side by side.

    python3 benchmarks/bench_backends.py --family regular:3 --sizes 100,1000,10000
"""

import argparse
import json
import statistics
import sys
import time

import numpy as np

from seqdigraph import sampler
from seqdigraph.rng import run_stream
from seqdigraph.stats import parse_family


def time_backend(d, backend, seeds):
    times = []
    outs = []
    for s in seeds:
        gen = run_stream(s)
        t0 = time.perf_counter()
        out = sampler.sample_fast(d, gen, backend=backend)
        times.append(time.perf_counter() - t0)
        outs.append(out)
    return statistics.median(times), outs


def same(a, b):
    if a.success != b.success:
        return False
    if not a.success:
        return a.failure_step == b.failure_step
    return np.array_equal(a.graph.array, b.graph.array) and abs(a.log_prob - b.log_prob) <= 1e-9 * max(1.0, abs(a.log_prob))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--family", default="regular:3")
    p.add_argument("--sizes", default="100,1000,10000")
    p.add_argument("--repeats", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = p.parse_args(argv)

    if sampler.BACKEND != "cython":
        print("compiled kernel not available; nothing to compare", file=sys.stderr)
        return 1
    family = parse_family(args.family)
    rows = []
    for n in (int(x) for x in args.sizes.split(",")):
        d = family(n)
        seeds = [args.seed * 1000 + k for k in range(args.repeats)]
        sampler.sample_fast(d, run_stream(args.seed), backend="cython")  # warmup
        t_c, out_c = time_backend(d, "cython", seeds)
        t_p, out_p = time_backend(d, "python", seeds)
        rows.append({
            "n": n, "m": d.m, "d_max": d.d_max,
            "cython_s": t_c, "python_s": t_p, "speedup": t_p / t_c,
            "identical": all(same(a, b) for a, b in zip(out_c, out_p)),
        })

    if args.json:
        print(json.dumps({"family": args.family, "rows": rows}, indent=2))
    else:
        print(f"{'n':>8} {'m':>9} {'d_max':>5} {'cython ms':>10} {'python ms':>10} {'speedup':>8}  same")
        for r in rows:
            print(f"{r['n']:>8} {r['m']:>9} {r['d_max']:>5} {r['cython_s'] * 1e3:>10.3f} "
                  f"{r['python_s'] * 1e3:>10.3f} {r['speedup']:>8.1f}  {r['identical']}")
    return 0 if all(r["identical"] for r in rows) else 2


if __name__ == "__main__":
    sys.exit(main())
