"""Command-line interface.

Exit codes: 0 ok, 1 unreadable or malformed input, 2 not digraphical,
3 retries exhausted, 4 degrees too large for the acceptance weights,
5 enumeration budget exceeded, 6 verification thresholds not met.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from typing import Optional

from .counting import (
    DEFAULT_ENUM_BUDGET,
    asymptotic_count,
    enumerate_exact,
    estimate_count,
)
from .degrees import DegreeSequence, parse_degree_sequence
from .errors import (
    BudgetExceeded,
    DegreeTooLarge,
    MalformedLine,
    NotDigraphical,
    RetriesExhausted,
    SumMismatch,
)
from .parallel import map_runs
from .psi import psi_trajectory
from .rng import fresh_seed, run_stream
from .sampler import DEFAULT_MAX_RETRIES, run_with_retries
from .stats import bench_runtime, failure_rate, measure_uniformity

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_DIGRAPHICAL = 2
EXIT_RETRIES = 3
EXIT_TOO_LARGE = 4
EXIT_BUDGET = 5
EXIT_VERIFY_FAILED = 6

SCHEMA_VERSION = 1


def _fmt(x: Optional[float]):
    """Floats as JSON-safe values: non-finite becomes null."""
    if x is None or not math.isfinite(x):
        return None
    return x


def _read_degrees(path: Optional[str]) -> DegreeSequence:
    if path is None or path == "-":
        return parse_degree_sequence(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return parse_degree_sequence(fh.read())


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _one_sample(payload, run_index: int):
    d, seed, max_retries, force = payload
    out = run_with_retries(d, run_stream(seed, run_index), max_retries=max_retries,
                           force=force)
    return out.graph.array.tolist(), out.retries_used, out.log_prob, out.log_count_estimate


def cmd_sample(args) -> int:
    d = _read_degrees(args.input)
    try:
        draws = map_runs(_one_sample, (d, args.seed, args.max_retries, args.force),
                         args.samples, args.jobs)
    except RetriesExhausted as exc:
        if not d.digraphical:
            exc.args = (f"{exc} (the degree sequence has no simple realization)",)
        raise
    except DegreeTooLarge:
        # report the root cause when there is nothing to sample at all
        if not d.digraphical:
            raise NotDigraphical("degree sequence has no simple realization") from None
        raise
    name = (lambda v: d.labels[v]) if d.labels is not None else (lambda v: v)
    if args.format == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "seed": args.seed,
            "samples": [
                {"run": k, "retries": retries, "log_prob": _fmt(lp), "log_N": _fmt(ln),
                 "edges": [[name(u), name(v)] for u, v in edges]}
                for k, (edges, retries, lp, ln) in enumerate(draws)
            ],
        }
        _emit(_dump(doc), args.output)
        return EXIT_OK
    lines = [f"# seed={args.seed}\n"]
    for k, (edges, retries, lp, ln) in enumerate(draws):
        lines.append(f"# sample={k} retries={retries} log_prob={lp!r} log_N={ln!r}\n")
        lines.extend(f"{name(u)} {name(v)}\n" for u, v in edges)
    _emit("".join(lines), args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    d = _read_degrees(args.input)
    reduced, _ = d.strip_isolated()
    info = {
        "schema_version": SCHEMA_VERSION,
        "n": d.n,
        "m": d.m,
        "d_max": d.d_max,
        "isolated": d.n - reduced.n,
        "digraphical": d.digraphical,
        "degree_condition": d.satisfies_degree_condition(),
        "weights_positive": reduced.m == 0 or reduced.max_weight_product < 2 * reduced.m,
    }
    if args.format == "json":
        _emit(_dump(info), args.output)
    else:
        _emit("".join(f"{k}: {info[k]}\n" for k in sorted(info)), args.output)
    return EXIT_OK if info["digraphical"] else EXIT_NOT_DIGRAPHICAL


def cmd_count(args) -> int:
    d = _read_degrees(args.input)
    est = estimate_count(d, args.seed, args.samples, jobs=args.jobs)
    rec = est.to_record()
    rec["schema_version"] = SCHEMA_VERSION
    rec["seed"] = args.seed
    if d.m:
        log_a = asymptotic_count(d)
        rec["asymptotic_log_count"] = log_a
        rec["asymptotic_count"] = _fmt(math.exp(log_a) if log_a < 700 else math.inf)
    else:
        rec["asymptotic_log_count"] = None
        rec["asymptotic_count"] = None
    rec["asymptotic_valid"] = d.satisfies_degree_condition()
    try:
        rec["exact"] = enumerate_exact(d, budget=args.budget)[0]
    except BudgetExceeded:
        rec["exact"] = None
    _emit(_dump(rec), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    d = _read_degrees(args.input)
    if not d.digraphical:
        raise NotDigraphical("degree sequence has no simple realization")
    uni = measure_uniformity(d, args.samples, args.seed, budget=args.budget,
                             max_retries=args.max_retries, jobs=args.jobs)
    checks = {
        "tv_below_threshold": uni.tv_distance < args.tv_threshold,
        "tv_near_baseline": uni.tv_distance - uni.baseline_tv <= args.baseline_margin,
        "support_covered": not uni.missing,
        "no_out_of_support": uni.out_of_support == 0,
    }
    try:
        fail = failure_rate(d, args.samples, args.seed, jobs=args.jobs)
        checks["failure_gap_bound"] = True
        fail_rec = fail.to_record()
    except AssertionError as exc:
        checks["failure_gap_bound"] = False
        fail_rec = {"error": str(exc)}
    passed = all(checks.values())
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": args.seed,
        "uniformity": uni.to_record(),
        "failure": fail_rec,
        "checks": checks,
        "thresholds": {"tv": args.tv_threshold, "baseline_margin": args.baseline_margin},
        "passed": passed,
    }
    _emit(_dump(doc), args.output)
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    ref = tuple(int(s) for s in args.reference_sizes.split(",")) if args.reference_sizes else ()
    table = bench_runtime(args.family, sizes, repeats=args.repeats, seed=args.seed,
                          reference_sizes=ref)
    rec = table.to_record()
    rec["seed"] = args.seed
    _emit(_dump(rec), args.output)
    return EXIT_OK


def cmd_psi_diag(args) -> int:
    d = _read_degrees(args.input)
    traj = psi_trajectory(d, run_stream(args.seed))
    traj["schema_version"] = SCHEMA_VERSION
    traj["seed"] = args.seed
    _emit(_dump(traj), args.output)
    return EXIT_OK if traj["exact_match"] and not traj["bound_violations"] else EXIT_VERIFY_FAILED


COMMANDS = {
    "sample": cmd_sample,
    "check": cmd_check,
    "count": cmd_count,
    "verify": cmd_verify,
    "bench": cmd_bench,
    "psi-diag": cmd_psi_diag,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", help="degree file, one 'out in' or 'id out in' per line (default stdin)")
    common.add_argument("--out", dest="output", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=None, help="root seed (default: fresh entropy, echoed in output)")
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--max-retries", type=int, default=DEFAULT_MAX_RETRIES)
    common.add_argument("--jobs", type=int, default=1, help="worker processes; output order is unaffected")
    common.add_argument("--budget", type=int, default=DEFAULT_ENUM_BUDGET, help="enumeration budget")
    common.add_argument("--format", choices=("edgelist", "json"), default="edgelist")
    common.add_argument("--force", action="store_true", help="sample even when some out_i*in_j >= 2m (biased)")

    parser = argparse.ArgumentParser(prog="seqdigraph", description="Sample and count simple digraphs with given degrees.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="draw graphs")
    sub.add_parser("check", parents=[common], help="digraphicality and regime checks")
    sub.add_parser("count", parents=[common], help="estimate the number of realizations")
    p = sub.add_parser("verify", parents=[common], help="uniformity and failure diagnostics on a small instance")
    p.add_argument("--tv-threshold", type=float, default=0.05)
    p.add_argument("--baseline-margin", type=float, default=0.05)
    p = sub.add_parser("bench", parents=[common], help="runtime scaling")
    p.add_argument("--family", default="regular:3", help="regular:K or heavy[:EXPONENT]")
    p.add_argument("--sizes", default="1000,10000,100000")
    p.add_argument("--repeats", type=int, default=7)
    p.add_argument("--reference-sizes", default="")
    sub.add_parser("psi-diag", parents=[common], help="per-step denominator components of one run")
    return parser


_DEFAULT_SAMPLES = {"sample": 1, "count": 1000, "verify": 10000}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = fresh_seed()
    if args.samples is None:
        args.samples = _DEFAULT_SAMPLES.get(args.command, 1)
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    warnings.formatwarning = lambda msg, cat, *rest, **kw: f"warning: {msg}\n"
    try:
        return COMMANDS[args.command](args)
    except NotDigraphical as exc:
        code, err = EXIT_NOT_DIGRAPHICAL, exc
    except DegreeTooLarge as exc:
        code, err = EXIT_TOO_LARGE, exc
    except RetriesExhausted as exc:
        code, err = EXIT_RETRIES, exc
    except BudgetExceeded as exc:
        code, err = EXIT_BUDGET, exc
    except (MalformedLine, SumMismatch, OSError, ValueError) as exc:
        code, err = EXIT_INPUT, exc
    print(f"error: {err}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
