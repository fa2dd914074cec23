"""Batch experiment driver.

Subcommands:

* ``run``       adversary vs. a named algorithm; writes the transcript, the
                derived bucketing, and a CSV summary row; exits nonzero when
                an enabled invariant check fails.
* ``verify``    offline re-verification of a transcript file.
* ``bucketing`` exact optimum (brute) or constructive strategy cost (tree)
                against the admissible-depth envelope.
* ``tree``      dump the canonical minimum-depth admissible tree.
* ``bounds``    evaluate the closed-form lower-bound formulas.

Exit status: 0 all enabled checks passed (or were skipped by design),
1 invariant violation, 2 usage or configuration error, 3 algorithm fault.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import adversary as adv_mod
from . import bucketing as buck_mod
from . import trees as trees_mod
from .algorithms import ALGORITHMS, make_algorithm
from .core import AlgorithmFault, CapacityError, StructuralError, ceil_log2
from .transcript import (
    TranscriptParseError,
    load_transcript,
    save_bucketing,
    save_transcript,
)

MAX_M = 2**63 - 1

SUMMARY_COLUMNS = [
    "alg",
    "n",
    "m",
    "k",
    "chi",
    "bucket_cost",
    "sixty_four_chi_plus_9n",
    "lemma1_bound",
    "lemma2_bound",
    "lazy",
    "checks_passed",
]


class ConfigError(Exception):
    pass


def eval_m_expression(expr: str, n: int) -> int:
    """Evaluate an m expression ("n", "2n", "n^2", "n^3" or an integer)
    with exact integer arithmetic, refusing results beyond 2**63 - 1."""
    expr = expr.strip().lower().replace(" ", "")
    if expr == "n":
        m = n
    elif expr == "2n":
        m = 2 * n
    elif expr == "n^2":
        m = n * n
    elif expr == "n^3":
        m = n * n * n
    else:
        try:
            m = int(expr)
        except ValueError:
            raise ConfigError(
                f"bad m expression {expr!r}; use n, 2n, n^2, n^3 or an integer"
            ) from None
    if m > MAX_M:
        raise ConfigError(f"m = {m} exceeds {MAX_M}")
    return m


def run_config(args: argparse.Namespace) -> dict:
    """Merge config file values with flags (flags win) and validate."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    merged = {
        "alg": args.alg or cfg.get("alg"),
        "n": args.n if args.n is not None else cfg.get("n"),
        "m": args.m or cfg.get("m"),
        "r": args.r if args.r is not None else cfg.get("r"),
        "out": args.out or cfg.get("out", "runs"),
        "checks": cfg.get("checks", True) if args.checks is None else args.checks,
    }
    if merged["alg"] is None or merged["n"] is None or merged["m"] is None:
        raise ConfigError("alg, n and m are required (flags or config file)")
    if merged["alg"] not in ALGORITHMS:
        raise ConfigError(
            f"unknown algorithm {merged['alg']!r}; choose from {sorted(ALGORITHMS)}"
        )
    n = int(merged["n"])
    if n < 8:
        raise ConfigError(f"n must be at least 8, got {n}")
    m = eval_m_expression(str(merged["m"]), n)
    if m < n:
        raise ConfigError(f"m must be at least n, got m={m} < n={n}")
    r = merged["r"]
    if r is not None:
        r = int(r)
        if r <= 2 ** (n + 4):
            raise ConfigError(f"r must exceed 2**(n+4) = 2**{n + 4}")
    merged.update(n=n, m=m, r=r)
    return merged


def cmd_run(args: argparse.Namespace) -> int:
    cfg = run_config(args)
    n, m = cfg["n"], cfg["m"]
    r = cfg["r"] if cfg["r"] is not None else adv_mod.default_universe(n)
    algorithm = make_algorithm(cfg["alg"], m)
    try:
        tr = adv_mod.adversary_run(algorithm, n, m, r)
    except (AlgorithmFault, CapacityError) as exc:
        print(f"algorithm fault: {exc}", file=sys.stderr)
        return 3

    btrace, level_sets = buck_mod.derive_bucketing(tr)
    violations = []
    skipped = []
    if cfg["checks"]:
        rep = adv_mod.verify_adversary_transcript(tr)
        red = buck_mod.verify_reduction(tr, btrace, level_sets)
        violations = rep.violations + red.violations
        skipped = rep.skipped + red.skipped

    out_dir = cfg["out"]
    os.makedirs(out_dir, exist_ok=True)
    stem = f"{cfg['alg']}-n{n}-m{m}"
    transcript_path = os.path.join(out_dir, f"{stem}.transcript.jsonl")
    bucketing_path = os.path.join(out_dir, f"{stem}.bucketing.jsonl")
    save_transcript(tr, transcript_path)
    save_bucketing(btrace, bucketing_path)

    chi = tr.total_cost
    cost = buck_mod.bucketing_cost(btrace)
    bounds = buck_mod.lower_bound_report(n, m)
    report = {
        "n": n,
        "m": m,
        "k": btrace.k,
        "chi": chi,
        "bucketing_cost": cost,
        "bound_68": 64 * chi + 9 * n,
        "lemma1_bound": bounds.labeling_bound,
        "lemma2_bound": bounds.bucketing_bound,
        "trivial_bound": bounds.trivial_bound,
        "lazy": tr.all_lazy,
    }
    print(json.dumps(report, sort_keys=True))
    print(f"universe: r = {r if r.bit_length() <= 64 else f'2^{r.bit_length() - 1}'}")
    for v in violations:
        print(f"violation t={v.t} {v.check}: {v.detail}", file=sys.stderr)
    for name in skipped:
        print(f"skipped (non-lazy subject): {name}")

    summary_path = os.path.join(out_dir, "summary.csv")
    write_header = not os.path.exists(summary_path)
    with open(summary_path, "a", newline="") as f:
        w = csv.writer(f)
        if write_header:
            w.writerow(SUMMARY_COLUMNS)
        w.writerow(
            [
                cfg["alg"],
                n,
                m,
                btrace.k,
                chi,
                cost,
                64 * chi + 9 * n,
                f"{bounds.labeling_bound:.6g}",
                f"{bounds.bucketing_bound:.6g}",
                str(tr.all_lazy).lower(),
                str(not violations).lower(),
            ]
        )
    print(f"transcript: {transcript_path}")
    return 0 if not violations else 1


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        tr = load_transcript(args.transcript)
    except OSError as exc:
        print(f"cannot read transcript: {exc}", file=sys.stderr)
        return 2
    except TranscriptParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    rep = adv_mod.verify_adversary_transcript(tr)
    try:
        btrace, level_sets = buck_mod.derive_bucketing(tr)
        red = buck_mod.verify_reduction(tr, btrace, level_sets)
    except StructuralError as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return 1
    violations = rep.violations + red.violations
    for v in violations:
        print(f"violation t={v.t} {v.check}: {v.detail}", file=sys.stderr)
    for name in rep.skipped + red.skipped:
        print(f"skipped (non-lazy subject): {name}")
    if violations:
        return 1
    print(f"transcript ok: {tr.algorithm} n={tr.n} m={tr.m} chi={tr.total_cost}")
    return 0


def cmd_bucketing(args: argparse.Namespace) -> int:
    n, k = args.n, args.k
    try:
        g = trees_mod.min_depth(n, k)
        if args.mode == "brute":
            value = buck_mod.optimal_cost_bruteforce(n, k)
            label = "optimal"
        else:
            tree = trees_mod.build_min_depth_tree(n, k)
            ps = trees_mod.strategy_from_tree(tree, k)
            value = buck_mod.bucketing_cost(buck_mod.replay_p_sequence(k, ps))
            label = "constructive"
    except StructuralError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(
        f"n={n} k={k} {label}_cost={value} g={g} "
        f"envelope=[{g * n / 2:g}, {g * n}]"
    )
    return 0


def cmd_tree(args: argparse.Namespace) -> int:
    try:
        tree = trees_mod.build_min_depth_tree(args.n, args.k)
    except StructuralError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(trees_mod.serialize_tree(tree))
    print(
        f"size={trees_mod.tree_size(tree)} depth={trees_mod.tree_depth(tree)} "
        f"cost={trees_mod.tree_cost(tree)}"
    )
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    try:
        rep = buck_mod.lower_bound_report(args.n, args.m)
    except StructuralError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    print(
        json.dumps(
            {
                "n": rep.n,
                "m": rep.m,
                "k": rep.k,
                "lemma1_bound": rep.labeling_bound,
                "lemma2_bound": rep.bucketing_bound,
                "trivial_bound": rep.trivial_bound,
                "preconditions_met": rep.preconditions_met,
                "notes": list(rep.notes),
            },
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olabel", description="online labeling adversary testbed"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the adversary against an algorithm")
    p_run.add_argument("--alg", choices=sorted(ALGORITHMS), help="subject algorithm")
    p_run.add_argument("--n", type=int, help="number of insertions (>= 8)")
    p_run.add_argument("--m", help="label space: n, 2n, n^2, n^3 or an integer")
    p_run.add_argument("--r", type=int, help="universe size override (> 2^(n+4))")
    p_run.add_argument("--out", help="output directory (default: runs)")
    p_run.add_argument("--config", help="JSON config file; flags override it")
    p_run.add_argument(
        "--no-checks",
        dest="checks",
        action="store_false",
        default=None,
        help="skip invariant verification",
    )
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="re-verify a transcript file")
    p_verify.add_argument("transcript")
    p_verify.set_defaults(func=cmd_verify)

    p_buck = sub.add_parser("bucketing", help="optimal or constructive game cost")
    p_buck.add_argument("--n", type=int, required=True)
    p_buck.add_argument("--k", type=int, required=True)
    p_buck.add_argument("--mode", choices=["brute", "tree"], default="brute")
    p_buck.set_defaults(func=cmd_bucketing)

    p_tree = sub.add_parser("tree", help="dump the canonical min-depth tree")
    p_tree.add_argument("--n", type=int, required=True)
    p_tree.add_argument("--k", type=int, required=True)
    p_tree.set_defaults(func=cmd_tree)

    p_bounds = sub.add_parser("bounds", help="closed-form lower-bound values")
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--m", type=int, required=True)
    p_bounds.set_defaults(func=cmd_bounds)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StructuralError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
