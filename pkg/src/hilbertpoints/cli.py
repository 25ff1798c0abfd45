"""Command-line front end.

Every command writes one JSON report to stdout and a short human summary to
stderr.  Exit codes: 0 ok, 2 input error, 3 internal disagreement, 4
counterexample found.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from functools import partial

import numpy as np

from . import __version__
from .certify import (
    DEFAULT_TOL,
    TrivialFieldError,
    is_near_boundary,
    projection_pnorm,
    two_valued_check,
)
from .geometry import (
    GeometryError,
    lemma1a_decompose,
    lemma1b_orthogonality,
    lemma3_check,
    orthogonality_bound,
    random_lemma1a_instance,
    random_lemma1b_triple,
    random_orthogonal_family,
)
from .oracle import OracleOptions, hilbert_oracle
from .rademacher import EXPAND_GUARD, RademacherSum, TrivialSumError, classify, expand
from .search import DEFAULT_PS, SEARCH_MODES, cross_validate, parallel_map, run_search, trial_rng
from .space import Field, SizeError, StructuralError, parse_exponent

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DISAGREE = 3
EXIT_COUNTEREXAMPLE = 4


class InputError(Exception):
    pass


def _canonical(obj) -> str:
    """Sorted keys, no whitespace, floats as 17 significant digits."""
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + _canonical(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, float)):
        return format(float(obj), ".17g")
    return json.dumps(obj)


def digest(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()


def _item_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _fmt_p(p: float):
    return "inf" if math.isinf(p) else p


def _load(path: str):
    try:
        with (sys.stdin if path == "-" else open(path)) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    items = data if isinstance(data, list) else [data]
    if not items:
        raise InputError(f"{path}: empty instance list")
    return data, items


def _parse_items(items, parse, path):
    out = []
    for i, raw in enumerate(items):
        try:
            out.append(parse(raw))
        except StructuralError as exc:
            where = f"instance {i}: " if len(items) > 1 else ""
            raise InputError(f"{path}: {where}{exc}") from None
    return out


# ---------------------------------------------------------------------------
# per-item workers (module level so worker processes can pickle them)


def _certify_item(i, fields, ps, tol, seed, oracle_kw):
    rows, times = [], []
    for j, p in enumerate(ps):
        opts = OracleOptions(seed=_item_seed(seed, i * len(ps) + j), **oracle_kw)
        t = time.perf_counter()
        row = cross_validate(fields[i], p, tol, opts)
        times.append(time.perf_counter() - t)
        rows.append(dict(row, instance=i))
    return rows, times


def _oracle_item(i, fields, ps, seed, oracle_kw):
    rows, times = [], []
    for j, p in enumerate(ps):
        opts = OracleOptions(seed=_item_seed(seed, i * len(ps) + j), **oracle_kw)
        t = time.perf_counter()
        v = hilbert_oracle(fields[i], p, opts)
        times.append(time.perf_counter() - t)
        rows.append(dict(v.to_json(), instance=i, p=_fmt_p(p)))
    return rows, times


def _classify_item(i, sums, tol):
    s = sums[i]
    t = time.perf_counter()
    label = classify(s, tol)
    row = {"instance": i, **label.to_json(), "is_hilbert": label.is_hilbert}
    if s.k <= EXPAND_GUARD:
        tv = two_valued_check(expand(s), tol)
        near = is_near_boundary(tv.margin, tol, 1e-6)
        row["cross_check"] = {"is_hilbert": tv.is_hilbert, "margin": tv.margin,
                              "near_boundary": near}
        row["agree"] = tv.is_hilbert == label.is_hilbert
        row["disagreement"] = not row["agree"] and not near
    return [row], [time.perf_counter() - t]


def _run_items(fn, n, jobs):
    verdicts, timings = [], []
    for rows, times in parallel_map(fn, range(n), jobs):
        verdicts.extend(rows)
        timings.extend(times)
    return verdicts, timings


# ---------------------------------------------------------------------------
# commands


def cmd_certify(args):
    raw, items = _load(args.path)
    fields = _parse_items(items, Field.from_json, args.path)
    kw = dict(max_iters=args.max_iters, tol=args.oracle_tol, restarts=args.restarts)
    fn = partial(_certify_item, fields=fields, ps=args.ps, tol=args.tol,
                 seed=args.seed, oracle_kw=kw)
    verdicts, timings = _run_items(fn, len(fields), args.jobs)
    bad = [v for v in verdicts if v["disagreement"]]
    summary = {
        "instances": len(fields),
        "checks": len(verdicts),
        "hilbert": sum(v["is_hilbert"] is True for v in verdicts),
        "not_hilbert": sum(v["is_hilbert"] is False for v in verdicts),
        "agree": all(v["agree"] is True for v in verdicts),
        "disagreements": len(bad),
        "near_boundary": sum(v["near_boundary"] for v in verdicts),
    }
    code = EXIT_DISAGREE if bad else EXIT_OK
    lines = [f"instance {v['instance']} p={v['p']}: "
             f"{'hilbert' if v['is_hilbert'] else 'not hilbert'}"
             f"{'' if v['agree'] else ' (routes disagree)'}" for v in verdicts]
    return raw, verdicts, timings, summary, code, lines


def cmd_projnorm(args):
    raw, items = _load(args.path)
    fields = _parse_items(items, Field.from_json, args.path)
    verdicts, timings = [], []
    for i, phi in enumerate(fields):
        for p in args.ps:
            t = time.perf_counter()
            value = projection_pnorm(phi, p)
            timings.append(time.perf_counter() - t)
            verdicts.append({"instance": i, "p": _fmt_p(p), "projection_pnorm": value,
                             "is_one": abs(value - 1.0) <= args.tol})
    summary = {"instances": len(fields), "checks": len(verdicts)}
    lines = [f"instance {v['instance']} p={v['p']}: {v['projection_pnorm']:.12g}"
             for v in verdicts]
    return raw, verdicts, timings, summary, EXIT_OK, lines


def cmd_oracle(args):
    raw, items = _load(args.path)
    fields = _parse_items(items, Field.from_json, args.path)
    kw = dict(max_iters=args.max_iters, tol=args.oracle_tol, restarts=args.restarts)
    fn = partial(_oracle_item, fields=fields, ps=args.ps, seed=args.seed, oracle_kw=kw)
    verdicts, timings = _run_items(fn, len(fields), args.jobs)
    summary = {
        "instances": len(fields),
        "hilbert": sum(v["status"] == "hilbert" for v in verdicts),
        "not_hilbert": sum(v["status"] == "not_hilbert" for v in verdicts),
        "indeterminate": sum(v["status"] == "indeterminate" for v in verdicts),
    }
    lines = [f"instance {v['instance']} p={v['p']}: {v['status']}"
             + (f" (delta {v['delta']:.6g})" if "delta" in v else "") for v in verdicts]
    return raw, verdicts, timings, summary, EXIT_OK, lines


def cmd_classify(args):
    raw, items = _load(args.path)
    sums = _parse_items(items, RademacherSum.from_json, args.path)
    fn = partial(_classify_item, sums=sums, tol=args.tol)
    verdicts, timings = _run_items(fn, len(sums), args.jobs)
    bad = [v for v in verdicts if v.get("disagreement")]
    counts: dict[str, int] = {}
    for v in verdicts:
        counts[v["case"]] = counts.get(v["case"], 0) + 1
    summary = {"instances": len(sums), "cases": dict(sorted(counts.items())),
               "disagreements": len(bad)}
    lines = [f"instance {v['instance']}: {v['case']}"
             + (" (brute force disagrees)" if v.get("disagreement") else "")
             for v in verdicts]
    return raw, verdicts, timings, summary, EXIT_DISAGREE if bad else EXIT_OK, lines


def _lemma_section(name, n, seed, check):
    fails = []
    for i in range(n):
        err = check(trial_rng(seed, i))
        if err is not None:
            fails.append({"trial": i, **err})
    return {"lemma": name, "trials": n, "failures": len(fails),
            "first_failure": fails[0] if fails else None}


def _check_1a(rng, tol):
    dim = int(rng.integers(2, 5))
    u0, u1, u2, v = random_lemma1a_instance(rng, dim)
    try:
        got = lemma1a_decompose(u0, u1, u2, tol)
    except GeometryError as exc:
        return {"error": str(exc)}
    err = float(np.linalg.norm(got - v))
    scale = float(np.linalg.norm(u0))
    return None if err <= 1e-9 * scale else {"error": f"reconstruction off by {err!r}"}


def _check_1b(rng, tol):
    dim = int(rng.integers(3, 5))
    u0, u1, u2 = random_lemma1b_triple(rng, dim)
    try:
        dot = lemma1b_orthogonality(u0, u1, u2, tol)
    except GeometryError as exc:
        return {"error": str(exc)}
    bound = orthogonality_bound(u0, tol)
    return None if abs(dot) <= bound else {"error": f"<u1,u2> = {dot!r} exceeds {bound!r}"}


def _check_3(rng, tol):
    size = int(rng.integers(3, 6))
    fam = random_orthogonal_family(rng, size, size + int(rng.integers(0, 2)))
    try:
        rep = lemma3_check(fam, tol)
    except GeometryError as exc:
        return {"error": str(exc)}
    return None if rep.all_equal else {"error": "vanishing subset sum",
                                       "masks": list(rep.violations)}


def cmd_lemmas(args):
    tol = args.tol
    t = time.perf_counter()
    verdicts = [
        _lemma_section("two_sum_decomposition", args.trials_1a, args.seed,
                       partial(_check_1a, tol=tol)),
        _lemma_section("two_sum_orthogonality", args.trials_1b, args.seed + 1,
                       partial(_check_1b, tol=tol)),
        _lemma_section("subset_sums", args.trials_3, args.seed + 2,
                       partial(_check_3, tol=tol)),
    ]
    timings = [time.perf_counter() - t]
    t = time.perf_counter()
    out = run_search("lemma2", args.trials_2, args.seed + 3, jobs=args.jobs)
    timings.append(time.perf_counter() - t)
    verdicts.append({"lemma": "four_vector_exclusion", "trials": args.trials_2,
                     "failures": out.failures, **out.summary,
                     "first_failure": out.counterexample})
    failed = sum(v["failures"] for v in verdicts)
    summary = {"failures": failed}
    lines = [f"{v['lemma']}: {v['trials']} trials, {v['failures']} failures"
             for v in verdicts]
    raw = {"trials": [args.trials_1a, args.trials_1b, args.trials_3, args.trials_2]}
    return raw, verdicts, timings, summary, EXIT_COUNTEREXAMPLE if failed else EXIT_OK, lines


def cmd_search(args):
    t = time.perf_counter()
    opts = OracleOptions(seed=args.seed, max_iters=args.max_iters, tol=args.oracle_tol,
                         restarts=args.restarts)
    out = run_search(args.mode, args.trials, args.seed, args.dims, args.jobs,
                     ps=args.ps, opts=opts)
    timings = [time.perf_counter() - t]
    summary = out.to_json()
    lines = [f"{args.mode}: {args.trials} trials, {out.failures} counterexamples"]
    if out.counterexample:
        lines.append("minimized counterexample: "
                     + json.dumps(out.counterexample.get("instance", out.counterexample)))
    raw = {"mode": args.mode, "trials": args.trials, "dims": args.dims}
    code = EXIT_COUNTEREXAMPLE if out.failures else EXIT_OK
    return raw, [], timings, summary, code, lines


# ---------------------------------------------------------------------------
# argument parsing


def _exponent(text: str) -> float:
    try:
        return parse_exponent(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _nonneg_int(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {n}")
    return n


def _positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return x


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--p", dest="p", action="append", type=_exponent, metavar="P",
                        help="exponent, repeatable; 'inf' accepted (default 1 1.5 3 4 inf)")
    shared.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    shared.add_argument("--seed", type=_nonneg_int, default=0)
    shared.add_argument("--jobs", type=_positive_int, default=1)
    shared.add_argument("--format", choices=("json",), default="json")
    shared.add_argument("--max-iters", type=_positive_int, default=OracleOptions.max_iters)
    shared.add_argument("--restarts", type=_nonneg_int, default=OracleOptions.restarts)
    shared.add_argument("--oracle-tol", type=_positive_float, default=OracleOptions.tol)

    parser = argparse.ArgumentParser(
        prog="hilbertpoints",
        description="Certify Hilbert points of L^p spaces of vector-valued functions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("certify", "cross-validate all routes on a field"),
                        ("projnorm", "operator norm of the rank-one projection"),
                        ("oracle", "direct minimization test"),
                        ("classify", "classify a Rademacher sum")):
        p = sub.add_parser(name, parents=[shared], help=help_)
        p.add_argument("path", help="instance JSON file (or a list of instances); '-' for stdin")

    p = sub.add_parser("lemmas", parents=[shared], help="randomized checks of the geometric lemmas")
    p.add_argument("--trials-1a", type=_positive_int, default=500)
    p.add_argument("--trials-1b", type=_positive_int, default=500)
    p.add_argument("--trials-3", type=_positive_int, default=200)
    p.add_argument("--trials-2", type=_positive_int, default=100_000)

    p = sub.add_parser("search", parents=[shared], help="randomized counterexample search")
    p.add_argument("--mode", choices=SEARCH_MODES, default="theorem1")
    p.add_argument("--trials", type=_positive_int, default=500)
    p.add_argument("--dims", type=_positive_int, default=3)
    return parser


COMMANDS = {
    "certify": cmd_certify,
    "projnorm": cmd_projnorm,
    "oracle": cmd_oracle,
    "classify": cmd_classify,
    "lemmas": cmd_lemmas,
    "search": cmd_search,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.ps = tuple(args.p) if args.p else DEFAULT_PS
    try:
        raw, verdicts, timings, summary, code, lines = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TrivialSumError:
        print("error: trivial sum", file=sys.stderr)
        return EXIT_INPUT
    except (TrivialFieldError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {
        "command": args.command,
        "tool_version": __version__,
        "seed": args.seed,
        "instance_digest": digest(raw),
        "verdicts": verdicts,
        "summary": summary,
        "exit_code": code,
        "timings": timings,
    }
    json.dump(report, sys.stdout, indent=2, allow_nan=False)
    sys.stdout.write("\n")
    for line in lines:
        print(line, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
