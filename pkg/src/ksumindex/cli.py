"""Command line: gen, build, query, verify, bench-scaling.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .index import IndexFormatError, KSumIndex, deserialize, preprocess
from .inverter import Mode
from .sumfn import (InstanceFormatError, decode, enumerate_sumset, eval_g, format_instance,
                    read_instance)
from .universe import element

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load_index(path: str) -> KSumIndex:
    return deserialize(Path(path).read_bytes())


def _format_answer(found: bool, witness: tuple[int, ...] | None, steps: int) -> str:
    if found:
        return "yes " + " ".join(map(str, witness)) + f" steps={steps}"
    return f"no steps={steps}"


def cmd_gen(args) -> int:
    text = format_instance(bench.make_instance(args.n, args.k, args.seed))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_build(args) -> int:
    inst = read_instance(args.instance)
    idx = preprocess(inst, args.delta, args.mode, seed=args.seed, max_retries=args.max_retries)
    Path(args.out).write_bytes(idx.serialize())
    print(json.dumps({"stored_words": idx.space_words(), "retries": idx.stats.retries,
                      "L": idx.L, "seconds": round(idx.stats.seconds, 3)}))
    return EXIT_OK


def _query_lines(lines, label: str):
    """(value, None) per parsed line, or (None, message) for a malformed one."""
    for lineno, line in enumerate(lines, 1):
        tok = line.strip()
        if not tok:
            continue
        try:
            yield element(int(tok)), None
        except ValueError:
            yield None, f"{label}:{lineno}: malformed element {tok!r}"


def cmd_query(args) -> int:
    if (args.file is None) == (not args.values):
        raise UsageError("give query values or --file, not both")
    idx = _load_index(args.index)
    if args.file is not None:
        source = _query_lines(Path(args.file).read_text().splitlines(), args.file)
    else:
        source = _query_lines(args.values, "argument")
    status = EXIT_OK
    for c, err in source:
        if err is not None:
            print(err, file=sys.stderr)
            status = EXIT_USAGE
            continue
        res = idx.query(c)
        print(_format_answer(res.found, res.witness, res.steps))
    return status


def _parse_verify_mode(text: str) -> int | None:
    if text == "full":
        return None
    if text.startswith("sampled:"):
        try:
            s = int(text.split(":", 1)[1])
        except ValueError:
            s = 0
        if s > 0:
            return s
    raise UsageError(f"verify mode must be 'full' or 'sampled:<positive int>', got {text!r}")


def cmd_verify(args) -> int:
    sample = _parse_verify_mode(args.mode)
    idx = _load_index(args.index)
    inst = read_instance(args.instance)
    if idx.instance != inst:
        raise UsageError("index was not built from this instance (fingerprint mismatch)")
    sumset = enumerate_sumset(inst)
    if sample is None:
        members, outside = sumset.sums, np.zeros(0, dtype=np.uint64)
    else:
        rng = np.random.default_rng(args.seed)
        members = sumset.sums[rng.integers(0, len(sumset), size=sample)]
        outside = bench.query_sample(idx, 2 * sample, rng)[sample:]
    found, witness, _ = idx.query_batch(members)
    bad = [f"missed z={int(z)}" for z in members[~found]]
    for z, code in zip(members[found], witness[found]):
        t = decode(int(code), inst.n, inst.k)
        if eval_g(inst, t) != int(z):
            bad.append(f"bad witness z={int(z)} witness={' '.join(map(str, t))}")
    if outside.size:
        hit, _, _ = idx.query_batch(outside)
        bad += [f"false positive c={int(c)}" for c in outside[hit]]
    for line in dict.fromkeys(bad):
        print(line)
    checked = len(members) + len(outside)
    print(f"{'fail' if bad else 'pass'} checked={checked} problems={len(bad)}")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_bench_scaling(args) -> int:
    grid = _int_list(args.grid, "--grid")
    seeds = _int_list(args.seeds, "--seeds")
    if len(set(grid)) < bench.MIN_FIT_POINTS:
        raise UsageError(f"insufficient points for fit: --grid needs at least "
                         f"{bench.MIN_FIT_POINTS} values")
    report = bench.run_scaling(args.k, args.delta, args.mode, grid, seeds, args.queries)
    if args.out:
        report.write_csv(args.out)
    try:
        summary = report.summary()
    except bench.InsufficientPointsError as exc:
        print(json.dumps({"rows": len(report.rows), "failures": report.failures,
                          "error": str(exc)}))
        return EXIT_FAIL
    print(json.dumps(summary))
    return EXIT_OK


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"{flag} must be a comma separated list of integers") from None


def _delta(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("delta must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksumindex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="preprocess an instance into a verified index")
    p.add_argument("instance")
    p.add_argument("--delta", type=_delta, default=0.75)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.GENERAL.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer sum queries")
    p.add_argument("index")
    p.add_argument("values", nargs="*", help="query elements")
    p.add_argument("--file", help="one query element per line")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="check an index against its instance")
    p.add_argument("index")
    p.add_argument("instance")
    p.add_argument("--mode", default="full", help="full or sampled:<s>")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench-scaling", help="build over a grid of n and fit slopes")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--delta", type=_delta, default=0.75)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.GENERAL.value)
    p.add_argument("--grid", default="64,128,256,512,1024")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_bench_scaling)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, InstanceFormatError, IndexFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
