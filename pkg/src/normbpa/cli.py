"""Command-line entry point ``bpa``."""

from __future__ import annotations

import argparse
import logging
import sys as _sys
from pathlib import Path

from .harness import FuzzParams, GenParams, InfeasibleParams, fuzz_compare, generate_system, run_report
from .norms import constant_norms
from .oracle import oracle_decide
from .refine import EngineConfig, compute_fixpoint
from .relative import qualify, show_ref
from .system import BpaError, format_system, parse_system, validate_normed


def _load(path: str):
    return parse_system(Path(path).read_text(encoding="utf-8"))


def _config(args) -> EngineConfig:
    return EngineConfig.from_env(id_mode=getattr(args, "id_mode", "figure"))


def cmd_check(args) -> int:
    sys = _load(args.file)
    validate_normed(sys)
    base, _ = compute_fixpoint(sys, _config(args))
    ref = qualify(sys, sys.ref_set(args.ref))
    p, q = sys.process(args.p), sys.process(args.q)
    equal = base.dcmp(ref, p) == base.dcmp(ref, q)
    print("EQUIV" if equal else "NONEQUIV")
    print(f"ref\t{show_ref(sys, ref)}")
    print(f"dcmp({args.p})\t{base.show_dcmp(ref, p)}")
    print(f"dcmp({args.q})\t{base.show_dcmp(ref, q)}")
    return 0 if equal else 1


def cmd_base(args) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    tables, summary = run_report(text, _config(args))
    if args.dump_iterations:
        out = Path(args.dump_iterations)
        out.mkdir(parents=True, exist_ok=True)
        for i, table in enumerate(tables):
            (out / f"iteration{i}.tsv").write_text(table, encoding="utf-8")
    for i, table in enumerate(tables):
        title = "initial base" if i == 0 else f"construction {i}"
        print(f"# {title}")
        print(table)
    print(f"# {summary}")
    return 0


def cmd_norms(args) -> int:
    sys = _load(args.file)
    validate_normed(sys)
    strong = constant_norms(sys, weak=False)
    weak = constant_norms(sys, weak=True)
    print("constant\tstrong\tweak")
    for i, name in enumerate(sys.constants):
        print(f"{name}\t{strong[i]}\t{weak[i]}")
    return 0


def cmd_oracle(args) -> int:
    sys = _load(args.file)
    ref = qualify(sys, sys.ref_set(args.ref))
    verdict = oracle_decide(sys, ref, sys.process(args.p), sys.process(args.q), args.max_states, args.max_len)
    print({True: "EQUIV", False: "NONEQUIV", None: "UNKNOWN"}[verdict])
    return {True: 0, False: 1, None: 2}[verdict]


def cmd_gen(args) -> int:
    params = GenParams(
        consts=args.consts,
        rules=args.rules,
        max_rhs=args.max_rhs,
        ground_frac=args.ground_frac,
        silent_frac=args.silent_frac,
        seed=args.seed,
    )
    text = format_system(generate_system(params))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_fuzz(args) -> int:
    fp = FuzzParams(seed=args.seed, trials=args.trials, pairs=args.pairs, max_states=args.max_states, max_len=args.max_len)

    def progress(rec):
        if args.verbose or rec.mismatches or rec.error:
            print(f"trial {rec.index}: queries={rec.queries} mismatches={len(rec.mismatches)} error={rec.error}")

    report = fuzz_compare(fp, reproducer_dir=args.reproducers, progress=progress)
    print(report.summary())
    return 3 if report.mismatches else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bpa", description="Branching bisimilarity on normed BPA.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def engine_opts(p):
        p.add_argument("--id-mode", choices=["figure", "candidate"], default="figure")

    p = sub.add_parser("check", help="decide equivalence with the fixpoint base")
    p.add_argument("file")
    p.add_argument("p")
    p.add_argument("q")
    p.add_argument("--ref", default="")
    engine_opts(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("base", help="print the table of every distinct base")
    p.add_argument("file")
    p.add_argument("--dump-iterations", metavar="DIR")
    engine_opts(p)
    p.set_defaults(func=cmd_base)

    p = sub.add_parser("norms", help="strong and weak norm of every constant")
    p.add_argument("file")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("oracle", help="brute-force verdict on a finite fragment")
    p.add_argument("file")
    p.add_argument("p")
    p.add_argument("q")
    p.add_argument("--ref", default="")
    p.add_argument("--max-states", type=int, default=2000)
    p.add_argument("--max-len", type=int, default=12)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="generate a random normed system")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--consts", type=int, default=4)
    p.add_argument("--rules", type=int, default=8)
    p.add_argument("--max-rhs", type=int, default=2)
    p.add_argument("--ground-frac", type=float, default=0.5)
    p.add_argument("--silent-frac", type=float, default=0.4)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fuzz", help="compare the engine with the oracle on random systems")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--pairs", type=int, default=24)
    p.add_argument("--max-states", type=int, default=2000)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--reproducers", metavar="DIR")
    p.set_defaults(func=cmd_fuzz)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BpaError, InfeasibleParams, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
