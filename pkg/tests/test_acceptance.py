"""Acceptance criteria, one PASS/FAIL line each."""

import itertools
import random
import time

import pytest

from normbpa.base import dcmp, dump_base
from normbpa.harness import FuzzParams, GenParams, InfeasibleParams, fuzz_compare, generate_system, run_report
from normbpa.norms import semantic_norm, strong_norm, weak_norm
from normbpa.oracle import oracle_decide
from normbpa.refine import EngineConfig, compute_fixpoint, decide, fixpoint_base
from normbpa.relative import qualify, show_blocks
from normbpa.system import format_system


def verdict(capsys, number, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, detail


HEADER = "block\tref\tord\tnorm\tkind\trd\tdc"

# expected tables, written out by hand
GOLDEN = [
    [
        "[A0]_{B,C}\t{B,C}\t1\t1\tP\t{B,C}\t-",
        "[A1]_{B,C}\t{B,C}\t2\t1\tC\t-\t[A0]_{B,C}",
    ],
    [
        "[A0]_∅\t∅\t1\t1\tP\t{B,C}\t-",
        "[A1]_∅\t∅\t6\t2\tP\t{B,C}\t-",
        "[B]_∅\t∅\t2\t1\tP\t{B,C}\t-",
        "[C]_∅\t∅\t3\t1\tP\t{B,C}\t-",
        "[A0]_{B,C}\t{B,C}\t4\t1\tP\t{B,C}\t-",
        "[A1]_{B,C}\t{B,C}\t5\t1\tC\t-\t[A0]_{B,C}",
    ],
    [
        "[A0]_∅\t∅\t1\t1\tP\t∅\t-",
        "[A1]_∅\t∅\t6\t2\tP\t∅\t-",
        "[B]_∅\t∅\t2\t1\tP\t∅\t-",
        "[C]_∅\t∅\t3\t1\tP\t{B,C}\t-",
        "[A0]_{B,C}\t{B,C}\t4\t1\tP\t{B,C}\t-",
        "[A1]_{B,C}\t{B,C}\t5\t1\tC\t-\t[A0]_{B,C}",
    ],
]


def test_criterion_1_example_one_tables(ex1, capsys):
    start = time.perf_counter()
    tables, summary = run_report(format_system(ex1))
    _, trace = compute_fixpoint(ex1)
    seconds = time.perf_counter() - start
    got = [dump_base(b).splitlines() for b in trace.bases]
    want = [[HEADER] + rows for rows in GOLDEN]
    ok = (
        got[:3] == want
        and got[3] == got[2]
        and trace.constructions == 3
        and [t.split("\n\n", 1)[1].splitlines() for t in tables] == want
        and seconds < 1.0
    )
    verdict(capsys, 1, ok, f"tables={len(tables)} constructions={trace.constructions} seconds={seconds:.2f}")


def test_criterion_2_example_one_decisions(ex1, capsys):
    start = time.perf_counter()
    p = ex1.process
    e = frozenset()
    base = fixpoint_base(ex1)
    checks = [
        decide(ex1, e, p("A0.C"), p("A1.C")) is True,
        decide(ex1, e, p("A0"), p("A1")) is False,
        decide(ex1, e, p("A0.A0.C"), p("A1.A0.C")) is True,
        decide(ex1, e, p("A0.A0"), p("A1.A0")) is False,
        show_blocks(ex1, dcmp(base, e, p("A0.C"))) == "[A0]_{B,C}[C]_∅",
        show_blocks(ex1, dcmp(base, e, p("A1.C"))) == "[A0]_{B,C}[C]_∅",
    ]
    seconds = time.perf_counter() - start
    verdict(capsys, 2, all(checks) and seconds < 1.0, f"checks={sum(checks)}/{len(checks)} seconds={seconds:.2f}")


def test_criterion_3_example_one_families(ex1, capsys):
    start = time.perf_counter()
    a0, a1, c = (ex1.index[n] for n in ("A0", "A1", "C"))
    pairs = bad = 0
    for t in range(1, 5):
        vectors = list(itertools.product((a0, a1), repeat=t))
        for u, v in itertools.product(vectors, repeat=2):
            pairs += 1
            if not decide(ex1, frozenset(), u + (c,), v + (c,)):
                bad += 1
            if decide(ex1, frozenset(), u, v) != (u == v):
                bad += 1
    seconds = time.perf_counter() - start
    verdict(capsys, 3, bad == 0 and seconds < 5.0, f"vector_pairs={pairs} wrong={bad} seconds={seconds:.2f}")


def test_criterion_4_ground_preservation(ex2, capsys):
    r = ex2.ref_set("A1")
    engine = decide(ex2, r, ex2.process("A0"), ())
    oracle = oracle_decide(ex2, r, ex2.process("A0"), ())
    verdict(capsys, 4, engine is False and oracle is False, f"engine={engine} oracle={oracle}")


@pytest.fixture(scope="module")
def gate():
    start = time.perf_counter()
    report = fuzz_compare(FuzzParams(seed=42, trials=500))
    return report, time.perf_counter() - start


def test_criterion_5_differential_gate(gate, capsys):
    report, seconds = gate
    ok = (
        len(report.trials) == 500
        and not report.mismatches
        and not report.errors
        and report.unknown_rate <= 0.10
        and min(t.queries for t in report.trials) >= 20
        and seconds < 600
    )
    verdict(capsys, 5, ok, report.summary())


def sampled_norm_law_failures(count=1000, seed=2024):
    rng = random.Random(seed)
    failures = checked = 0
    while checked < count:
        try:
            sys = generate_system(GenParams(consts=rng.randint(1, 5), rules=rng.randint(5, 10), seed=rng.randrange(2**31)))
        except InfeasibleParams:
            continue
        base, _ = compute_fixpoint(sys)
        for _ in range(20):
            alpha = tuple(rng.randrange(sys.size) for _ in range(rng.randint(0, 4)))
            beta = tuple(rng.randrange(sys.size) for _ in range(rng.randint(0, 4)))
            r = qualify(sys, {x for x in sys.ground if rng.random() < 0.5})
            ok = (
                strong_norm(sys, alpha + beta) == strong_norm(sys, alpha) + strong_norm(sys, beta)
                and weak_norm(sys, alpha + beta) == weak_norm(sys, alpha) + weak_norm(sys, beta)
                and semantic_norm(base, r, alpha) <= strong_norm(sys, alpha)
            )
            failures += not ok
            checked += 1
    return checked, failures


def test_criterion_6_property_suites(gate, capsys):
    report, _ = gate
    cap = EngineConfig().iteration_cap
    checked, norm_failures = sampled_norm_law_failures()
    over_cap = [t.index for t in report.trials if t.constructions > cap or (t.error and "cap" in t.error)]
    fragments = report.fragments
    ok = not report.problems and not report.errors and not over_cap and norm_failures == 0 and fragments > 0
    detail = (
        f"property_violations={len(report.problems)} norm_samples={checked} norm_failures={norm_failures} "
        f"fragments_checked={fragments} over_cap={len(over_cap)} "
        f"max_constructions={max(t.constructions for t in report.trials)}"
    )
    verdict(capsys, 6, ok, detail)
