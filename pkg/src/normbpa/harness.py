"""Random systems, differential fuzzing against the oracle, and property checks."""

from __future__ import annotations

import logging
import random
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .base import DecompositionBase, dump_base, dump_ids, validate_base
from .norms import semantic_norm, witness_path
from .oracle import OracleSession, Overflow, check_bisimulation, computation_problems, explore_fragment, oracle_decide
from .refine import EngineConfig, IterationTrace, compute_fixpoint
from .relative import qualify, ref_key, show_ref, view
from .system import TAU, BpaError, BpaSystem, NormOverflow, Rule, format_system, parse_system, validate_normed

logger = logging.getLogger(__name__)

VISIBLE = ("a", "b")

EXAMPLE_ONE = """\
constants: A0 A1 B C
rules:
A0 -a-> A1
A1 -a-> A0
A0 -b-> eps
A1 -b-> B
B -a-> eps
B -tau-> eps
C -a-> C
C -tau-> eps
"""


class InfeasibleParams(BpaError):
    pass


@dataclass
class GenParams:
    consts: int = 4
    rules: int = 8
    max_rhs: int = 2
    ground_frac: float = 0.5
    silent_frac: float = 0.4
    seed: int = 0
    keep_expanding: float = 1.0  # chance of keeping a system with unbounded fragments


def _rhs_length(rng: random.Random, max_rhs: int) -> int:
    # short right-hand sides keep most fragments finite
    weights = [0.35, 0.45, 0.2] + [0.05] * max(0, max_rhs - 2)
    return rng.choices(range(max_rhs + 1), weights=weights[: max_rhs + 1])[0]


def generate_system(params: GenParams) -> BpaSystem:
    """A random normed system with exactly ``floor(ground_frac * consts)`` ground constants.

    Systems whose reachable state space from some constant is unbounded are
    redrawn unless a ``keep_expanding`` coin says otherwise.
    """
    rng = random.Random(params.seed)
    for _ in range(1000):
        sys = _draw_system(params, rng)
        if params.keep_expanding >= 1 or is_bounded(sys) or rng.random() < params.keep_expanding:
            return sys
    raise InfeasibleParams("no bounded system found for these parameters")


def is_bounded(sys: BpaSystem, max_states: int = 2000, max_len: int = 12) -> bool:
    try:
        explore_fragment(sys, frozenset(), [(x,) for x in range(sys.size)], max_states, max_len)
    except Overflow:
        return False
    return True


def _draw_system(params: GenParams, rng: random.Random) -> BpaSystem:
    n, m = params.consts, params.rules
    if n < 1 or m < n:
        raise InfeasibleParams("need at least one constant and one rule per constant")
    if params.max_rhs < 0 or not (0 <= params.ground_frac <= 1) or not (0 <= params.silent_frac <= 1):
        raise InfeasibleParams("fractions must lie in [0, 1] and max_rhs must be >= 0")
    g = int(params.ground_frac * n)
    silent = round(params.silent_frac * m)
    if params.silent_frac == 0:
        if g:
            raise InfeasibleParams("ground constants need silent rules")
    else:
        silent = max(silent, g)
    if silent > m:
        raise InfeasibleParams("more silent rules than rules")
    names = [f"X{i}" for i in range(n)] if n > 1 else ["X"]
    order = list(range(n))
    rng.shuffle(order)
    ground_set = set(rng.sample(range(n), g))
    # norm order: ground constants first so every ground one can erase silently
    order.sort(key=lambda x: x not in ground_set)
    rules: list[Rule] = []
    seen: set[Rule] = set()

    def add(rule: Rule) -> bool:
        if rule in seen:
            return False
        seen.add(rule)
        rules.append(rule)
        return True

    for pos, x in enumerate(order):
        earlier = order[:pos]
        if x in ground_set:
            pool = [y for y in earlier if y in ground_set]
            length = _rhs_length(rng, params.max_rhs) if pool else 0
            add(Rule(x, TAU, tuple(rng.choice(pool) for _ in range(length))))
        else:
            if not earlier:
                add(Rule(x, VISIBLE[0], ()))
                continue
            length = _rhs_length(rng, params.max_rhs)
            add(Rule(x, rng.choice(VISIBLE), tuple(rng.choice(earlier) for _ in range(length))))
    extra_silent = silent - g
    extra_visible = m - n - extra_silent
    if extra_visible < 0:
        raise InfeasibleParams("silent fraction too high for the ground constants requested")
    non_ground = [x for x in range(n) if x not in ground_set]
    for kind, count in (("silent", extra_silent), ("visible", extra_visible)):
        for _ in range(count):
            for _attempt in range(200):
                if kind == "silent":
                    lhs = rng.randrange(n)
                    if lhs not in ground_set and not non_ground:
                        continue
                    length = _rhs_length(rng, params.max_rhs)
                    rhs = [rng.randrange(n) for _ in range(length)]
                    if lhs not in ground_set and not any(y not in ground_set for y in rhs):
                        # keep lhs non-ground: plant a non-ground constant
                        if not rhs:
                            rhs = [rng.choice(non_ground)]
                        else:
                            rhs[rng.randrange(len(rhs))] = rng.choice(non_ground)
                    rule = Rule(lhs, TAU, tuple(rhs))
                else:
                    lhs = rng.randrange(n)
                    length = _rhs_length(rng, params.max_rhs)
                    rule = Rule(lhs, rng.choice(VISIBLE), tuple(rng.randrange(n) for _ in range(length)))
                if add(rule):
                    break
            else:
                raise InfeasibleParams("could not draw enough distinct rules")
    rng.shuffle(rules)
    sys = BpaSystem(tuple(names), tuple(rules))
    validate_normed(sys)
    if set(sys.ground) != ground_set:
        raise InfeasibleParams("ground set drifted during generation")
    return sys


# -- query sampling ------------------------------------------------------------------


def sample_refs(sys: BpaSystem, rng: random.Random, extra: int = 2) -> list[frozenset[int]]:
    ground = sorted(sys.ground)
    refs = [frozenset(), frozenset(ground)] + [frozenset({x}) for x in ground]
    for _ in range(extra):
        refs.append(frozenset(x for x in ground if rng.random() < 0.5))
    out = []
    for r in refs:
        q = qualify(sys, r)
        if q not in out:
            out.append(q)
    return out


def sample_pairs(sys: BpaSystem, rng: random.Random, count: int) -> list[tuple[tuple, tuple]]:
    n = sys.size

    def word(lo=1, hi=4):
        return tuple(rng.randrange(n) for _ in range(rng.randint(lo, hi)))

    pairs = []
    while len(pairs) < count:
        kind = len(pairs) % 4
        if kind == 0:
            p, q = (rng.randrange(n),), (rng.randrange(n),)
        elif kind == 1:
            p, q = word(), word()
        elif kind == 2:
            suffix = word(1, 2)
            p, q = word(1, 2) + suffix, word(1, 2) + suffix
        else:
            p = word(0, 3)
            q = p if rng.random() < 0.3 else word(0, 3)
            if rng.random() < 0.5 and sys.ground:
                q = q + (rng.choice(sorted(sys.ground)),)
        pairs.append((p, q))
    return pairs


# -- property checks ----------------------------------------------------------------


def monotonicity_problems(old: DecompositionBase, new: DecompositionBase) -> list[str]:
    sys = new.system
    out = []
    for r in new.id_map:
        if not new.id_map[r] <= old.id_map.get(r, new.id_map[r]):
            out.append(f"Id grew at {show_ref(sys, r)}")
        if old.id_map.get(r) == r and new.id_map[r] != r:
            out.append(f"{show_ref(sys, r)} lost admissibility")
    for r, sl in new.slices.items():
        osl = old.slices.get(r)
        if osl is None:
            continue
        if not osl.primes <= sl.primes:
            out.append(f"a prime became composite at {show_ref(sys, r)}")
        for b in osl.primes & sl.primes:
            if not sl.rd[b] <= osl.rd[b]:
                out.append(f"rd of {b.label(sys)} grew")
    return out


def norm_problems(base: DecompositionBase) -> list[str]:
    """Recorded block norms against norms measured on the transition graph."""
    sys = base.system
    out = []
    for r, sl in base.slices.items():
        for b, d in sl.norm.items():
            try:
                path = witness_path(base, r, (b.rep,))
            except NormOverflow:
                path = None  # infinite class-preserving region, nothing to measure
            measured = None if path is None else sum(1 for step in path if step[3])
            if measured is not None and measured != d:
                out.append(f"norm of {b.label(sys)} recorded {d}, measured {measured}")
            if semantic_norm(base, r, (b.rep,)) != d:
                out.append(f"semantic norm of {b.label(sys)} disagrees with its record")
    return out


def trace_problems(trace: IterationTrace) -> list[str]:
    out = []
    for i, b in enumerate(trace.bases):
        out.extend(f"iteration {i}: {v}" for v in validate_base(b))
    for old, new in zip(trace.bases[1:], trace.bases[2:]):
        out.extend(monotonicity_problems(old, new))
    out.extend(f"uniqueness: {u}" for u in trace.uniqueness_violations)
    return out


def oracle_problems(sys: BpaSystem, session: OracleSession) -> list[str]:
    tag = f"oracle at {show_ref(sys, session.ref)}"
    found = check_bisimulation(session.lts, session.cls) + computation_problems(session.lts, session.cls)
    return [f"{tag}: {p}" for p in found]


def oracle_monotonicity_problems(sys: BpaSystem, verdicts: dict[frozenset, dict]) -> list[str]:
    out = []
    for small, rows in verdicts.items():
        for big, other in verdicts.items():
            if small < big:
                for pq, v in rows.items():
                    if v and other.get(pq) is False:
                        out.append(f"oracle not monotone: {sys.show(pq[0])} ~ {sys.show(pq[1])} lost from "
                                   f"{show_ref(sys, small)} to {show_ref(sys, big)}")
    return out


def congruence_problems(sys: BpaSystem, verdicts: dict[frozenset, dict], rng: random.Random, fp: FuzzParams,
                        samples: int = 3) -> list[str]:
    """Sampled check that equal heads over equal tails stay equal."""
    heads = [pq for pq, v in verdicts.get(frozenset(), {}).items() if v]
    out = []
    for r, rows in verdicts.items():
        tails = [pq for pq, v in rows.items() if v]
        if not heads or not tails:
            continue
        for _ in range(samples):
            (a, b), (c, d) = rng.choice(heads), rng.choice(tails)
            if oracle_decide(sys, r, a + c, b + d, fp.max_states, fp.max_len) is False:
                out.append(f"oracle not a congruence at {show_ref(sys, r)}: {sys.show(a + c)} vs {sys.show(b + d)}")
    return out


# -- differential fuzzing -----------------------------------------------------------


@dataclass
class FuzzParams:
    seed: int = 42
    trials: int = 500
    pairs: int = 24
    max_consts: int = 6
    max_rules: int = 12
    max_states: int = 2000
    max_len: int = 12
    include_example: bool = True
    keep_expanding: float = 0.05
    check_norms: bool = True


@dataclass
class TrialRecord:
    index: int
    system: str
    queries: int = 0
    unknown: int = 0
    mismatches: list[dict] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)
    error: str | None = None
    constructions: int = 0
    fragments: int = 0
    seconds: float = 0.0


@dataclass
class FuzzReport:
    params: FuzzParams
    trials: list[TrialRecord] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def queries(self) -> int:
        return sum(t.queries for t in self.trials)

    @property
    def unknown(self) -> int:
        return sum(t.unknown for t in self.trials)

    @property
    def mismatches(self) -> list[dict]:
        return [m for t in self.trials for m in t.mismatches]

    @property
    def errors(self) -> list[TrialRecord]:
        return [t for t in self.trials if t.error]

    @property
    def problems(self) -> list[str]:
        return [f"trial {t.index}: {p}" for t in self.trials for p in t.problems]

    @property
    def fragments(self) -> int:
        return sum(t.fragments for t in self.trials)

    @property
    def unknown_rate(self) -> float:
        return self.unknown / self.queries if self.queries else 0.0

    @property
    def clean(self) -> bool:
        return not self.mismatches and not self.errors and not self.problems

    def summary(self) -> str:
        return (
            f"trials={len(self.trials)} queries={self.queries} unknown={self.unknown} "
            f"({self.unknown_rate:.1%}) mismatches={len(self.mismatches)} errors={len(self.errors)} "
            f"property_violations={len(self.problems)} fragments_checked={self.fragments} seconds={self.seconds:.1f}"
        )


def trial_params(fp: FuzzParams, rng: random.Random) -> GenParams:
    n = rng.randint(1, fp.max_consts)
    m = rng.randint(n, max(n, min(fp.max_rules, 3 * n)))
    return GenParams(
        consts=n,
        rules=m,
        max_rhs=2,
        ground_frac=rng.choice([0.0, 0.25, 0.5, 0.5, 0.75]),
        silent_frac=rng.choice([0.25, 0.4, 0.5]),
        seed=rng.randrange(2**31),
        keep_expanding=fp.keep_expanding,
    )


def run_trial(sys: BpaSystem, index: int, rng: random.Random, fp: FuzzParams, config: EngineConfig | None = None) -> TrialRecord:
    rec = TrialRecord(index, format_system(sys))
    start = time.perf_counter()
    try:
        base, trace = compute_fixpoint(sys, config or EngineConfig.from_env())
        rec.constructions = trace.constructions
        rec.problems.extend(trace_problems(trace))
        if fp.check_norms:
            rec.problems.extend(norm_problems(base))
    except BpaError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.seconds = time.perf_counter() - start
        return rec
    refs = sample_refs(sys, rng)
    pairs = sample_pairs(sys, rng, fp.pairs)
    seeds = [s for pq in pairs for s in pq]
    sessions = {r: OracleSession(sys, r, seeds, fp.max_states, fp.max_len) for r in refs}
    verdicts: dict[frozenset, dict] = {r: {} for r in refs}
    for i, (p, q) in enumerate(pairs):
        r = refs[i % len(refs)]
        session = sessions[r]
        rec.queries += 1
        verdict = session.equivalent(p, q) if session.complete else oracle_decide(sys, r, p, q, fp.max_states, fp.max_len)
        if verdict is None:
            rec.unknown += 1
            continue
        engine = base.dcmp(r, p) == base.dcmp(r, q)
        if engine != verdict:
            rec.mismatches.append(
                {"ref": sys.show_set(r), "p": sys.show(p), "q": sys.show(q), "engine": engine, "oracle": verdict}
            )
    for r, session in sessions.items():
        if session.complete:
            rec.fragments += 1
            rec.problems.extend(oracle_problems(sys, session))
            verdicts[r] = {pq: session.equivalent(*pq) for pq in pairs}
    rec.problems.extend(oracle_monotonicity_problems(sys, verdicts))
    rec.problems.extend(congruence_problems(sys, verdicts, rng, fp))
    rec.seconds = time.perf_counter() - start
    return rec


def fuzz_compare(fp: FuzzParams, reproducer_dir: str | Path | None = None, progress=None) -> FuzzReport:
    rng = random.Random(fp.seed)
    report = FuzzReport(fp)
    start = time.perf_counter()
    for i in range(fp.trials):
        if i == 0 and fp.include_example:
            sys = parse_system(EXAMPLE_ONE)
        else:
            while True:
                try:
                    sys = generate_system(trial_params(fp, rng))
                    break
                except InfeasibleParams:
                    continue
        rec = run_trial(sys, i, random.Random(rng.randrange(2**31)), fp)
        report.trials.append(rec)
        if rec.mismatches and reproducer_dir is not None:
            write_reproducer(Path(reproducer_dir), rec)
        if progress:
            progress(rec)
    report.seconds = time.perf_counter() - start
    return report


def write_reproducer(directory: Path, rec: TrialRecord) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"trial{rec.index:04d}.bpa"
    lines = [rec.system.rstrip("\n")]
    for mm in rec.mismatches:
        lines.append(f"# query: ref={mm['ref']} p={mm['p']} q={mm['q']} engine={mm['engine']} oracle={mm['oracle']}")
    path.write_text("\n".join(lines) + "\n")
    return path


_QUERY = re.compile(r"^# query: ref=(\S*) p=(\S+) q=(\S+) engine=\w+ oracle=\w+$")


def replay_reproducer(path: str | Path, max_states: int = 2000, max_len: int = 12) -> list[dict]:
    """Re-run every recorded query of a reproducer file; returns the ones that still disagree."""
    text = Path(path).read_text(encoding="utf-8")
    sys = parse_system(text)
    base, _ = compute_fixpoint(sys, EngineConfig.from_env())
    out = []
    for line in text.splitlines():
        m = _QUERY.match(line.strip())
        if not m:
            continue
        r = qualify(sys, sys.ref_set(m.group(1)))
        p, q = sys.process(m.group(2)), sys.process(m.group(3))
        engine = base.dcmp(r, p) == base.dcmp(r, q)
        verdict = oracle_decide(sys, r, p, q, max_states, max_len)
        if verdict is not None and verdict != engine:
            out.append({"ref": m.group(1), "p": m.group(2), "q": m.group(3), "engine": engine, "oracle": verdict})
    return out


def run_report(text: str, config: EngineConfig | None = None) -> tuple[list[str], str]:
    """Tables of the distinct bases plus a one-line summary for a system file."""
    sys = parse_system(text)
    base, trace = compute_fixpoint(sys, config)
    # the last construction only confirms the fixpoint, so it repeats the table before it
    tables = trace.dumps()[:-1]
    blocks = sum(len(view(sys, r).blocks) for r in base.slices)
    max_norm = max((d for sl in base.slices.values() for d in sl.norm.values()), default=0)
    summary = (
        f"constructions={trace.constructions} slices={len(base.slices)} "
        f"blocks={blocks} max_norm={max_norm}"
    )
    return tables, summary
