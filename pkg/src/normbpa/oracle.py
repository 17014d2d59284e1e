"""Brute-force referee: relative bisimilarity on a finite, closed fragment.

The fragment is the set of R-normal forms reachable from the seeds.  On it the
relation is computed by signature-based partition refinement for branching
bisimulation, starting from the split into ground and non-ground states.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .relative import r_normal_form, r_transitions
from .system import TAU, BpaError, BpaSystem, Process, is_ground


class Overflow(BpaError):
    def __init__(self, which: str):
        super().__init__(f"fragment exceeded the {which} cap")
        self.which = which


@dataclass
class FiniteLts:
    states: list[Process]
    index: dict[Process, int]
    edges: list[list[tuple[str, int]]]
    ground: list[bool]
    seeds: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.states)


def explore_fragment(
    sys: BpaSystem,
    ref: Iterable[int],
    seeds: Iterable[Process],
    max_states: int = 2000,
    max_len: int = 12,
) -> FiniteLts:
    """Breadth-first closure of the seeds under R-transitions."""
    ref = frozenset(ref)
    states: list[Process] = []
    index: dict[Process, int] = {}
    edges: list[list[tuple[str, int]]] = []
    queue: deque[Process] = deque()

    def add(p: Process) -> int:
        i = index.get(p)
        if i is None:
            if len(p) > max_len:
                raise Overflow("length")
            if len(states) >= max_states:
                raise Overflow("state")
            i = len(states)
            index[p] = i
            states.append(p)
            edges.append([])
            queue.append(p)
        return i

    seed_ids = [add(r_normal_form(tuple(s), ref)) for s in seeds]
    while queue:
        p = queue.popleft()
        i = index[p]
        edges[i] = [(a, add(q)) for a, q in r_transitions(sys, ref, p)]
    ground = [is_ground(sys, p) for p in states]
    return FiniteLts(states, index, edges, ground, seed_ids)


def relative_bisim_finite(lts: FiniteLts) -> list[int]:
    """Class number per state of the coarsest relative bisimulation on ``lts``."""
    n = len(lts)
    cls = [0 if g else 1 for g in lts.ground]
    count = len(set(cls))
    while True:
        sigs = _signatures(lts, cls)
        keys: dict = {}
        new = [keys.setdefault((cls[i], sigs[i]), len(keys)) for i in range(n)]
        if len(keys) == count:
            return new
        cls, count = new, len(keys)


def _signatures(lts: FiniteLts, cls: list[int]) -> list[frozenset]:
    n = len(lts)
    sig = [set() for _ in range(n)]
    inert_pred: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for a, j in lts.edges[i]:
            if a == TAU and cls[j] == cls[i]:
                inert_pred[j].append(i)
            else:
                sig[i].add((a, cls[j]))
    # a state inherits everything offered after silent steps inside its class
    work = deque(range(n))
    queued = [True] * n
    while work:
        j = work.popleft()
        queued[j] = False
        for i in inert_pred[j]:
            if not sig[j] <= sig[i]:
                sig[i] |= sig[j]
                if not queued[i]:
                    queued[i] = True
                    work.append(i)
    return [frozenset(s) for s in sig]


def oracle_decide(
    sys: BpaSystem,
    ref: Iterable[int],
    p: Process,
    q: Process,
    max_states: int = 2000,
    max_len: int = 12,
) -> bool | None:
    """True/False on a closed fragment; ``None`` when a cap is hit."""
    ref = frozenset(ref)
    try:
        lts = explore_fragment(sys, ref, [p, q], max_states, max_len)
    except Overflow:
        return None
    cls = relative_bisim_finite(lts)
    a, b = lts.seeds
    return cls[a] == cls[b]


class OracleSession:
    """Answers many queries against one fragment per reference set."""

    def __init__(self, sys: BpaSystem, ref: Iterable[int], seeds: Iterable[Process], max_states=2000, max_len=12):
        self.sys = sys
        self.ref = frozenset(ref)
        try:
            self.lts = explore_fragment(sys, self.ref, list(seeds), max_states, max_len)
            self.cls = relative_bisim_finite(self.lts)
        except Overflow:
            self.lts = None
            self.cls = None

    @property
    def complete(self) -> bool:
        return self.lts is not None

    def equivalent(self, p: Process, q: Process) -> bool | None:
        if self.lts is None:
            return None
        i = self.lts.index.get(r_normal_form(tuple(p), self.ref))
        j = self.lts.index.get(r_normal_form(tuple(q), self.ref))
        if i is None or j is None:
            return None
        return self.cls[i] == self.cls[j]


def check_bisimulation(lts: FiniteLts, cls: list[int]) -> list[str]:
    """Re-verify the transfer clauses of the relation given by ``cls``."""
    problems = []
    n = len(lts)
    members: dict[int, list[int]] = {}
    for i in range(n):
        members.setdefault(cls[i], []).append(i)

    def inert_closure(i):
        seen = {i}
        dq = deque([i])
        while dq:
            u = dq.popleft()
            for a, v in lts.edges[u]:
                if a == TAU and cls[v] == cls[i] and v not in seen:
                    seen.add(v)
                    dq.append(v)
        return seen

    closures = [inert_closure(i) for i in range(n)]
    for c, group in members.items():
        if len({lts.ground[i] for i in group}) > 1:
            problems.append(f"class {c} mixes ground and non-ground states")
        for i in group:
            for a, j in lts.edges[i]:
                if a == TAU and cls[j] == c:
                    continue
                for k in group:
                    if not any(
                        b == a and cls[t] == cls[j] for u in closures[k] for b, t in lts.edges[u]
                    ):
                        problems.append(f"{lts.states[k]} cannot match {lts.states[i]} -{a}-> {lts.states[j]}")
                        break
    return problems


def computation_problems(lts: FiniteLts, cls: list[int]) -> list[str]:
    """Silent chains that leave a class and come back must never leave it."""
    silent = [[j for a, j in lts.edges[i] if a == TAU] for i in range(len(lts))]
    reach = []
    for i in range(len(lts)):
        seen = {i}
        stack = [i]
        while stack:
            for j in silent[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        reach.append(seen)
    problems = []
    for i in range(len(lts)):
        for j in reach[i]:
            if cls[j] != cls[i] and any(cls[k] == cls[i] for k in reach[j]):
                problems.append(f"{lts.states[i]} => {lts.states[j]} leaves and re-enters its class")
    return problems
