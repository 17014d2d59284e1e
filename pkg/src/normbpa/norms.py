"""Strong, weak and base-relative semantic norms."""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from typing import Iterable

from .system import TAU, BpaError, BpaSystem, NormOverflow, Process, Unnormed, step

NORM_LIMIT = 2**128


class NormUnavailable(BpaError):
    def __init__(self, block):
        super().__init__(f"no norm recorded for block {block}")
        self.block = block


def constant_norms(sys: BpaSystem, weak: bool, check: bool = True) -> list[int | None]:
    """Per-constant norm table; ``None`` marks constants that cannot reach eps.

    Round-robin relaxation: each rule costs its own step (0 for a silent step
    when ``weak``) plus the norms of its right-hand side.
    """
    key = ("weak-norms" if weak else "strong-norms")

    def compute():
        norms: list[int | None] = [None] * sys.size
        changed = True
        while changed:
            changed = False
            for rule in sys.rules:
                cost = 0 if (weak and rule.action == TAU) else 1
                total = cost
                for y in rule.rhs:
                    if norms[y] is None:
                        break
                    total += norms[y]
                else:
                    if total > NORM_LIMIT:
                        raise NormOverflow(f"norm of {sys.constants[rule.lhs]} exceeds {NORM_LIMIT}")
                    cur = norms[rule.lhs]
                    if cur is None or total < cur:
                        norms[rule.lhs] = total
                        changed = True
        return norms

    norms = sys.memo(key, compute)
    if check and any(v is None for v in norms):
        raise Unnormed([sys.constants[i] for i, v in enumerate(norms) if v is None])
    return norms


def strong_norm(sys: BpaSystem, p: Iterable[int]) -> int:
    table = constant_norms(sys, weak=False)
    return sum(table[x] for x in p)


def weak_norm(sys: BpaSystem, p: Iterable[int]) -> int:
    table = constant_norms(sys, weak=True)
    return sum(table[x] for x in p)


def semantic_norm(base, ref: frozenset[int], p: Process) -> int:
    """Sum of the recorded block norms over the decomposition of ``p``."""
    total = 0
    for block in base.dcmp(ref, p):
        d = base.norm_of(block)
        if d is None:
            raise NormUnavailable(block)
        total += d
    return total


def witness_path(base, ref: frozenset[int], p: Process, max_states: int = 20000):
    """A shortest path to eps where class-preserving silent steps are free.

    Returns a list of ``(source, action, target, decreasing)`` tuples over
    R-normal forms.  The number of decreasing steps is the norm of ``p``
    measured directly on the transition graph, independent of the norms
    stored in the base.
    """
    from .relative import r_normal_form, r_transitions

    sys = base.system
    ref = base.id_of(ref)
    start = r_normal_form(p, ref)
    key = {}

    def cls(q):
        if q not in key:
            key[q] = base.dcmp(ref, q)
        return key[q]

    dist = {start: 0}
    parent: dict = {start: None}
    counter = itertools.count()
    heap = [(0, next(counter), start)]
    while heap:
        d, _, q = heapq.heappop(heap)
        if d > dist[q]:
            continue
        if not q:
            path = []
            while parent[q] is not None:
                src, action, dec = parent[q]
                path.append((src, action, q, dec))
                q = src
            return path[::-1]
        for action, t in r_transitions(sys, ref, q):
            dec = not (action == TAU and cls(t) == cls(q))
            nd = d + (1 if dec else 0)
            if t not in dist or nd < dist[t]:
                if len(dist) >= max_states:
                    raise NormOverflow("witness search exceeded its state cap")
                dist[t] = nd
                parent[t] = (q, action, dec)
                heapq.heappush(heap, (nd, next(counter), t))
    raise Unnormed([sys.show(p)])


def shortest_path_length(sys: BpaSystem, p: Process, weak: bool = False, max_states: int = 20000) -> int:
    """Breadth-first shortest path to eps on concrete processes (test oracle)."""
    dist = {tuple(p): 0}
    dq = deque([tuple(p)])
    while dq:
        q = dq.popleft()
        if not q:
            return dist[q]
        for action, t in step(sys, q):
            w = 0 if (weak and action == TAU) else 1
            nd = dist[q] + w
            if t not in dist or nd < dist[t]:
                if len(dist) >= max_states:
                    raise NormOverflow("search exceeded its state cap")
                dist[t] = nd
                if w == 0:
                    dq.appendleft(t)
                else:
                    dq.append(t)
    raise Unnormed([sys.show(p)])

