"""Bounded breadth-first search over silent steps, used as an independent referee."""

from __future__ import annotations

from collections import deque

from normbpa.relative import r_normal_form, r_transitions
from normbpa.system import TAU


class Truncated(Exception):
    pass


def silent_closure(sys, ref, start, max_len=8, max_states=10_000):
    """All R-normal forms reachable from ``start`` by silent R-transitions."""
    ref = frozenset(ref)
    start = r_normal_form(tuple(start), ref)
    seen = {start}
    dq = deque([start])
    while dq:
        p = dq.popleft()
        for action, q in r_transitions(sys, ref, p):
            if action != TAU or q in seen:
                continue
            if len(q) > max_len or len(seen) >= max_states:
                raise Truncated
            seen.add(q)
            dq.append(q)
    return seen


def reaches(sys, ref, start, target, **caps) -> bool:
    """``start =>_R target`` where ``target`` is a constant or ``None`` for eps."""
    goal = () if target is None else r_normal_form((target,), frozenset(ref))
    return goal in silent_closure(sys, ref, start, **caps)


def propagating(sys, ref, members, **caps) -> set[int]:
    out = set()
    for x in members:
        for s in silent_closure(sys, ref, (x,), **caps):
            if len(s) >= 2 and s[-1] in members and all(y in sys.ground for y in s[:-1]):
                out.add(s[0])
    return out
