"""Reference-set relative views of a BPA system.

Everything here is a pure function of ``(system, R)``.  Silent reachability
modulo ``R`` is a plain graph problem on the nodes ``C - R`` plus an extra
node for the empty process: a silent rule ``X -tau-> Y1..Yk`` (taken in
R-normal form) lets ``X`` reach ``Yk`` once the prefix ``Y1..Y(k-1)`` is
ground, and reach the empty process when the normal form is empty.  From the
empty process the rules of the constants in ``R`` apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .system import TAU, BpaError, BpaSystem, Process, Rule

EPS = -1  # graph node standing for the empty process

RefSet = frozenset  # frozenset[int], always a subset of the ground constants


class UnqualifiedReferenceSet(BpaError):
    pass


def ref_key(ref: Iterable[int]) -> int:
    """Bitset encoding; sorting by it gives the canonical order of reference sets."""
    return sum(1 << x for x in ref)


def r_normal_form(p: Process, ref: Iterable[int]) -> Process:
    """Strip the longest suffix made of reference constants."""
    if not isinstance(ref, (set, frozenset)):
        ref = frozenset(ref)
    k = len(p)
    while k and p[k - 1] in ref:
        k -= 1
    return tuple(p[:k])


def r_equal(p: Process, q: Process, ref: Iterable[int]) -> bool:
    ref = frozenset(ref)
    return r_normal_form(p, ref) == r_normal_form(q, ref)


def r_transitions(sys: BpaSystem, ref: frozenset[int], p: Process) -> list[tuple[str, Process]]:
    """Transitions between R-normal forms; the empty process borrows the rules of ``ref``."""
    if p:
        head, rest = p[0], p[1:]
        moves = [(r.action, r_normal_form(r.rhs + rest, ref)) for r in sys.rules_of[head]]
    else:
        moves = [
            (r.action, r_normal_form(r.rhs, ref)) for w in sorted(ref) for r in sys.rules_of[w]
        ]
    return list(dict.fromkeys(moves))


@dataclass(frozen=True)
class Block:
    """A class of mutually silently reachable constants relative to ``ref``.

    Identity is the pair ``(ref, rep)`` where ``rep`` is the least member.
    """

    ref: frozenset[int]
    rep: int
    members: frozenset[int] = field(compare=False)
    rank: int = field(compare=False, default=0)

    def label(self, sys: BpaSystem) -> str:
        return f"[{sys.constants[self.rep]}]_{show_ref(sys, self.ref)}"


def show_ref(sys: BpaSystem, ref: Iterable[int]) -> str:
    ref = sorted(ref)
    if not ref:
        return "∅"
    return "{" + ",".join(sys.constants[x] for x in ref) + "}"


def show_blocks(sys: BpaSystem, blocks: Iterable[Block]) -> str:
    blocks = list(blocks)
    if not blocks:
        return "eps"
    return "".join(b.label(sys) for b in blocks)


class RelativeView:
    """Cached silent-reachability tables, blocks and derived moves for one ``R``."""

    def __init__(self, sys: BpaSystem, ref: frozenset[int]):
        self.sys = sys
        self.ref = ref
        self.ground = sys.ground
        self._build_reach()
        self._blocks = None
        self._derived: dict[Block, list[tuple[str, Process]]] = {}
        self._prop_pairs = None

    # -- silent reachability ----------------------------------------------

    def _silent_rules_of(self, node: int) -> list[Rule]:
        if node == EPS:
            return [r for w in sorted(self.ref) for r in self.sys.rules_of[w] if r.silent]
        return [r for r in self.sys.rules_of[node] if r.silent]

    def _build_reach(self):
        g = nx.DiGraph()
        nodes = [EPS] + [x for x in range(self.sys.size) if x not in self.ref]
        g.add_nodes_from(nodes)
        for u in nodes:
            for rule in self._silent_rules_of(u):
                gamma = r_normal_form(rule.rhs, self.ref)
                if not gamma:
                    g.add_edge(u, EPS)
                elif all(y in self.ground for y in gamma[:-1]):
                    g.add_edge(u, gamma[-1])
        self.graph = g
        self.reach = {u: frozenset(nx.descendants(g, u) | {u}) for u in nodes}

    def reaches(self, source: int, target: int) -> bool:
        """Constant-or-EPS level test ``source =>_R target``."""
        if source in self.ref:
            source = EPS
        if target in self.ref:
            target = EPS
        return target in self.reach[source]

    def process_reaches(self, alpha: Process, target: int) -> bool:
        """String-level test ``alpha =>_R target`` for a constant or ``EPS`` target."""
        alpha = r_normal_form(alpha, self.ref)
        if target in self.ref:
            target = EPS
        if not alpha:
            return target in self.reach[EPS]
        if not all(y in self.ground for y in alpha[:-1]):
            return False
        return target in self.reach[alpha[-1]]

    def erasable(self, x: int) -> bool:
        """Whether the constant ``x`` silently reaches eps modulo ``R``."""
        return x in self.ref or EPS in self.reach[x]

    def qualification_violators(self) -> list[int]:
        from_eps = self.reach[EPS]
        return [x for x in range(self.sys.size) if x not in self.ref and x in from_eps and EPS in self.reach[x]]

    # -- blocks ----------------------------------------------------------------

    @property
    def blocks(self) -> list[Block]:
        if self._blocks is None:
            self._blocks = self._build_blocks()
        return self._blocks

    def _build_blocks(self) -> list[Block]:
        if self.qualification_violators():
            raise UnqualifiedReferenceSet(
                f"reference set {show_ref(self.sys, self.ref)} is not qualified"
            )
        cond = nx.condensation(self.graph)
        comps = {
            c: frozenset(m for m in cond.nodes[c]["members"] if m != EPS) for c in cond.nodes
        }
        # repeatedly place the block with least member among those whose
        # silent successors are all placed already (smaller blocks first)
        remaining = {c for c in cond.nodes if comps[c]}
        placed: set = set()
        pending = {c: {s for s in nx.descendants(cond, c) if comps[s]} for c in remaining}
        order = []
        while remaining:
            ready = [c for c in remaining if pending[c] <= placed]
            c = min(ready, key=lambda c: min(comps[c]))
            order.append(c)
            placed.add(c)
            remaining.discard(c)
        out = []
        for rank, c in enumerate(order):
            out.append(Block(self.ref, min(comps[c]), comps[c], rank))
        self._block_of = {m: b for b in out for m in b.members}
        return out

    def block_of(self, x: int) -> Block:
        self.blocks
        return self._block_of[x]

    # -- propagating constants -----------------------------------------------

    def _heads_of_ground(self) -> dict[int, frozenset[int]]:
        """``x -> {Y : x => Y.zeta}`` with ``Y.zeta`` ground, plain reachability."""

        def compute():
            grh = {x: ({x} if x in self.ground else set()) for x in range(self.sys.size)}
            changed = True
            while changed:
                changed = False
                for rule in self.sys.rules:
                    if not rule.silent or not rule.rhs:
                        continue
                    if not all(y in self.ground for y in rule.rhs):
                        continue
                    acc = grh[rule.lhs]
                    before = len(acc)
                    for y in rule.rhs:
                        acc |= grh[y]
                    changed |= len(acc) != before
            return {x: frozenset(v) for x, v in grh.items()}

        return self.sys.memo("ground-heads", compute)

    def _head_bottom_pairs(self) -> dict[int, frozenset[tuple[int, int]]]:
        """``node -> {(Y, X') : node =>_R Y.zeta.X'}`` with ``Y.zeta`` ground and ``X'`` outside R."""
        if self._prop_pairs is not None:
            return self._prop_pairs
        grh = self._heads_of_ground()
        nodes = [EPS] + [x for x in range(self.sys.size) if x not in self.ref]
        pairs: dict[int, set] = {u: set() for u in nodes}
        edges: dict[int, list[int]] = {u: [] for u in nodes}
        for u in nodes:
            for rule in self._silent_rules_of(u):
                gamma = r_normal_form(rule.rhs, self.ref)
                if not gamma:
                    edges[u].append(EPS)
                    continue
                if not all(y in self.ground for y in gamma[:-1]):
                    continue
                bottom = gamma[-1]
                for y in gamma[:-1]:
                    for head in grh[y]:
                        pairs[u].add((head, bottom))
                edges[u].append(bottom)
        changed = True
        while changed:
            changed = False
            for u in nodes:
                acc = pairs[u]
                before = len(acc)
                for v in edges[u]:
                    acc |= pairs[v]
                changed |= len(acc) != before
        self._prop_pairs = {u: frozenset(v) for u, v in pairs.items()}
        return self._prop_pairs

    def propagating(self, block: Block) -> frozenset[int]:
        pairs = self._head_bottom_pairs()
        out = set()
        for x in block.members:
            for head, bottom in pairs[x]:
                if bottom in block.members:
                    out.add(head)
        return frozenset(out)

    # -- derived transitions ---------------------------------------------------

    def derived(self, block: Block) -> list[tuple[str, Process]]:
        moves = self._derived.get(block)
        if moves is None:
            moves = self._build_derived(block)
            self._derived[block] = moves
        return moves

    def _build_derived(self, block: Block) -> list[tuple[str, Process]]:
        rep = block.rep
        out = []
        for x in sorted(block.members):
            for action, alpha in r_transitions(self.sys, self.ref, (x,)):
                if action == TAU and self.process_reaches(alpha, rep):
                    continue
                out.append((action, alpha))
        for y in sorted(self.propagating(block)):
            for rule in self.sys.rules_of[y]:
                if rule.silent and all(z in self.ground for z in rule.rhs):
                    continue
                out.append((rule.action, rule.rhs + (rep,)))
        return list(dict.fromkeys(out))


def view(sys: BpaSystem, ref: Iterable[int]) -> RelativeView:
    ref = frozenset(ref)
    cache = sys.memo("relative-views", dict)
    v = cache.get(ref)
    if v is None:
        v = RelativeView(sys, ref)
        cache[ref] = v
    return v


def silent_reach(sys: BpaSystem, ref: Iterable[int]) -> RelativeView:
    return view(sys, ref)


def ground_contents(sys: BpaSystem) -> dict[int, frozenset[int]]:
    """``x -> constants occurring in ground processes silently reachable from x``."""

    def compute():
        gc = {x: ({x} if x in sys.ground else set()) for x in range(sys.size)}
        changed = True
        while changed:
            changed = False
            for rule in sys.rules:
                if not rule.silent or not all(y in sys.ground for y in rule.rhs):
                    continue
                acc = gc[rule.lhs]
                before = len(acc)
                for y in rule.rhs:
                    acc |= gc[y]
                changed |= len(acc) != before
        return {x: frozenset(v) for x, v in gc.items()}

    return sys.memo("ground-contents", compute)


def is_qualified(sys: BpaSystem, ref: Iterable[int]) -> bool:
    return not view(sys, ref).qualification_violators()


def qualify(sys: BpaSystem, ref: Iterable[int]) -> frozenset[int]:
    """Least qualified superset of ``ref``."""
    ref = frozenset(ref)
    if not ref <= sys.ground:
        raise BpaError("reference set must consist of ground constants")
    while True:
        bad = view(sys, ref).qualification_violators()
        if not bad:
            return ref
        ref = ref | frozenset(bad)


def r_blocks(sys: BpaSystem, ref: Iterable[int]) -> list[Block]:
    """Blocks of ``C - R`` listed in increasing order."""
    return view(sys, ref).blocks


def propagating_constants(sys: BpaSystem, ref: Iterable[int], block: Block) -> frozenset[int]:
    return view(sys, ref).propagating(block)


def derived_transitions(sys: BpaSystem, ref: Iterable[int], block: Block) -> list[tuple[str, Process]]:
    return view(sys, ref).derived(block)
