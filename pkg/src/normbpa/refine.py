"""Iterative refinement of decomposition bases up to the fixpoint.

Each round takes the previous base ``D`` and builds a finer base ``B``: it
recomputes the identity sets, then classifies the blocks of every admissible
reference set level by level (level = semantic norm) as prime or composite.
"""

from __future__ import annotations

import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .base import BaseSlice, DecompositionBase, NotApplicable, base_equal, dump_base, dump_ids
from .norms import constant_norms
from .relative import Block, ground_contents, qualify, r_transitions, ref_key, view
from .system import TAU, BpaError, BpaSystem, Process, validate_normed

logger = logging.getLogger(__name__)


class IterationCapExceeded(BpaError):
    pass


class SliceCapExceeded(BpaError):
    pass


class DegenerateAllGround(BpaError):
    pass


@dataclass
class EngineConfig:
    iteration_cap: int = 10_000
    slice_cap: int = 2**16
    level_factor: int = 2
    id_mode: str = "figure"  # or "candidate"

    @classmethod
    def from_env(cls, **overrides) -> "EngineConfig":
        cfg = cls(**overrides)
        if "BPA_ITER_CAP" in os.environ:
            cfg.iteration_cap = int(os.environ["BPA_ITER_CAP"])
        if "BPA_SLICE_CAP" in os.environ:
            cfg.slice_cap = int(os.environ["BPA_SLICE_CAP"])
        return cfg


@dataclass
class IterationTrace:
    bases: list[DecompositionBase] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    uniqueness_violations: list[str] = field(default_factory=list)

    @property
    def constructions(self) -> int:
        return len(self.bases) - 1

    def dumps(self) -> list[str]:
        return [dump_ids(b) + "\n" + dump_base(b) for b in self.bases]


def qualified_sets(sys: BpaSystem, config: EngineConfig | None = None) -> list[frozenset[int]]:
    config = config or EngineConfig()
    ground = sorted(sys.ground)
    if 2 ** len(ground) > config.slice_cap:
        raise SliceCapExceeded(f"{2 ** len(ground)} reference sets exceed the cap {config.slice_cap}")
    out = []
    for k in range(len(ground) + 1):
        for combo in combinations(ground, k):
            r = frozenset(combo)
            if qualify(sys, r) == r:
                out.append(r)
    return sorted(out, key=ref_key)


def initial_base(sys: BpaSystem, config: EngineConfig | None = None, allow_degenerate: bool = False) -> DecompositionBase:
    """Base whose equivalence is equality of weak norms.

    When every constant is ground the base has no primes at all and equates
    everything with the empty process; that raises unless ``allow_degenerate``.
    """
    validate_normed(sys)
    ground = sys.ground
    if len(ground) == sys.size and not allow_degenerate:
        raise DegenerateAllGround("every constant is ground")
    ids = {r: ground for r in qualified_sets(sys, config)}
    weak = constant_norms(sys, weak=True)
    sl = BaseSlice(ground)
    blocks = view(sys, ground).blocks
    unit = next((b for b in blocks if weak[b.rep] == 1), None)
    for b in blocks:
        sl.norm[b] = weak[b.rep]
        sl.order[b] = b.rank + 1
        if b == unit:
            sl.primes.add(b)
            sl.rd[b] = ground
        else:
            sl.composites.add(b)
            sl.dc[b] = (unit,) * weak[b.rep]
    return DecompositionBase(sys, ids, {ground: sl}).freeze()


def computing_id(sys: BpaSystem, old: DecompositionBase, ref: frozenset[int], mode: str = "figure") -> frozenset[int]:
    """Identity set of ``ref`` in the next base."""
    old_id = old.id_of(ref)
    eps_moves = r_transitions(sys, ref, ())
    violators = set()
    for x in sorted(old_id - ref):
        for action, alpha in r_transitions(sys, ref, (x,)):
            if action == TAU and all(y in old_id for y in alpha):
                continue
            target = old.dcmp(ref, alpha)
            if not any(a == action and old.dcmp(ref, beta) == target for a, beta in eps_moves):
                violators.add(x)
                break
    if not violators:
        return old_id
    if mode == "candidate":
        return old_id - violators
    contents = ground_contents(sys)
    # a ground process reached from eps may contain violators as well
    from_eps = set()
    for w in ref:
        from_eps |= contents[w]
    removed = set()
    for y in old_id - ref:
        reached = contents[y] | from_eps
        if reached & violators:
            removed.add(y)
    return old_id - removed


class Construction:
    """One run of the base construction from ``old`` (mutable while running)."""

    def __init__(self, sys: BpaSystem, old: DecompositionBase, config: EngineConfig, trace: IterationTrace | None):
        self.sys = sys
        self.old = old
        self.config = config
        self.trace = trace if trace is not None else IterationTrace()
        self.sequence = 0

    def run(self) -> DecompositionBase:
        sys = self.sys
        refs = sorted(self.old.id_map, key=ref_key)
        ids = {r: computing_id(sys, self.old, r, self.config.id_mode) for r in refs}
        for r, idr in ids.items():
            if ids.get(idr) != idr:
                raise BpaError(f"identity set of {sys.show_set(r)} is not admissible")
        admissible = [r for r in refs if ids[r] == r]
        for r in admissible:
            if self.old.id_of(r) == r and r not in self.old.slices:
                raise BpaError("admissible set lost its slice")
        self.new = DecompositionBase(sys, ids, {r: BaseSlice(r) for r in admissible})
        self.admissible = admissible
        self.untreated = {b for r in admissible for b in view(sys, r).blocks}
        self.deferred: set[Block] = set()
        self.postponed: list[Block] = []
        strong = constant_norms(sys, weak=False)
        level_cap = self.config.level_factor * max(strong, default=1) + 1
        self.level = 1
        while self.untreated:
            if self.level > level_cap:
                raise IterationCapExceeded(f"level {self.level} exceeds cap {level_cap}")
            while True:
                while self._sweep():
                    pass
                if not self.postponed:
                    break
                self._settle_postponed()
            self.untreated |= self.deferred
            self.deferred = set()
            self.level += 1
        return self.new.freeze()

    def _sweep(self) -> bool:
        """One pass of both loops plus a retry of postponed blocks; reports progress."""
        progressed = False
        while True:
            block = self._pick(self._decreasing_moves)
            if block is None:
                break
            self._treat_decreasing(block)
            progressed = True
        while True:
            block = self._pick(self._preserving_moves)
            if block is None:
                break
            self._treat_preserving(block)
            progressed = True
        for block in list(self.postponed):
            passing = [c for c in self.enumerate_candidates(block) if self.expand(block, c)]
            if passing:
                self._record_uniqueness(block, passing)
                self.postponed.remove(block)
                self._finish(block, "C", self.level, passing[0])
                progressed = True
        return progressed

    def _settle_postponed(self):
        # nothing left can witness an inert step for these blocks
        for block in self.postponed:
            self.trace.events.append(f"settled {block.label(self.sys)} as prime at level {self.level}")
            self._finish(block, "P", self.level, self.computing_rd(block))
        self.postponed = []

    # -- helpers ---------------------------------------------------------------

    def _norm(self, ref: frozenset[int], p: Process) -> int | None:
        try:
            blocks = self.new.dcmp(ref, p)
        except NotApplicable:
            return None
        return sum(self.new.norm_of(b) for b in blocks)

    def _new_dcmp(self, ref, p):
        try:
            return self.new.dcmp(ref, p)
        except NotApplicable:
            return None

    def _new_eq(self, ref, p, q) -> bool:
        a = self._new_dcmp(ref, p)
        return a is not None and a == self._new_dcmp(ref, q)

    def _old_eq(self, ref, p, q) -> bool:
        return self.old.dcmp(ref, p) == self.old.dcmp(ref, q)

    def _match_eq(self, ref, p, q) -> bool:
        """Old-base equality, sharpened to new-base equality once both sides decompose."""
        a = self._new_dcmp(ref, p)
        if a is not None:
            b = self._new_dcmp(ref, q)
            if b is not None:
                return a == b
        return self._old_eq(ref, p, q)

    def _decreasing_moves(self, block: Block) -> list[tuple[str, Process]]:
        moves = view(self.sys, block.ref).derived(block)
        return [(a, g) for a, g in moves if self._norm(block.ref, g) == self.level - 1]

    def _preserving_moves(self, block: Block) -> list[tuple[str, Process]]:
        moves = view(self.sys, block.ref).derived(block)
        return [(a, g) for a, g in moves if a == TAU and self._norm(block.ref, g) == self.level]

    def _pick(self, moves_of) -> Block | None:
        for r in self.admissible:
            for block in view(self.sys, r).blocks:
                if block in self.untreated and moves_of(block):
                    return block
        return None

    def _finish(self, block: Block, kind: str, norm: int, payload):
        sl = self.new.slices[block.ref]
        self.sequence += 1
        sl.order[block] = self.sequence
        sl.norm[block] = norm
        if kind == "P":
            sl.primes.add(block)
            sl.rd[block] = payload
        else:
            sl.composites.add(block)
            sl.dc[block] = payload
        self.untreated.discard(block)

    def _record_uniqueness(self, block: Block, passing: list):
        if len(passing) > 1:
            msg = f"{block.label(self.sys)}: {len(passing)} candidates pass"
            self.trace.uniqueness_violations.append(msg)
            logger.warning("candidate uniqueness violated at %s", msg)

    # -- the two treatments -------------------------------------------------

    def _treat_decreasing(self, block: Block):
        ref = block.ref
        sl = self.new.slices[ref]
        sl.norm[block] = self.level
        cands = self.enumerate_candidates(block)
        passing = [c for c in cands if self.expand(block, c)]
        self._record_uniqueness(block, passing)
        if passing:
            self._finish(block, "C", self.level, passing[0])
        elif any(self.expand(block, c, optimistic=True) for c in cands):
            # an inert silent step may lead to a block treated later at this level
            self.untreated.discard(block)
            self.postponed.append(block)
            self.trace.events.append(f"postponed {block.label(self.sys)} at level {self.level}")
        else:
            self._finish(block, "P", self.level, self.computing_rd(block))

    def _treat_preserving(self, block: Block):
        ref = block.ref
        cands = []
        for _, gamma in self._preserving_moves(block):
            c = self.new.dcmp(ref, gamma)
            if c not in cands:
                cands.append(c)
        passing = [c for c in cands if self.expand(block, c)]
        self._record_uniqueness(block, passing)
        if passing:
            self._finish(block, "C", self.level, passing[0])
        else:
            self.untreated.discard(block)
            self.deferred.add(block)
            self.trace.events.append(f"deferred {block.label(self.sys)} at level {self.level}")

    def enumerate_candidates(self, block: Block) -> list[tuple[Block, ...]]:
        """Block strings of norm ``level`` that could decompose ``block``."""
        ref = block.ref
        m = self.level
        out: list[tuple[Block, ...]] = []
        heads_k1 = [
            b for b in view(self.sys, ref).blocks
            if b.rank < block.rank and b in self.new.slices[ref].primes and self.new.slices[ref].norm[b] == m
        ]
        out.extend((b,) for b in heads_k1)
        for _, gamma in self._decreasing_moves(block):
            seq = self.new.dcmp(ref, gamma)
            for k in range(2, len(seq) + 2):
                suffix = seq[len(seq) - (k - 1):]
                rest = sum(self.new.norm_of(b) for b in suffix)
                need = m - rest
                if need < 1:
                    continue
                chain = self.new.rd_of_process(ref, tuple(b.rep for b in suffix))
                sl = self.new.slices.get(chain)
                if sl is None:
                    continue
                for head in view(self.sys, chain).blocks:
                    if head in sl.primes and sl.norm[head] == need:
                        cand = (head,) + suffix
                        if cand not in out:
                            out.append(cand)
        return out

    def expand(self, block: Block, cand: tuple[Block, ...], optimistic: bool = False) -> bool:
        """Decide whether ``block`` decomposes as the prime string ``cand``.

        With ``optimistic`` a silent step to a target that is not yet
        decomposable counts as inert whenever the old base allows it.
        """
        ref = block.ref
        m = self.level
        x = (block.rep,)
        cand_proc = tuple(b.rep for b in cand)
        if not self._old_eq(ref, x, cand_proc):
            return False
        head = cand[0]
        rest = cand_proc[1:]
        x_moves = view(self.sys, ref).derived(block)
        y_moves = view(self.sys, head.ref).derived(head)
        cand_now = self.new.dcmp(ref, cand_proc)
        # inert-step tests must not lean on the hypothesis under test
        now = {alpha: self._new_dcmp(ref, alpha) for a, alpha in x_moves if a == TAU}
        escape = any(d == cand_now for d in now.values()) or (
            optimistic and any(d is None and self._old_eq(ref, alpha, cand_proc) for alpha, d in now.items())
        )
        with self._assume(block, cand):
            for action, alpha in x_moves:
                if self._norm(ref, alpha) == m - 1:
                    ok = any(a == action and self._new_eq(ref, alpha, z + rest) for a, z in y_moves)
                else:
                    # a silent step may stutter only if it is not already known
                    # to leave the class of the candidate
                    stutter = action == TAU and now[alpha] in (None, cand_now)
                    ok = (stutter and self._old_eq(ref, alpha, cand_proc)) or any(
                        a == action and self._match_eq(ref, alpha, z + rest) for a, z in y_moves
                    )
                if not ok:
                    return False
            if escape:
                return True
            for action, zeta in y_moves:
                target = zeta + rest
                if self._norm(ref, target) == m - 1:
                    ok = any(a == action and self._new_eq(ref, alpha, target) for a, alpha in x_moves)
                else:
                    ok = any(a == action and self._match_eq(ref, alpha, target) for a, alpha in x_moves)
                if not ok:
                    return False
        return True

    @contextmanager
    def _assume(self, block: Block, cand: tuple[Block, ...]):
        """Temporarily let ``block`` decompose as ``cand`` in the new base."""
        sl = self.new.slices[block.ref]
        saved_cache = dict(self.new._cache)
        saved_norm = sl.norm.get(block)
        sl.composites.add(block)
        sl.dc[block] = cand
        sl.norm[block] = self.level
        try:
            yield
        finally:
            sl.composites.discard(block)
            del sl.dc[block]
            if saved_norm is None:
                sl.norm.pop(block, None)
            else:
                sl.norm[block] = saved_norm
            self.new._cache = saved_cache

    def computing_rd(self, block: Block) -> frozenset[int]:
        """Redundancy set of a freshly classified prime."""
        ref = block.ref
        x = block.rep
        alone = self.old.dcmp(ref, (x,))
        redundant = {w for w in range(self.sys.size) if self.old.dcmp(ref, (w, x)) == alone}
        moves = view(self.sys, ref).derived(block)
        violators = set()
        for y in sorted(redundant):
            for rule in self.sys.rules_of[y]:
                if rule.silent and all(z in redundant for z in rule.rhs):
                    continue
                target = self.old.dcmp(ref, rule.rhs + (x,))
                if not any(a == rule.action and self.old.dcmp(ref, beta) == target for a, beta in moves):
                    violators.add(y)
                    break
        if not violators:
            return frozenset(redundant)
        contents = ground_contents(self.sys)
        return frozenset(y for y in redundant if not (contents[y] & violators) and y not in violators)


def construct_new_base(
    sys: BpaSystem,
    old: DecompositionBase,
    config: EngineConfig | None = None,
    trace: IterationTrace | None = None,
) -> DecompositionBase:
    return Construction(sys, old, config or EngineConfig(), trace).run()


def compute_fixpoint(sys: BpaSystem, config: EngineConfig | None = None) -> tuple[DecompositionBase, IterationTrace]:
    config = config or EngineConfig.from_env()
    trace = IterationTrace()
    current = initial_base(sys, config, allow_degenerate=True)
    trace.bases.append(current)
    for _ in range(config.iteration_cap):
        nxt = construct_new_base(sys, current, config, trace)
        trace.bases.append(nxt)
        if base_equal(nxt, current):
            return nxt, trace
        current = nxt
    raise IterationCapExceeded(f"no fixpoint within {config.iteration_cap} constructions")


def fixpoint_base(sys: BpaSystem, config: EngineConfig | None = None) -> DecompositionBase:
    return sys.memo(("fixpoint", config.id_mode if config else "figure"), lambda: compute_fixpoint(sys, config)[0])


def decide(sys: BpaSystem, ref: Iterable[int], p: Process, q: Process, base: DecompositionBase | None = None) -> bool:
    """Whether ``p`` and ``q`` are bisimilar relative to the reference set ``ref``."""
    ref = qualify(sys, frozenset(ref))
    base = base or fixpoint_base(sys)
    return base.dcmp(ref, tuple(p)) == base.dcmp(ref, tuple(q))
