"""Decomposition bases and the deterministic decomposition they induce."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .relative import Block, qualify, ref_key, show_blocks, show_ref, view
from .system import BpaError, BpaSystem, Process

DC_LIMIT = 10**6


class MissingSlice(BpaError):
    pass


class NotApplicable(BpaError):
    """Decomposition needs a block that has not been classified yet."""

    def __init__(self, block: Block):
        super().__init__(f"block {block} is not classified yet")
        self.block = block


@dataclass
class BaseSlice:
    """Primes, composites, redundancy sets and decompositions for one admissible ``R``."""

    ref: frozenset[int]
    primes: set[Block] = field(default_factory=set)
    composites: set[Block] = field(default_factory=set)
    rd: dict[Block, frozenset[int]] = field(default_factory=dict)
    dc: dict[Block, tuple[Block, ...]] = field(default_factory=dict)
    norm: dict[Block, int] = field(default_factory=dict)
    order: dict[Block, int] = field(default_factory=dict)

    def same_structure(self, other: "BaseSlice") -> bool:
        return (
            self.ref == other.ref
            and self.primes == other.primes
            and self.composites == other.composites
            and self.rd == other.rd
            and self.dc == other.dc
        )


class DecompositionBase:
    """Identity map over qualified reference sets plus slices for the admissible ones."""

    def __init__(self, system: BpaSystem, id_map: dict[frozenset, frozenset], slices: dict[frozenset, BaseSlice]):
        self.system = system
        self.id_map = id_map
        self.slices = slices
        self._cache: dict = {}
        self.frozen = False

    def freeze(self) -> "DecompositionBase":
        self.frozen = True
        self._cache.clear()
        return self

    # -- lookups -----------------------------------------------------------------

    def id_of(self, ref: Iterable[int]) -> frozenset[int]:
        ref = frozenset(ref)
        if ref not in self.id_map:
            ref = qualify(self.system, ref)
        try:
            return self.id_map[ref]
        except KeyError:
            raise MissingSlice(f"no identity entry for {show_ref(self.system, ref)}") from None

    def slice(self, ref: frozenset[int]) -> BaseSlice:
        try:
            return self.slices[ref]
        except KeyError:
            raise MissingSlice(f"no slice for {show_ref(self.system, ref)}") from None

    def admissible(self) -> list[frozenset[int]]:
        return sorted(self.slices, key=ref_key)

    def norm_of(self, block: Block) -> int | None:
        return self.slice(block.ref).norm.get(block)

    def rd_of(self, block: Block) -> frozenset[int]:
        return self.slice(block.ref).rd[block]

    def kind(self, block: Block) -> str | None:
        s = self.slice(block.ref)
        if block in s.primes:
            return "P"
        if block in s.composites:
            return "C"
        return None

    # -- decomposition -----------------------------------------------------------

    def _dcmp_with_ref(self, ref: frozenset[int], p: Process) -> tuple[tuple[Block, ...], frozenset[int]]:
        key = (ref, p)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        cur = self.id_of(ref)
        out: list[Block] = []  # bottom first
        for x in reversed(p):
            if x in cur:
                continue
            sl = self.slice(cur)
            block = view(self.system, cur).block_of(x)
            if block in sl.primes:
                out.append(block)
                cur = sl.rd[block]
            elif block in sl.composites:
                seq = sl.dc[block]
                out.extend(reversed(seq))
                cur = self.slice(seq[0].ref).rd[seq[0]]
            else:
                raise NotApplicable(block)
            if len(out) > DC_LIMIT:
                raise BpaError(f"decomposition longer than {DC_LIMIT} blocks")
        result = (tuple(reversed(out)), cur)
        self._cache[key] = result
        return result

    def dcmp(self, ref: Iterable[int], p: Process) -> tuple[Block, ...]:
        return self._dcmp_with_ref(frozenset(ref), tuple(p))[0]

    def rd_of_process(self, ref: Iterable[int], p: Process) -> frozenset[int]:
        return self._dcmp_with_ref(frozenset(ref), tuple(p))[1]

    def b_equal(self, ref: Iterable[int], p: Process, q: Process) -> bool:
        return self.dcmp(ref, p) == self.dcmp(ref, q)

    def show_dcmp(self, ref: Iterable[int], p: Process) -> str:
        return show_blocks(self.system, self.dcmp(ref, p))


def dcmp(base: DecompositionBase, ref: Iterable[int], p: Process) -> tuple[Block, ...]:
    return base.dcmp(ref, p)


def b_equal(base: DecompositionBase, ref: Iterable[int], p: Process, q: Process) -> bool:
    return base.b_equal(ref, p, q)


def rd_of_process(base: DecompositionBase, ref: Iterable[int], p: Process) -> frozenset[int]:
    return base.rd_of_process(ref, p)


def base_equal(b1: DecompositionBase, b2: DecompositionBase) -> bool:
    if b1.id_map != b2.id_map or set(b1.slices) != set(b2.slices):
        return False
    return all(b1.slices[r].same_structure(b2.slices[r]) for r in b1.slices)


def validate_base(base: DecompositionBase, sys: BpaSystem | None = None, pair_limit: int = 4096) -> list[str]:
    """List violations of the structural constraints; empty when the base is valid."""
    sys = sys or base.system
    ground = sys.ground
    out: list[str] = []
    ids = base.id_map

    def name(r):
        return show_ref(sys, r)

    for r, idr in ids.items():
        if not (r <= idr <= ground):
            out.append(f"(1) Id of {name(r)} is {name(idr)}")
    keys = sorted(ids, key=ref_key)
    for r, s in itertools.islice(itertools.product(keys, keys), pair_limit * pair_limit):
        if r < s:
            if not ids[r] <= ids[s]:
                out.append(f"(2) Id not monotone on {name(r)} ⊆ {name(s)}")
            if s <= ids[r] and ids[r] != ids[s]:
                out.append(f"(2) Id not stable on {name(r)} ⊆ {name(s)} ⊆ Id")
    for r, idr in ids.items():
        if ids.get(idr) != idr:
            out.append(f"(3) Id of {name(r)} is not admissible")
        if idr not in base.slices:
            out.append(f"(3) no slice for {name(idr)}")
    for r, sl in base.slices.items():
        if ids.get(r) != r:
            out.append(f"(3) slice stored for non-admissible {name(r)}")
        blocks = set(view(sys, r).blocks)
        if sl.primes & sl.composites:
            out.append(f"(4) prime and composite overlap at {name(r)}")
        if (sl.primes | sl.composites) != blocks:
            out.append(f"(4) primes and composites do not cover the blocks of {name(r)}")
        for b, target in sl.rd.items():
            if ids.get(target) != target or target not in base.slices:
                out.append(f"(5) rd of {b.label(sys)} is {name(target)}, not admissible")
        for b in sl.primes:
            if b not in sl.rd:
                out.append(f"(5) prime {b.label(sys)} has no rd entry")
        for b in sl.composites:
            seq = sl.dc.get(b)
            if not seq:
                out.append(f"chain: composite {b.label(sys)} has no decomposition")
                continue
            problem = chain_problem(base, r, seq)
            if problem:
                out.append(f"chain: dc of {b.label(sys)}: {problem}")
    return out


def chain_problem(base: DecompositionBase, ref: frozenset[int], seq: tuple[Block, ...]) -> str | None:
    cur = ref
    for block in reversed(seq):
        if block.ref != cur:
            return f"{block.label(base.system)} does not continue chain at {show_ref(base.system, cur)}"
        sl = base.slices.get(cur)
        if sl is None or block not in sl.primes:
            return f"{block.label(base.system)} is not prime"
        cur = sl.rd[block]
    return None


def dump_base(base: DecompositionBase) -> str:
    """TSV table: block, ref-set, ord, norm, kind, rd-set, dc-string."""
    sys = base.system
    lines = ["block\tref\tord\tnorm\tkind\trd\tdc"]
    for r in base.admissible():
        sl = base.slices[r]
        for b in view(sys, r).blocks:
            kind = "P" if b in sl.primes else "C" if b in sl.composites else "?"
            rd = show_ref(sys, sl.rd[b]) if b in sl.rd else "-"
            dc = show_blocks(sys, sl.dc[b]) if b in sl.dc else "-"
            order = sl.order.get(b, "-")
            norm = sl.norm.get(b, "-")
            lines.append(f"{b.label(sys)}\t{show_ref(sys, r)}\t{order}\t{norm}\t{kind}\t{rd}\t{dc}")
    return "\n".join(lines) + "\n"


def dump_ids(base: DecompositionBase) -> str:
    sys = base.system
    lines = ["ref\tid"]
    for r in sorted(base.id_map, key=ref_key):
        lines.append(f"{show_ref(sys, r)}\t{show_ref(sys, base.id_map[r])}")
    return "\n".join(lines) + "\n"
