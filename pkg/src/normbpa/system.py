"""Normed BPA systems: syntax, parsing, one-step semantics and ground constants.

A process is a tuple of constant indices with the active constant on the
left.  The empty tuple is the empty process ``eps``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

TAU = "tau"
EPS_NAME = "eps"
RESERVED = frozenset({TAU, EPS_NAME})

Process = tuple  # tuple[int, ...], head first

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_RULE = re.compile(r"^(\S+)\s+-([^\s>-][^\s>]*)->\s+(\S+)\s*$")


class BpaError(Exception):
    """Base class for all errors raised by this package."""


class BpaSyntaxError(BpaError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class Unnormed(BpaError):
    def __init__(self, constants: Sequence[str]):
        super().__init__("constants cannot reach eps: " + ", ".join(constants))
        self.constants = list(constants)


class NormOverflow(BpaError):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: int
    action: str
    rhs: Process

    @property
    def silent(self) -> bool:
        return self.action == TAU


@dataclass(frozen=True, eq=False)
class BpaSystem:
    """An immutable BPA rule system over densely indexed constants."""

    constants: tuple[str, ...]
    rules: tuple[Rule, ...]
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        index = {name: i for i, name in enumerate(self.constants)}
        by_lhs: list[list[Rule]] = [[] for _ in self.constants]
        for rule in self.rules:
            by_lhs[rule.lhs].append(rule)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "rules_of", tuple(tuple(rs) for rs in by_lhs))
        object.__setattr__(self, "ground", _ground_set(len(self.constants), self.rules))

    def __eq__(self, other):
        if not isinstance(other, BpaSystem):
            return NotImplemented
        return self.constants == other.constants and self.rules == other.rules

    def __hash__(self):
        return hash((self.constants, self.rules))

    @property
    def size(self) -> int:
        return len(self.constants)

    @property
    def actions(self) -> frozenset[str]:
        return frozenset({TAU} | {r.action for r in self.rules})

    @property
    def visible_actions(self) -> tuple[str, ...]:
        return tuple(sorted({r.action for r in self.rules if not r.silent}))

    def memo(self, key, compute):
        """Per-system cache for derived tables (pure functions of the system)."""
        try:
            return self._memo[key]
        except KeyError:
            value = compute()
            self._memo.setdefault(key, value)
            return self._memo[key]

    # -- process helpers -------------------------------------------------

    def process(self, text: str) -> Process:
        return parse_process(self, text)

    def show(self, p: Iterable[int]) -> str:
        p = tuple(p)
        if not p:
            return EPS_NAME
        return ".".join(self.constants[x] for x in p)

    def show_set(self, s: Iterable[int]) -> str:
        return "{" + ",".join(self.constants[x] for x in sorted(s)) + "}"

    def ref_set(self, text: str) -> frozenset[int]:
        text = text.strip().strip("{}")
        if not text or text in ("-", "∅"):
            return frozenset()
        out = set()
        for name in text.split(","):
            name = name.strip()
            if name not in self.index:
                raise BpaError(f"unknown constant {name!r} in reference set")
            out.add(self.index[name])
        return frozenset(out)


def _ground_set(n: int, rules: Sequence[Rule]) -> frozenset[int]:
    ground: set[int] = set()
    changed = True
    while changed:
        changed = False
        for rule in rules:
            if rule.silent and rule.lhs not in ground and all(y in ground for y in rule.rhs):
                ground.add(rule.lhs)
                changed = True
    return frozenset(ground)


def build_system(constants: Sequence[str], rules: Iterable[tuple[str, str, Sequence[str]]]) -> BpaSystem:
    """Build a system from names; rules are ``(lhs, action, rhs_names)`` triples."""
    constants = tuple(constants)
    index = {}
    for name in constants:
        if name in RESERVED or not _NAME.match(name):
            raise BpaError(f"invalid constant name {name!r}")
        if name in index:
            raise BpaError(f"duplicate constant {name!r}")
        index[name] = len(index)
    out: list[Rule] = []
    seen = set()
    for lhs, action, rhs in rules:
        if lhs not in index:
            raise BpaError(f"undeclared constant {lhs!r}")
        if action == EPS_NAME or not _NAME.match(action):
            raise BpaError(f"invalid action name {action!r}")
        for y in rhs:
            if y not in index:
                raise BpaError(f"undeclared constant {y!r}")
        rule = Rule(index[lhs], action, tuple(index[y] for y in rhs))
        if rule in seen:
            logger.warning("duplicate rule %s -%s-> %s dropped", lhs, action, ".".join(rhs) or EPS_NAME)
            continue
        seen.add(rule)
        out.append(rule)
    return BpaSystem(constants, tuple(out))


def parse_system(text: str) -> BpaSystem:
    """Parse the line-based ``constants:`` / ``rules:`` file format."""
    constants: list[str] | None = None
    declared: dict[str, int] = {}
    rules: list[tuple[Rule, int]] = []
    in_rules = False
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        stripped = line.strip()
        if stripped.startswith("constants:"):
            if constants is not None:
                raise BpaSyntaxError("second constants declaration", lineno, col)
            constants = []
            offset = raw.index("constants:") + len("constants:")
            for m in re.finditer(r"\S+", line[offset:]):
                name = m.group(0)
                c = offset + m.start() + 1
                if name in RESERVED:
                    raise BpaSyntaxError(f"reserved name {name!r} used as constant", lineno, c)
                if not _NAME.match(name):
                    raise BpaSyntaxError(f"invalid constant name {name!r}", lineno, c)
                if name in declared:
                    raise BpaSyntaxError(f"duplicate constant {name!r}", lineno, c)
                declared[name] = len(constants)
                constants.append(name)
            continue
        if stripped == "rules:":
            if constants is None:
                raise BpaSyntaxError("rules before constants declaration", lineno, col)
            in_rules = True
            continue
        if not in_rules:
            raise BpaSyntaxError(f"unexpected text {stripped!r}", lineno, col)
        m = _RULE.match(stripped)
        if not m:
            raise BpaSyntaxError("expected 'X -action-> rhs'", lineno, col)
        lhs, action, rhs_text = m.groups()
        if lhs not in declared:
            kind = "reserved name" if lhs in RESERVED else "undeclared constant"
            raise BpaSyntaxError(f"{kind} {lhs!r} on left-hand side", lineno, col)
        if action == EPS_NAME or not _NAME.match(action):
            raise BpaSyntaxError(f"invalid action {action!r}", lineno, col + line.strip().index(action))
        rhs: list[int] = []
        if rhs_text != EPS_NAME:
            rcol = col + stripped.rindex(rhs_text)
            for name in rhs_text.split("."):
                if name not in declared:
                    kind = "reserved name" if name in RESERVED else "undeclared constant"
                    raise BpaSyntaxError(f"{kind} {name!r} in right-hand side", lineno, rcol)
                rhs.append(declared[name])
        rule = Rule(declared[lhs], action, tuple(rhs))
        if rule in seen:
            logger.warning("line %d: duplicate rule dropped", lineno)
            continue
        seen.add(rule)
        rules.append((rule, lineno))
    if constants is None:
        raise BpaSyntaxError("missing constants declaration", 1)
    return BpaSystem(tuple(constants), tuple(r for r, _ in rules))


def format_system(sys: BpaSystem) -> str:
    """Canonical printer; ``parse_system(format_system(s)) == s``."""
    lines = ["constants: " + " ".join(sys.constants), "rules:"]
    for rule in sys.rules:
        lines.append(f"{sys.constants[rule.lhs]} -{rule.action}-> {sys.show(rule.rhs)}")
    return "\n".join(lines) + "\n"


def parse_process(sys: BpaSystem, text: str) -> Process:
    text = text.strip()
    if text in ("", EPS_NAME, "ε"):
        return ()
    out = []
    for name in text.split("."):
        if name not in sys.index:
            raise BpaError(f"unknown constant {name!r} in process {text!r}")
        out.append(sys.index[name])
    return tuple(out)


def step(sys: BpaSystem, p: Process) -> list[tuple[str, Process]]:
    """All one-step successors of ``p`` in rule declaration order."""
    if not p:
        return []
    head, rest = p[0], tuple(p[1:])
    return [(r.action, r.rhs + rest) for r in sys.rules_of[head]]


def is_ground(sys: BpaSystem, p: Iterable[int]) -> bool:
    ground = sys.ground
    return all(x in ground for x in p)


@dataclass(frozen=True)
class NormReport:
    strong: dict[str, int]


def validate_normed(sys: BpaSystem) -> NormReport:
    """Raise :class:`Unnormed` unless every constant can reach ``eps``."""
    from .norms import constant_norms

    strong = constant_norms(sys, weak=False, check=False)
    missing = [sys.constants[i] for i, v in enumerate(strong) if v is None]
    if missing:
        raise Unnormed(missing)
    return NormReport({sys.constants[i]: v for i, v in enumerate(strong)})
