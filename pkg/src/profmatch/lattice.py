"""Knowledge-base parsing, concept lattices and filters.

Concept sets are Python ints used as bitsets: bit ``i`` is concept id ``i``.
Id 0 is always the top concept and id ``n - 1`` the bottom concept.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import InputError, LatticeError

MAX_CONCEPTS = 4096
SYNTHETIC_TOP = "__top__"
SYNTHETIC_BOTTOM = "__bottom__"

_NAME = r"[^\s,|<>{}#:=]+"
_NAME_RE = re.compile(rf"^{_NAME}$")
_CONCEPT_RE = re.compile(rf"^concept\s+({_NAME})$")
_AXIOM_RE = re.compile(rf"^axiom\s+({_NAME})\s*<=\s*({_NAME})$")
_BLOWUP_RE = re.compile(rf"^blowup\s+({_NAME})\s+({_NAME})\s*\{{(.*)\}}$")
_PROFILE_RE = re.compile(rf"^(profile|request)\s+({_NAME})\s*:(.*)$")


def bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def natural_key(name: str):
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.split(r"(\d+)", name) if tok]


@dataclass(frozen=True)
class Blowup:
    base: str
    role: str
    values: tuple[str, ...]
    line: int = 0

    def generated(self) -> tuple[str, ...]:
        return tuple(f"{self.base}.{self.role}.{v}" for v in self.values)


@dataclass(frozen=True)
class TBoxDocument:
    concepts: tuple[str, ...]
    axioms: tuple[tuple[str, str], ...]
    blowups: tuple[Blowup, ...] = ()


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return (line if pos < 0 else line[:pos]).strip()


def parse_knowledge_base(document: str) -> TBoxDocument:
    """Parse the line-oriented knowledge-base format.

    Declarations may appear in any order; references are resolved after the
    whole document has been read.
    """
    concepts: list[str] = []
    declared_at: dict[str, int] = {}
    axioms: list[tuple[str, str, int]] = []
    blowups: list[Blowup] = []
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        if m := _CONCEPT_RE.match(line):
            name = m.group(1)
            if name in declared_at:
                raise InputError(f"duplicate concept name {name!r} (first declared on line {declared_at[name]})", lineno)
            declared_at[name] = lineno
            concepts.append(name)
        elif m := _AXIOM_RE.match(line):
            axioms.append((m.group(1), m.group(2), lineno))
        elif m := _BLOWUP_RE.match(line):
            values = [v.strip() for v in m.group(3).split(",")]
            if not values or any(not v for v in values):
                raise InputError("blow-up value list must be a non-empty comma-separated list", lineno)
            if any(not _NAME_RE.match(v) for v in values):
                raise InputError(f"invalid blow-up value in {m.group(3).strip()!r}", lineno)
            if len(set(values)) != len(values):
                raise InputError("duplicate value in blow-up list", lineno)
            blowups.append(Blowup(m.group(1), m.group(2), tuple(values), lineno))
        else:
            raise InputError(f"syntax error: {line!r}", lineno)

    if not concepts:
        raise InputError("no concepts declared")
    known = set(concepts)
    for b in blowups:
        if b.base not in declared_at:
            raise InputError(f"blow-up references undeclared concept {b.base!r}", b.line)
        for g in b.generated():
            if g in known:
                raise InputError(f"duplicate concept name {g!r} generated by blow-up", b.line)
            known.add(g)
    for sub, sup, lineno in axioms:
        for name in (sub, sup):
            if name not in known:
                raise InputError(f"axiom references undeclared concept {name!r}", lineno)
    return TBoxDocument(tuple(concepts), tuple((a, b) for a, b, _ in axioms), tuple(blowups))


@dataclass(frozen=True, eq=False)
class Lattice:
    """A finite lattice stored as ancestor bitsets.

    ``up[i]`` holds every ``j`` with ``i <= j`` (including ``i``), ``down[i]``
    every ``j`` with ``j <= i``.
    """

    names: tuple[str, ...]
    up: tuple[int, ...]
    down: tuple[int, ...]
    index: dict[str, int] = field(repr=False)
    _join: dict[int, int] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def top(self) -> int:
        return 0

    @property
    def bottom(self) -> int:
        return len(self.names) - 1

    @property
    def full(self) -> int:
        return (1 << len(self.names)) - 1

    def id_of(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise InputError(f"unknown concept {name!r}") from None

    def leq(self, a: int, b: int) -> bool:
        return bool(self.up[a] >> b & 1)

    def join(self, a: int, b: int) -> int:
        return self._join[self.up[a] & self.up[b]]

    def meet(self, a: int, b: int) -> int:
        common = self.down[a] & self.down[b]
        # The meet is the unique element of ``common`` lying above all of it.
        for c in bits(common):
            if self.down[c] == common:
                return c
        raise AssertionError("lattice invariant broken")

    def close(self, mask: int) -> int:
        """Upward closure of a concept bitset."""
        out = 0
        for c in bits(mask):
            out |= self.up[c]
        return out

    def is_upset(self, mask: int) -> bool:
        return mask != 0 and self.close(mask) == mask

    def minimal(self, mask: int) -> int:
        """Minimal elements of a concept set (its generators when it is a filter)."""
        out = 0
        for c in bits(mask):
            if self.down[c] & mask == 1 << c:
                out |= 1 << c
        return out

    def upper_covers(self, c: int) -> list[int]:
        strict = self.up[c] & ~(1 << c)
        return [d for d in bits(strict) if not any(self.leq(e, d) for e in bits(strict & ~(1 << d)))]

    def filter(self, generators: Iterable[int | str]) -> "Filter":
        return filter_close(self, generators)

    def make_filter(self, mask: int) -> "Filter":
        if not self.is_upset(mask):
            raise InputError("concept set is not a filter")
        return Filter(mask, self)

    def filters(self) -> list["Filter"]:
        """All filters, ordered by size then by bitset value."""
        seen = {1 << self.top}
        frontier = [1 << self.top]
        while frontier:
            nxt = []
            for f in frontier:
                for c in bits(self.full & ~f):
                    if self.up[c] & ~(1 << c) & ~f == 0:
                        g = f | 1 << c
                        if g not in seen:
                            seen.add(g)
                            nxt.append(g)
            frontier = nxt
        return [Filter(m, self) for m in sorted(seen, key=lambda m: (m.bit_count(), m))]

    def parse_filter(self, text: str) -> "Filter":
        """Parse generator notation such as ``<C2|C4>``."""
        s = text.strip()
        if not (s.startswith("<") and s.endswith(">")):
            raise InputError(f"filter must be written as <name|name...>: {text!r}")
        names = [p.strip() for p in s[1:-1].split("|")]
        if not names or any(not p for p in names):
            raise InputError(f"empty generator in filter {text!r}")
        return filter_close(self, names)

    def format_filter(self, f: "Filter | int") -> str:
        m = f.members if isinstance(f, Filter) else f
        return "<" + "|".join(self.names[c] for c in bits(self.minimal(m))) + ">"

    def format_set(self, mask: int) -> str:
        return "{" + ", ".join(self.names[c] for c in bits(mask)) + "}"


@dataclass(frozen=True)
class Filter:
    """A non-empty upward-closed concept set."""

    members: int
    lattice: Lattice = field(compare=False, repr=False)

    def __contains__(self, c: int) -> bool:
        return bool(self.members >> c & 1)

    def __iter__(self) -> Iterator[int]:
        return bits(self.members)

    def __len__(self) -> int:
        return self.members.bit_count()

    def __and__(self, other: "Filter") -> "Filter":
        return Filter(self.members & other.members, self.lattice)

    def __or__(self, other: "Filter") -> "Filter":
        return Filter(self.members | other.members, self.lattice)

    def __le__(self, other: "Filter") -> bool:
        return self.members & ~other.members == 0

    def __lt__(self, other: "Filter") -> bool:
        return self <= other and self.members != other.members

    def names(self) -> list[str]:
        return [self.lattice.names[c] for c in self]

    def __str__(self) -> str:
        return self.lattice.format_filter(self)


def filter_close(lattice: Lattice, generators: Iterable[int | str]) -> Filter:
    ids = [lattice.id_of(g) if isinstance(g, str) else g for g in generators]
    if not ids:
        raise InputError("filter needs at least one generator")
    for c in ids:
        if not 0 <= c < lattice.n:
            raise InputError(f"concept id {c} outside lattice")
    return Filter(lattice.close(mask_of(ids)), lattice)


def lattice_from_order(names: Iterable[str], edges: Iterable[tuple[str, str]]) -> Lattice:
    """Build a lattice from concept names and ``sub <= sup`` pairs.

    A synthetic top or bottom is added when the poset has several maximal or
    minimal elements. Middle concepts are numbered in natural name order, so
    declaration order never matters.
    """
    names = list(dict.fromkeys(names))
    edges = list(edges)
    pos = {n: i for i, n in enumerate(names)}
    succ: list[set[int]] = [set() for _ in names]
    for a, b in edges:
        succ[pos[a]].add(pos[b])
    if len(names) > MAX_CONCEPTS:
        raise InputError(f"{len(names)} concepts exceed the cap of {MAX_CONCEPTS}")

    # Reachability by memoised DFS in reverse topological order.
    anc: list[int | None] = [None] * len(names)
    state = [0] * len(names)
    for start in range(len(names)):
        if state[start]:
            continue
        stack = [(start, iter(succ[start]))]
        state[start] = 1
        path = [start]
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                m = 1 << v
                for s in succ[v]:
                    m |= anc[s]
                anc[v] = m
                state[v] = 2
                stack.pop()
                path.pop()
            elif state[nxt] == 1:
                cyc = path[path.index(nxt):] + [nxt]
                raise LatticeError("cycle among distinct concepts: " + " <= ".join(names[i] for i in cyc))
            elif state[nxt] == 0:
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(succ[nxt])))

    up0 = [a for a in anc]
    maxima = [i for i in range(len(names)) if up0[i] == 1 << i]
    minima = [i for i in range(len(names)) if not any(j != i and up0[j] >> i & 1 for j in range(len(names)))]
    top_name = names[maxima[0]] if len(maxima) == 1 else SYNTHETIC_TOP
    bottom_name = names[minima[0]] if len(minima) == 1 else SYNTHETIC_BOTTOM
    extra_edges: list[tuple[str, str]] = []
    for synth, ends, is_top in ((SYNTHETIC_TOP, maxima, True), (SYNTHETIC_BOTTOM, minima, False)):
        if len(ends) > 1:
            if synth in pos:
                raise LatticeError(f"reserved name {synth!r} is already declared")
            extra_edges += [(names[e], synth) if is_top else (synth, names[e]) for e in ends]
    if extra_edges:
        return lattice_from_order(names + [n for n in (top_name, bottom_name) if n not in pos],
                                  edges + extra_edges)

    middle = sorted((n for n in names if n not in (top_name, bottom_name)), key=natural_key)
    order = [top_name] + middle + ([bottom_name] if bottom_name != top_name else [])
    new_id = {n: i for i, n in enumerate(order)}
    remap = [new_id[n] for n in names]
    up = [0] * len(order)
    down = [0] * len(order)
    for old, m in enumerate(up0):
        i = remap[old]
        up[i] = mask_of(remap[j] for j in bits(m))
    for i, m in enumerate(up):
        for j in bits(m):
            down[j] |= 1 << i

    joins: dict[int, int] = {m: i for i, m in enumerate(up)}
    n = len(order)
    for a in range(n):
        for b in range(a + 1, n):
            common = up[a] & up[b]
            if common not in joins:
                raise LatticeError(f"not a lattice: {order[a]} and {order[b]} have no unique least upper bound")
    return Lattice(tuple(order), tuple(up), tuple(down), new_id, joins)


def build_lattice(doc: TBoxDocument) -> Lattice:
    names = list(doc.concepts)
    edges = list(doc.axioms)
    for b in doc.blowups:
        gen = b.generated()
        names.extend(gen)
        chain = (b.base,) + gen
        # Each later value is more specific than the one before it.
        edges.extend((chain[i + 1], chain[i]) for i in range(len(gen)))
    return lattice_from_order(names, edges)


@dataclass(frozen=True)
class Profile:
    id: str
    asserted: frozenset[int]
    kind: str = "profile"

    def filter(self, lattice: Lattice) -> Filter:
        return filter_close(lattice, self.asserted)


def parse_profiles(text: str, lattice: Lattice) -> list[Profile]:
    """Parse ``profile <id> : a, b`` lines (and ``request`` lines for requested profiles)."""
    out: list[Profile] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _PROFILE_RE.match(line)
        if not m:
            raise InputError(f"syntax error: {line!r}", lineno)
        kind, pid, rest = m.groups()
        if pid in seen:
            raise InputError(f"duplicate profile id {pid!r}", lineno)
        seen.add(pid)
        names = [p.strip() for p in rest.split(",")]
        if not names or any(not p for p in names):
            raise InputError("profile needs a non-empty comma-separated concept list", lineno)
        ids = []
        for name in names:
            if name not in lattice.index:
                raise InputError(f"profile {pid!r} asserts undeclared concept {name!r}", lineno)
            ids.append(lattice.index[name])
        out.append(Profile(pid, frozenset(ids), kind))
    return out
