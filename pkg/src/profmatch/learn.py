"""Expert matchings: plausibility checks, derived inequalities and ranking verification.

An expert matrix ``h`` maps (given filter, requested filter) pairs to values
in [0, 1]. It may be partial; every check only looks at provided entries.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from .errors import InputError
from .lattice import Filter, Lattice, bits
from .measure import Weighting, match_value


@dataclass(frozen=True, eq=False)
class ExpertMatrix:
    lattice: Lattice
    entries: dict[tuple[int, int], Fraction]

    def __post_init__(self):
        for (f, g), v in self.entries.items():
            if not (self.lattice.is_upset(f) and self.lattice.is_upset(g)):
                raise InputError("expert matrix entry does not reference filters")
            if not 0 <= v <= 1:
                raise InputError(f"expert value {v} outside [0, 1]")

    @classmethod
    def from_function(cls, lattice: Lattice, filters: Iterable[Filter], fn: Callable) -> "ExpertMatrix":
        fs = list(filters)
        return cls(lattice, {(f.members, g.members): Fraction(fn(f, g)) for f in fs for g in fs})

    def rows(self) -> dict[int, dict[int, Fraction]]:
        out: dict[int, dict[int, Fraction]] = defaultdict(dict)
        for (f, g), v in self.entries.items():
            out[f][g] = v
        return out

    def columns(self) -> dict[int, dict[int, Fraction]]:
        out: dict[int, dict[int, Fraction]] = defaultdict(dict)
        for (f, g), v in self.entries.items():
            out[g][f] = v
        return out


def parse_expert_matrix(text: str, lattice: Lattice) -> ExpertMatrix:
    """Read CSV with header ``given,requested,value``; filters in ``<A|B>`` notation."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["given", "requested", "value"]:
        raise InputError("expert matrix must start with the header given,requested,value", 1)
    entries: dict[tuple[int, int], Fraction] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise InputError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            f = lattice.parse_filter(row[0])
            g = lattice.parse_filter(row[1])
        except InputError as e:
            raise InputError(str(e), lineno) from None
        try:
            v = Fraction(row[2].strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a number: {row[2]!r}", lineno) from None
        if not 0 <= v <= 1:
            raise InputError(f"value {row[2].strip()} outside [0, 1]", lineno)
        key = (f.members, g.members)
        if key in entries and entries[key] != v:
            raise InputError(f"conflicting duplicate entry for ({row[0]}, {row[1]})", lineno)
        entries[key] = v
    return ExpertMatrix(lattice, entries)


def relevance_partition(f: Filter, candidates: Iterable[Filter]) -> list[list[Filter]]:
    """Group requested filters by their intersection with ``f``."""
    classes: dict[int, list[Filter]] = {}
    for g in sorted(set(candidates), key=lambda x: (len(x), x.members)):
        classes.setdefault(f.members & g.members, []).append(g)
    return list(classes.values())


@dataclass(frozen=True)
class Violation:
    constraint: int
    filters: tuple[int, ...]
    detail: str

    def render(self, lattice: Lattice) -> str:
        return f"({self.constraint}) " + " ".join(lattice.format_filter(m) for m in self.filters) + f": {self.detail}"


def _monotone_failures(items):
    """Items are (key, a, b). Yield (earlier_key, key) where a1 < a2 but not b1 < b2."""
    items = sorted(items, key=lambda t: t[1])
    best = None  # (b, key) maximum over strictly smaller a
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][1] == items[i][1]:
            j += 1
        group = items[i:j]
        if best is not None:
            for key, _, b in group:
                if not b > best[0]:
                    yield best[1], key
        for key, _, b in group:
            if best is None or b > best[0]:
                best = (b, key)
        i = j


def check_plausibility(h: ExpertMatrix) -> list[Violation]:
    """Check the eight plausibility constraints over the provided entries."""
    lat = h.lattice
    up = lat.up
    E = h.entries
    rows = h.rows()
    cols = h.columns()
    out: list[Violation] = []

    def can_add(mask: int, c: int) -> bool:
        return up[c] & ~(1 << c) & ~mask == 0

    for (f, g), v in sorted(E.items()):
        if g & ~f == 0 and v != 1:
            out.append(Violation(1, (f, g), f"value {v} but requested is contained in given"))
        fg = f & g
        if (fg, g) in E and E[fg, g] != v:
            out.append(Violation(2, (f, g), f"h(F,G)={v} differs from h(F&G,G)={E[fg, g]}"))
        for c in bits(g & ~f):
            s = g & ~(1 << c)
            if s and lat.down[c] & g == 1 << c and (f, s) in E and not v < E[f, s]:
                out.append(Violation(3, (f, g, s), f"removing {lat.names[c]} must raise the value"))
        for c in range(lat.n):
            f2, g2 = f | 1 << c, g | 1 << c
            if (f2, g2) != (f, g) and (f2, g2) in E and can_add(f, c) and can_add(g, c) and not v <= E[f2, g2]:
                out.append(Violation(4, (f, g, f2, g2), f"adding {lat.names[c]} to both must not lower the value"))

    # (5) adding a requested concept keeps strict column order.
    for g, col in sorted(cols.items()):
        for c in bits(g):
            items = []
            for f, a in col.items():
                if not f >> c & 1 and can_add(f, c) and (f | 1 << c) in col:
                    items.append((f, a, col[f | 1 << c]))
            for f1, f2 in _monotone_failures(items):
                out.append(Violation(5, (f1, f2, g), f"order not preserved after adding {lat.names[c]}"))

    # (6) equal overlap with F: h(F1,G) > h(F2,G) iff h(F,F1&G) < h(F,F2&G).
    for g, col in sorted(cols.items()):
        for f, row in sorted(rows.items()):
            groups: dict[int, list] = defaultdict(list)
            for f1, a in col.items():
                if (f1 & g) in row:
                    groups[f & f1 & g].append((f1, a, row[f1 & g]))
            for items in groups.values():
                if len(items) < 2:
                    continue
                items.sort(key=lambda t: t[1])
                for (x1, a1, b1), (x2, a2, b2) in zip(items, items[1:]):
                    if (a1 == a2 and b1 != b2) or (a1 < a2 and not b1 > b2):
                        out.append(Violation(6, (f, x1, x2, g), "over-qualification order does not mirror the match order"))

    # (7) inside one relevance class, adding a shared concept keeps strict row order.
    for f, row in sorted(rows.items()):
        classes: dict[int, list[int]] = defaultdict(list)
        for g in row:
            classes[f & g].append(g)
        for c in range(lat.n):
            if f >> c & 1 or not can_add(f, c) or (f | 1 << c) not in rows:
                continue
            row2 = rows[f | 1 << c]
            for members in classes.values():
                items = [(g, row[g], row2[g]) for g in members if g >> c & 1 and g in row2]
                for g1, g2 in _monotone_failures(items):
                    out.append(Violation(7, (f, g1, g2), f"row order not preserved after adding {lat.names[c]}"))

    # (8) requested filters with the same overlaps order F1, F2 the same way.
    row_keys = sorted(rows)
    for i, f1 in enumerate(row_keys):
        r1 = rows[f1]
        for f2 in row_keys[i + 1:]:
            r2 = rows[f2]
            groups: dict[tuple[int, int], list] = defaultdict(list)
            for g in r1.keys() & r2.keys():
                d = r1[g] - r2[g]
                groups[(g & f1, g & f2)].append((g, (d > 0) - (d < 0)))
            for items in groups.values():
                signs = {s for _, s in items}
                if len(signs) > 1 and (signs & {-1, 1}):
                    items.sort()
                    gs = [g for g, _ in items]
                    out.append(Violation(8, (f1, f2, gs[0], gs[-1]), "same overlaps but different order"))
    return out


@dataclass(frozen=True)
class LinearInequality:
    """sum(lhs) < sum(rhs); both sides are sorted tuples of variable indices with repetition."""

    lhs: tuple[int, ...]
    rhs: tuple[int, ...]

    @classmethod
    def of(cls, lhs: Iterable[int], rhs: Iterable[int]) -> "LinearInequality":
        a, b = Counter(lhs), Counter(rhs)
        common = a & b
        a, b = a - common, b - common
        return cls(tuple(sorted(a.elements())), tuple(sorted(b.elements())))

    def coefficients(self, n: int) -> list[int]:
        """Vector c with the meaning c . x < 0."""
        c = [0] * n
        for i in self.lhs:
            c[i] += 1
        for i in self.rhs:
            c[i] -= 1
        return c

    def holds(self, x) -> bool:
        return sum(x[i] for i in self.lhs) < sum(x[i] for i in self.rhs)

    def render(self, names=None) -> str:
        def side(s):
            if not s:
                return "0"
            cnt = Counter(s)
            return " + ".join((f"{k}*" if k > 1 else "") + (names[i] if names else f"x{i + 1}") for i, k in sorted(cnt.items()))
        return f"{side(self.lhs)} < {side(self.rhs)}"


@dataclass(frozen=True)
class InequalitySystem:
    n: int
    inequalities: tuple[LinearInequality, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        for q in self.inequalities:
            if any(not 0 <= i < self.n for i in q.lhs + q.rhs):
                raise InputError("variable index out of range")

    @classmethod
    def parse(cls, text: str) -> "InequalitySystem":
        """Parse lines like ``x1 + x2 < x3 + 2*x4``."""
        ineqs = []
        n = 0
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.count("<") != 1:
                raise InputError("expected one '<'", lineno)
            sides = []
            for part in line.split("<"):
                vs: list[int] = []
                for term in part.split("+"):
                    term = term.strip()
                    if term in ("", "0"):
                        continue
                    k, _, var = term.rpartition("*")
                    if not var.startswith("x") or not var[1:].isdigit() or int(var[1:]) < 1:
                        raise InputError(f"bad term {term!r}", lineno)
                    vs += [int(var[1:]) - 1] * (int(k) if k else 1)
                sides.append(vs)
                n = max([n] + [v + 1 for v in vs])
            ineqs.append(LinearInequality.of(*sides))
        return cls(n, tuple(ineqs))

    def render(self) -> list[str]:
        return [q.render(self.names) for q in self.inequalities]


def _phi(lattice: Lattice, mask: int) -> list[int]:
    """Variables of a concept set: concept id c (not top or bottom) is variable c - 1."""
    return [c - 1 for c in bits(mask) if c not in (lattice.top, lattice.bottom)]


def derive_inequalities(h: ExpertMatrix, lattice: Lattice, check: bool = True) -> InequalitySystem:
    if check:
        bad = check_plausibility(h)
        if bad:
            raise InputError(f"expert matrix violates {len(bad)} plausibility constraint instance(s)")
    n = max(lattice.n - 2, 0)
    found: dict[LinearInequality, None] = {}

    def emit(small: int, large: int):
        q = LinearInequality.of(_phi(lattice, small), _phi(lattice, large))
        if not q.lhs and not q.rhs and large >> lattice.bottom & 1 and not small >> lattice.bottom & 1:
            return  # satisfied by the bottom weight alone
        found.setdefault(q, None)

    def consecutive(items):
        """items: (mask, value). Pairs (lower, higher) between consecutive value groups."""
        groups: dict[Fraction, set[int]] = defaultdict(set)
        for m, v in items:
            groups[v].add(m)
        keys = sorted(groups)
        for lo, hi in zip(keys, keys[1:]):
            for a in sorted(groups[lo]):
                for b in sorted(groups[hi]):
                    yield a, b

    for g, col in sorted(h.columns().items()):
        for a, b in consecutive((f & g, v) for f, v in col.items()):
            emit(a, b)
    for f, row in sorted(h.rows().items()):
        classes: dict[int, list] = defaultdict(list)
        for g, v in row.items():
            classes[f & g].append((g, v))
        for items in classes.values():
            for g1, g2 in consecutive(items):
                emit(g2, g1)
    names = tuple(lattice.names[c + 1] for c in range(n))
    return InequalitySystem(n, tuple(found), names)


@dataclass(frozen=True)
class RankingFailure:
    condition: int
    filters: tuple[int, int, int]

    def render(self, lattice: Lattice) -> str:
        return f"({self.condition}) " + " ".join(lattice.format_filter(m) for m in self.filters)


def verify_ranking(w: Weighting, h: ExpertMatrix) -> list[RankingFailure]:
    """Check that mu under ``w`` reproduces every strict ranking of ``h``.

    Condition 1 compares given filters for a fixed requested filter;
    condition 2 compares requested filters for a fixed given filter inside
    one relevance class.
    """
    lat = h.lattice
    out: list[RankingFailure] = []

    def mu(f: int, g: int) -> Fraction:
        return match_value(w, Filter(f, lat), Filter(g, lat))

    for g, col in sorted(h.columns().items()):
        items = [(f, v, mu(f, g)) for f, v in col.items()]
        for f1, f2 in _monotone_failures(items):
            out.append(RankingFailure(1, (f1, f2, g)))
    for f, row in sorted(h.rows().items()):
        classes: dict[int, list] = defaultdict(list)
        for g, v in row.items():
            classes[f & g].append((g, v, mu(f, g)))
        for items in classes.values():
            for g1, g2 in _monotone_failures(items):
                out.append(RankingFailure(2, (f, g1, g2)))
    return out
