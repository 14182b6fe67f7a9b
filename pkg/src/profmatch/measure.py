"""Weightings, exact matching measures, matching value terms and admissible relations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InputError
from .lattice import Filter, Lattice, bits

_WEIGHT_RE = re.compile(r"^weight\s+(\S+)\s+(\S+)$")


@dataclass(frozen=True)
class Weighting:
    """Strictly positive rational weights, indexed by concept id, summing to 1."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        ws = tuple(Fraction(x) for x in self.weights)
        object.__setattr__(self, "weights", ws)
        for i, x in enumerate(ws):
            if x <= 0:
                raise InputError(f"weight of concept {i} must be positive, got {x}")
        total = sum(ws, Fraction(0))
        if total != 1:
            raise InputError(f"weights sum to {total}, not 1")

    @classmethod
    def uniform(cls, n: int) -> "Weighting":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    @classmethod
    def normalized(cls, values: Iterable) -> "Weighting":
        vals = [Fraction(v) for v in values]
        if any(v <= 0 for v in vals):
            raise InputError("weights must be positive")
        total = sum(vals, Fraction(0))
        return cls(tuple(v / total for v in vals))

    def __getitem__(self, c: int) -> Fraction:
        return self.weights[c]

    def __len__(self) -> int:
        return len(self.weights)


def parse_weights(text: str, lattice: Lattice, normalize: bool = False) -> Weighting:
    """Read ``weight <concept> <p>/<q>`` lines; every concept needs exactly one weight."""
    found: dict[int, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _WEIGHT_RE.match(line)
        if not m:
            raise InputError(f"syntax error: {line!r}", lineno)
        name, value = m.groups()
        if name not in lattice.index:
            raise InputError(f"weight for undeclared concept {name!r}", lineno)
        try:
            x = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a rational number: {value!r}", lineno) from None
        if x <= 0:
            raise InputError(f"weight of {name} must be positive, got {value}", lineno)
        c = lattice.index[name]
        if c in found:
            raise InputError(f"duplicate weight for {name!r}", lineno)
        found[c] = x
    missing = [lattice.names[c] for c in range(lattice.n) if c not in found]
    if missing:
        raise InputError("no weight given for: " + ", ".join(missing))
    vals = [found[c] for c in range(lattice.n)]
    total = sum(vals, Fraction(0))
    if total != 1 and not normalize:
        raise InputError(f"weights sum to {total}, not 1 (pass --normalize to rescale)")
    return Weighting.normalized(vals)


def format_weights(w: Weighting, lattice: Lattice) -> str:
    return "".join(f"weight {lattice.names[c]} {w[c]}\n" for c in range(lattice.n))


def _mask(s) -> int:
    if isinstance(s, Filter):
        return s.members
    if isinstance(s, int):
        return s
    m = 0
    for c in s:
        m |= 1 << c
    return m


def weight_of(w: Weighting, s) -> Fraction:
    """Total weight of a concept set (a Filter, a bitset or an iterable of ids)."""
    return sum((w.weights[c] for c in bits(_mask(s))), Fraction(0))


def match_value(w: Weighting, given: Filter, requested: Filter) -> Fraction:
    """mu(given, requested) = w(given & requested) / w(requested)."""
    return weight_of(w, given.members & requested.members) / weight_of(w, requested.members)


def inverse_match_value(w: Weighting, given: Filter, requested: Filter) -> Fraction:
    """The over-qualification measure: the match with arguments swapped."""
    return match_value(w, requested, given)


@dataclass(frozen=True)
class MatchValueTerm:
    """The symbolic fraction w(A)/w(B) for a filter pair.

    A is the intersection of the pair, B the requested filter. Every term
    with A == B is stored as the canonical one, (L, L).
    """

    numerator: int
    denominator: int
    lattice: Lattice = field(compare=False, repr=False)

    def __post_init__(self):
        if self.numerator == self.denominator:
            object.__setattr__(self, "numerator", self.lattice.full)
            object.__setattr__(self, "denominator", self.lattice.full)

    @property
    def is_one(self) -> bool:
        return self.numerator == self.denominator

    def evaluate(self, w) -> Fraction:
        num = sum((w[c] for c in bits(self.numerator)), Fraction(0))
        den = sum((w[c] for c in bits(self.denominator)), Fraction(0))
        return num / den

    def symbols(self, letters: str = "abcdefghijklmnopqrstuvwxyz") -> str:
        if self.is_one:
            return "1"
        n = self.lattice.n
        sym = (lambda c: letters[c]) if n <= len(letters) else (lambda c: self.lattice.names[c])
        num = "+".join(sym(c) for c in bits(self.numerator))
        den = "+".join(sym(c) for c in bits(self.denominator))
        num = f"({num})" if self.numerator.bit_count() > 1 else num
        return f"{num}/({den})"

    def __str__(self) -> str:
        return self.symbols()


def mvt_of(given: Filter, requested: Filter) -> MatchValueTerm:
    return MatchValueTerm(given.members & requested.members, requested.members, requested.lattice)


def mvt_leq(v1: MatchValueTerm, v2: MatchValueTerm) -> bool:
    """v1 <= v2 under every positive substitution.

    Closed form: A1 within A2, and B2 - A2 within B1 - A1.
    """
    a1, b1, a2, b2 = v1.numerator, v1.denominator, v2.numerator, v2.denominator
    return a1 & ~a2 == 0 and (b2 & ~a2) & ~(b1 & ~a1) == 0


def mvt_join(v1: MatchValueTerm, v2: MatchValueTerm) -> MatchValueTerm:
    f1, g1, f2, g2 = v1.numerator, v1.denominator, v2.numerator, v2.denominator
    return MatchValueTerm(f1 | f2, (g1 | f2) & (f1 | g2), v1.lattice)


def mvt_meet(v1: MatchValueTerm, v2: MatchValueTerm) -> MatchValueTerm:
    f1, g1, f2, g2 = v1.numerator, v1.denominator, v2.numerator, v2.denominator
    lat = v1.lattice
    den = lat.close((g1 & ~f1) | (g2 & ~f2) | (f1 & f2))
    return MatchValueTerm(f1 & f2, den, lat)


def all_mvts(lattice: Lattice, filters: list[Filter] | None = None) -> set[MatchValueTerm]:
    fs = filters if filters is not None else lattice.filters()
    return {mvt_of(f, g) for f in fs for g in fs}


@dataclass(frozen=True)
class AdmissibleRelation:
    pairs: frozenset[tuple[Filter, Filter]]


class NotAdmissible(InputError):
    def __init__(self, condition: int, witness: tuple[Filter, Filter]):
        self.condition = condition
        self.witness = witness
        f, g = witness
        super().__init__(f"admissibility condition ({condition}) fails at ({f}, {g})")


def check_admissible(r: AdmissibleRelation, lattice: Lattice) -> tuple[int, tuple[Filter, Filter]] | None:
    """Return the first violated condition and a witness pair, or None."""
    filters = lattice.filters()
    is_filter = {f.members for f in filters}
    pairs = {(f.members, g.members) for f, g in r.pairs}
    for f in filters:
        for g in filters:
            if g <= f and (f.members, g.members) not in pairs:
                return 1, (f, g)
    for fm, gm in sorted(pairs):
        for c in bits(gm & ~fm):
            smaller = gm & ~(1 << c)
            if smaller and smaller in is_filter and (fm, smaller) not in pairs:
                return 2, (Filter(fm, lattice), Filter(gm, lattice))
        for c in range(lattice.n):
            bigger = (fm | 1 << c, gm | 1 << c)
            if bigger[0] in is_filter and bigger[1] in is_filter and bigger not in pairs:
                return 3, (Filter(fm, lattice), Filter(gm, lattice))
    return None


def admissible_mvt_filter(r: AdmissibleRelation, lattice: Lattice) -> set[MatchValueTerm]:
    """The set of terms of an admissible relation; it is an upward-closed set of terms."""
    bad = check_admissible(r, lattice)
    if bad is not None:
        raise NotAdmissible(*bad)
    terms = {mvt_of(f, g) for f, g in r.pairs}
    universe = all_mvts(lattice)
    for v in terms:
        for u in universe:
            if mvt_leq(v, u) and u not in terms:
                raise AssertionError(f"term set not upward closed: {v} <= {u}")
    return terms
