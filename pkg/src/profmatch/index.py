"""Precomputed match index with per-column profile records and top-k queries.

A column is a required filter. For each column the given profiles are grouped
by fitness into records, ordered by strictly descending fitness; each record
counts the profiles ranked above, at and below it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InputError
from .lattice import Filter, Lattice, Profile
from .measure import Weighting, match_value


@dataclass(frozen=True)
class ProfileRecord:
    fitness: Fraction
    greater: int
    equal: int
    lesser: int
    profiles: tuple[str, ...]


@dataclass(frozen=True)
class TopKResult:
    entries: tuple[tuple[str, Fraction], ...]
    lam: int
    threshold: Fraction | None
    virtual: bool = False

    def ids(self) -> set[str]:
        return {p for p, _ in self.entries}


def filter_order(masks: Iterable[int]) -> list[int]:
    return sorted(set(masks), key=lambda m: (m.bit_count(), m))


def make_records(values: Mapping[str, Fraction]) -> tuple[ProfileRecord, ...]:
    """Group profile ids by fitness, descending, with above/at/below counts."""
    groups: dict[Fraction, list[str]] = {}
    for pid, v in values.items():
        groups.setdefault(v, []).append(pid)
    total = len(values)
    out = []
    above = 0
    for v in sorted(groups, reverse=True):
        ids = tuple(sorted(groups[v]))
        out.append(ProfileRecord(v, above, len(ids), total - above - len(ids), ids))
        above += len(ids)
    return tuple(out)


def walk_records(records: Iterable[ProfileRecord], k: int, floor: Fraction = Fraction(0)) -> TopKResult:
    """Take whole fitness groups while fewer than k profiles rank above them."""
    if k < 1:
        raise InputError("k must be a positive integer")
    entries = []
    threshold = None
    for rec in records:
        if rec.greater >= k or rec.fitness < floor:
            break
        entries.extend((pid, rec.fitness) for pid in rec.profiles)
        threshold = rec.fitness
    return TopKResult(tuple(entries), len(entries), threshold)


@dataclass(frozen=True, eq=False)
class MatchIndex:
    lattice: Lattice
    weighting: Weighting
    filters: tuple[int, ...]
    matrix: dict[tuple[int, int], Fraction]
    profiles: dict[str, Profile]
    requests: dict[str, Profile]
    profile_filter: dict[str, int]
    records: dict[int, tuple[ProfileRecord, ...]]

    def filter_of(self, pid: str) -> Filter:
        return Filter(self.profile_filter[pid], self.lattice)

    def value(self, given: int, required: int) -> Fraction:
        v = self.matrix.get((given, required))
        if v is None:
            v = match_value(self.weighting, Filter(given, self.lattice), Filter(required, self.lattice))
        return v

    def column(self, required: int) -> tuple[tuple[ProfileRecord, ...], bool]:
        """Records of a column and whether the column had to be computed on the fly."""
        if required in self.records:
            return self.records[required], False
        vals = {pid: self.value(self.profile_filter[pid], required) for pid in self.profiles}
        return make_records(vals), True

    def profiles_by_filter(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for pid in sorted(self.profiles):
            out.setdefault(self.profile_filter[pid], []).append(pid)
        return out

    def given_filters(self) -> list[int]:
        return filter_order(self.profile_filter[p] for p in self.profiles)


def build_index(lattice: Lattice, w: Weighting, profiles: Iterable[Profile]) -> MatchIndex:
    given: dict[str, Profile] = {}
    requests: dict[str, Profile] = {}
    pf: dict[str, int] = {}
    for p in profiles:
        if p.id in pf:
            raise InputError(f"duplicate profile id {p.id!r}")
        (requests if p.kind == "request" else given)[p.id] = p
        pf[p.id] = p.filter(lattice).members
    filters = tuple(filter_order(pf.values()))
    fobj = {m: Filter(m, lattice) for m in filters}
    matrix = {(f, g): match_value(w, fobj[f], fobj[g]) for f in filters for g in filters}
    records = {}
    for g in filters:
        records[g] = make_records({pid: matrix[pf[pid], g] for pid in given})
    return MatchIndex(lattice, w, filters, matrix, given, requests, pf, records)


def topk(index: MatchIndex, required: Filter, k: int, floor: Fraction = Fraction(0)) -> TopKResult:
    """Given profiles with fewer than k profiles strictly better for ``required``.

    Ties at the boundary are included. Groups below ``floor`` are never returned.
    """
    records, virtual = index.column(required.members)
    res = walk_records(records, k, Fraction(floor))
    return replace(res, virtual=virtual)


def topk_given(index: MatchIndex, given: Filter, k: int, floor: Fraction = Fraction(0)) -> TopKResult:
    """Row-oriented variant: rank requested profiles by how well ``given`` covers them.

    The requested population is the index's requests, or its given profiles
    when no requests were loaded.
    """
    pop = index.requests or index.profiles
    vals = {pid: index.value(given.members, index.profile_filter[pid]) for pid in pop}
    return walk_records(make_records(vals), k, Fraction(floor))


def threshold_for(index: MatchIndex, required: Filter, l: int) -> Fraction:
    """Largest t such that at least l distinct given filters reach t for ``required``."""
    if l < 1:
        raise InputError("l must be a positive integer")
    vals = sorted((index.value(f, required.members) for f in index.given_filters()), reverse=True)
    if len(vals) < l:
        raise InputError(f"only {len(vals)} distinct given filters, fewer than l={l}")
    return vals[l - 1]


def _insert(records: tuple[ProfileRecord, ...], pid: str, v: Fraction) -> tuple[ProfileRecord, ...]:
    out = []
    placed = False
    for rec in records:
        if rec.fitness > v:
            out.append(replace(rec, lesser=rec.lesser + 1))
        elif rec.fitness == v:
            out.append(replace(rec, equal=rec.equal + 1, profiles=tuple(sorted(rec.profiles + (pid,)))))
            placed = True
        else:
            if not placed:
                above = rec.greater
                out.append(ProfileRecord(v, above, 1, rec.greater + rec.equal + rec.lesser - above, (pid,)))
                placed = True
            out.append(replace(rec, greater=rec.greater + 1))
    if not placed:
        above = sum(r.equal for r in records)
        out.append(ProfileRecord(v, above, 1, 0, (pid,)))
    return tuple(out)


def add_profile(index: MatchIndex, p: Profile) -> MatchIndex:
    """A new index with ``p`` added; the original is left untouched."""
    if p.id in index.profile_filter:
        raise InputError(f"duplicate profile id {p.id!r}")
    lat, w = index.lattice, index.weighting
    f = p.filter(lat).members
    pf = dict(index.profile_filter)
    pf[p.id] = f
    matrix = index.matrix
    records = dict(index.records)
    filters = index.filters
    if f not in index.records:
        matrix = dict(matrix)
        fo = Filter(f, lat)
        for g in filters:
            go = Filter(g, lat)
            matrix[f, g] = match_value(w, fo, go)
            matrix[g, f] = match_value(w, go, fo)
        matrix[f, f] = Fraction(1)
        filters = tuple(filter_order(filters + (f,)))
        records[f] = make_records({pid: matrix[pf[pid], f] for pid in index.profiles})
    given, requests = index.profiles, index.requests
    if p.kind == "request":
        requests = {**requests, p.id: p}
    else:
        given = {**given, p.id: p}
        for g in filters:
            records[g] = _insert(records[g], p.id, matrix[f, g])
    return MatchIndex(lat, w, filters, matrix, given, requests, pf, records)
