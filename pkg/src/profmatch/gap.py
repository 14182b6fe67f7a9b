"""(k, l)-gap queries: minimal extensions that move a profile into top-k lists."""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError
from .index import MatchIndex, topk_given
from .lattice import Filter, Profile, bits
from .measure import match_value

DEFAULT_MAX_SELECTIONS = 100_000


@dataclass(frozen=True)
class GapCandidate:
    extension: int  # concept bitset E
    supporting: tuple[str, ...]  # requested profiles whose top-k the extended profile enters


@dataclass(frozen=True)
class GapResult:
    candidates: tuple[GapCandidate, ...]
    truncated: bool
    selections: int


class _Coverage:
    """Counts requested profiles whose top-k an extended profile would enter."""

    def __init__(self, index: MatchIndex, p: Profile, k: int, requested: list[str]):
        self.index, self.k = index, k
        self.requested = requested
        lat = index.lattice
        others = [pid for pid in index.profiles if pid != p.id]
        self.sorted_vals = {}
        for rid in requested:
            g = index.profile_filter[rid]
            self.sorted_vals[rid] = sorted(index.value(index.profile_filter[q], g) for q in others)
        self.lat = lat

    def supporting(self, filt: int) -> list[str]:
        out = []
        fo = Filter(filt, self.lat)
        for rid in self.requested:
            g = self.index.profile_filter[rid]
            v = match_value(self.index.weighting, fo, Filter(g, self.lat))
            vals = self.sorted_vals[rid]
            better = len(vals) - bisect.bisect_right(vals, v)
            if better < self.k:
                out.append(rid)
        return out


def gap_query(index: MatchIndex, p: Profile, k: int, l: int,
              max_selections: int = DEFAULT_MAX_SELECTIONS) -> GapResult:
    """Minimal concept sets E such that F(p) | E is in the top-k of at least l requested profiles."""
    if k < 1 or l < 1:
        raise InputError("k and l must be positive integers")
    lat = index.lattice
    F = p.filter(lat).members
    pool = index.requests if index.requests else {q: v for q, v in index.profiles.items() if q != p.id}
    requested = sorted(pool)
    if l > len(requested):
        raise InputError(f"l={l} exceeds the {len(requested)} available requested profiles")
    pf = dict(index.profile_filter)
    pf.setdefault(p.id, F)
    cover = _Coverage(index, p, k, requested)

    # (1) the l best-fitting requested profiles, ties included.
    vals = {rid: index.value(F, pf[rid]) for rid in requested}
    ranked = sorted(requested, key=lambda r: (-vals[r], r))
    cut = vals[ranked[l - 1]]
    chosen = [r for r in ranked if vals[r] >= cut]

    # (2)-(3) per requested profile: differences to its top-k, minus dominated ones.
    diffs: list[list[int]] = []
    others = {q: v for q, v in index.profiles.items() if q != p.id}
    for rid in chosen:
        g = pf[rid]
        scores = sorted(((index.value(pf[q], g), q) for q in others), key=lambda t: (-t[0], t[1]))
        top = [q for s, q in scores if sum(1 for s2, _ in scores if s2 > s) < k]
        ds = {pf[q] & ~F for q in top}
        minimal = sorted(d for d in ds if not any(e != d and e & ~d == 0 for e in ds))
        diffs.append(minimal or [0])

    # (4)-(5) one difference per selected requested profile, unioned, then shrunk.
    found: set[int] = set()
    count = 0
    truncated = False
    for combo in itertools.combinations(range(len(chosen)), l):
        for pick in itertools.product(*(diffs[i] for i in combo)):
            count += 1
            if count > max_selections:
                truncated = True
                break
            E = 0
            for d in pick:
                E |= d
            if len(cover.supporting(F | E)) >= l:
                found.add(_shrink(index, cover, F, E, l))
        if truncated:
            break

    minimal = [e for e in found if not any(o != e and o & ~e == 0 for o in found)]
    minimal.sort(key=lambda e: (e.bit_count(), e))
    cands = tuple(GapCandidate(e, tuple(cover.supporting(F | e))) for e in minimal)
    return GapResult(cands, truncated, min(count, max_selections))


def _shrink(index: MatchIndex, cover: _Coverage, F: int, E: int, l: int) -> int:
    """Drop removable concepts while coverage holds.

    Only minimal elements of F | E that lie in E can go without breaking the
    filter property. Coverage only grows with the filter, so a set from which
    no single concept can be removed is inclusion-minimal.
    """
    lat = index.lattice
    changed = True
    while changed:
        changed = False
        for c in sorted(bits(E), reverse=True):
            filt = F | E
            if lat.down[c] & filt != 1 << c:
                continue
            if len(cover.supporting(filt & ~(1 << c))) >= l:
                E &= ~(1 << c)
                changed = True
    return E


def is_minimal_gap(index: MatchIndex, p: Profile, k: int, l: int, E: int) -> bool:
    """Check coverage of F(p) | E and that no removable concept can be dropped."""
    lat = index.lattice
    F = p.filter(lat).members
    pool = index.requests if index.requests else {q: v for q, v in index.profiles.items() if q != p.id}
    cover = _Coverage(index, p, k, sorted(pool))
    filt = F | E
    if not lat.is_upset(filt) or len(cover.supporting(filt)) < l:
        return False
    for c in bits(E):
        if lat.down[c] & filt == 1 << c and len(cover.supporting(filt & ~(1 << c))) >= l:
            return False
    return True
