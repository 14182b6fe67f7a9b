"""Degree-weighted concept graphs, fuzzy sets and fuzzy matching."""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

from .errors import InputError
from .lattice import Lattice

_EDGE_RE = re.compile(r"^edge\s+(\S+)\s+(\S+)$")
_XEDGE_RE = re.compile(r"^xedge\s+(\S+)\s+(\S+)\s+(\S+)$")
_NODE_RE = re.compile(r"^node\s+(\S+)$")


@dataclass(frozen=True)
class EnrichedGraph:
    """Lattice edges (degree 1) plus extra edges with degrees in (0, 1].

    An edge ``u -> v`` reads "u is more specific than v" for lattice edges,
    and "u suggests v with degree d" for extra edges.
    """

    nodes: tuple[str, ...]
    lattice_edges: tuple[tuple[str, str], ...]
    extra_edges: tuple[tuple[str, str, float], ...] = ()
    adjacency: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        known = set(self.nodes)
        adj: dict[str, list[tuple[str, float]]] = {v: [] for v in self.nodes}
        for u, v in self.lattice_edges:
            if u not in known or v not in known:
                raise InputError(f"edge {u} -> {v} references an unknown node")
            adj[u].append((v, 1.0))
        for u, v, d in self.extra_edges:
            if u not in known or v not in known:
                raise InputError(f"edge {u} -> {v} references an unknown node")
            if not 0 < d <= 1:
                raise InputError(f"degree {d} of {u} -> {v} outside (0, 1]")
            adj[u].append((v, float(d)))
        object.__setattr__(self, "adjacency", adj)
        self._check_acyclic()

    def _check_acyclic(self):
        succ: dict[str, list[str]] = {v: [] for v in self.nodes}
        for u, v in self.lattice_edges:
            succ[u].append(v)
        state = dict.fromkeys(self.nodes, 0)
        for s in self.nodes:
            if state[s]:
                continue
            stack = [(s, iter(succ[s]))]
            state[s] = 1
            while stack:
                v, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[v] = 2
                    stack.pop()
                elif state[nxt] == 1:
                    raise InputError(f"lattice edges form a cycle through {nxt}")
                elif state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(succ[nxt])))

    @classmethod
    def from_lattice(cls, lattice: Lattice, extra: Iterable[tuple[str, str, float]] = ()) -> "EnrichedGraph":
        edges = tuple((lattice.names[c], lattice.names[p]) for c in range(lattice.n) for p in lattice.upper_covers(c))
        return cls(lattice.names, edges, tuple(extra))

    def reachable(self, sources: Iterable[str]) -> set[str]:
        seen = set()
        todo = [s for s in sources]
        while todo:
            v = todo.pop()
            if v in seen:
                continue
            seen.add(v)
            todo.extend(u for u, _ in self.adjacency[v])
        return seen


def parse_graph(text: str) -> EnrichedGraph:
    """Read ``edge a b``, ``xedge a b 0.7`` and optional ``node a`` lines."""
    nodes: dict[str, None] = {}
    edges, extra = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _EDGE_RE.match(line):
            edges.append(m.groups())
        elif m := _XEDGE_RE.match(line):
            try:
                d = float(Fraction(m.group(3)))
            except (ValueError, ZeroDivisionError):
                raise InputError(f"bad degree {m.group(3)!r}", lineno) from None
            if not 0 < d <= 1:
                raise InputError(f"degree {m.group(3)} outside (0, 1]", lineno)
            extra.append((m.group(1), m.group(2), d))
        elif m := _NODE_RE.match(line):
            nodes.setdefault(m.group(1))
            continue
        else:
            raise InputError(f"syntax error: {line!r}", lineno)
        nodes.setdefault(m.group(1))
        nodes.setdefault(m.group(2))
    if not nodes:
        raise InputError("graph has no nodes")
    return EnrichedGraph(tuple(nodes), tuple(edges), tuple(extra))


@dataclass(frozen=True)
class FuzzySet:
    """Graded membership; absent elements have grade 0."""

    membership: Mapping[Hashable, float]

    def __post_init__(self):
        m = {k: float(v) for k, v in self.membership.items() if v != 0}
        for k, v in m.items():
            if not 0 < v <= 1:
                raise InputError(f"grade {v} of {k!r} outside (0, 1]")
        object.__setattr__(self, "membership", m)

    @classmethod
    def crisp(cls, elements: Iterable[Hashable]) -> "FuzzySet":
        return cls({e: 1.0 for e in elements})

    def __getitem__(self, k) -> float:
        return self.membership.get(k, 0.0)

    def support(self) -> set:
        return set(self.membership)

    def level(self, t: float) -> set:
        return {k for k, v in self.membership.items() if v >= t}

    def __and__(self, other: "FuzzySet") -> "FuzzySet":
        return FuzzySet({k: min(v, other[k]) for k, v in self.membership.items() if k in other.membership})

    def __or__(self, other: "FuzzySet") -> "FuzzySet":
        keys = self.support() | other.support()
        return FuzzySet({k: max(self[k], other[k]) for k in keys})


def extend_profile(g: EnrichedGraph, o: Iterable[str]) -> FuzzySet:
    """Grade every node by its best path product from any source.

    Runs Dijkstra on edge costs -log d; the reported grades are the path
    products themselves.
    """
    sources = list(dict.fromkeys(o))
    if not sources:
        raise InputError("cannot extend an empty concept set")
    for s in sources:
        if s not in g.adjacency:
            raise InputError(f"unknown node {s!r}")
    dist: dict[str, float] = {}
    grade: dict[str, float] = {}
    heap = []
    for i, s in enumerate(sources):
        dist[s] = 0.0
        grade[s] = 1.0
        heap.append((0.0, i, s))
    heapq.heapify(heap)
    done = set()
    tie = len(sources)
    while heap:
        cost, _, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for u, d in g.adjacency[v]:
            c = cost - math.log(d)
            if u not in dist or c < dist[u]:
                dist[u] = c
                grade[u] = grade[v] * d
                tie += 1
                heapq.heappush(heap, (c, tie, u))
    return FuzzySet(grade)


def fuzzy_weight(f: FuzzySet, weights=None) -> Fraction:
    """sum of grade * weight, in exact arithmetic over the float grades."""
    total = Fraction(0)
    for k, v in f.membership.items():
        wk = Fraction(1) if weights is None else Fraction(weights[k])
        total += Fraction(v) * wk
    return total


def fuzzy_match(weights, f: FuzzySet, g: FuzzySet) -> Fraction:
    """w(f & g) / w(g), with min as intersection; ``weights=None`` means unit weights."""
    den = fuzzy_weight(g, weights)
    if den == 0:
        raise InputError("requested fuzzy set has zero weight")
    return fuzzy_weight(f & g, weights) / den
