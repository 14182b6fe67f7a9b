"""Probabilistic sentences and maximum-entropy models over elementary conjunctions.

Worlds are enumerated with the first atom outermost and "true" first, so for
atoms (a, b) the order is ab, a~b, ~ab, ~a~b.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import InconsistentDatabase, InputError, ResourceCapExceeded
from .fuzzy import EnrichedGraph

MAX_ATOMS = 20
MAX_ITER = 500
TOL = 1e-10

Literal = tuple[str, bool]


@dataclass(frozen=True)
class Event:
    """A conjunction of literals; the empty conjunction is the sure event."""

    literals: tuple[Literal, ...] = ()

    @classmethod
    def of(cls, *terms: str) -> "Event":
        """Build from names, with a leading ``~`` for negation."""
        lits = []
        for t in terms:
            t = t.strip()
            lits.append((t[1:], False) if t.startswith("~") else (t, True))
        return cls(tuple(sorted(set(lits))))

    @property
    def atoms(self) -> list[str]:
        return [a for a, _ in self.literals]

    def is_contradiction(self) -> bool:
        return any((a, not s) in self.literals for a, s in self.literals)

    def __str__(self) -> str:
        return "&".join(("" if s else "~") + a for a, s in self.literals) or "T"


@dataclass(frozen=True)
class Sentence:
    """P(consequence | condition) lies in [lower, upper]."""

    consequence: Event
    condition: Event
    lower: float
    upper: float

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper <= 1:
            raise InputError(f"bounds [{self.lower}, {self.upper}] are not an interval in [0, 1]")

    def __str__(self) -> str:
        return f"P({self.consequence}|{self.condition})[{self.lower:g},{self.upper:g}]"


@dataclass(frozen=True)
class PModel:
    atoms: tuple[str, ...]
    probabilities: np.ndarray

    def world_labels(self) -> list[str]:
        out = []
        for i in range(len(self.probabilities)):
            out.append("".join(("" if _truth(i, j, len(self.atoms)) else "~") + a + " "
                               for j, a in enumerate(self.atoms)).strip())
        return out

    def prob(self, e: Event) -> float:
        return float(self.probabilities[event_mask(e, self.atoms)].sum())

    def entropy(self) -> float:
        return entropy(self.probabilities)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def _truth(world: int, j: int, l: int) -> bool:
    return (world >> (l - 1 - j)) & 1 == 0


def event_mask(e: Event, atoms: Sequence[str]) -> np.ndarray:
    l = len(atoms)
    idx = np.arange(2 ** l)
    mask = np.ones(2 ** l, dtype=bool)
    pos = {a: j for j, a in enumerate(atoms)}
    for a, s in e.literals:
        if a not in pos:
            raise InputError(f"event refers to unknown atom {a!r}")
        t = ((idx >> (l - 1 - pos[a])) & 1) == 0
        mask &= t if s else ~t
    return mask


def constraint_rows(db: Iterable[Sentence], atoms: Sequence[str]) -> np.ndarray:
    """Rows r with r . p >= 0, two per sentence at most."""
    rows = []
    for c in db:
        a = event_mask(c.condition, atoms)
        b = event_mask(c.consequence, atoms)
        ab = (a & b).astype(float)
        anb = (a & ~b).astype(float)
        if c.lower > 0:
            rows.append((1 - c.lower) * ab - c.lower * anb)
        if c.upper < 1:
            rows.append(c.upper * anb - (1 - c.upper) * ab)
    return np.array(rows).reshape(len(rows), 2 ** len(atoms))


def _support(A: np.ndarray) -> np.ndarray:
    """Largest set of worlds that some feasible model gives positive mass.

    Maximises sum(s) with A q >= 0, s <= q, 0 <= s <= 1; the cone is
    closed under addition, so one LP finds the maximal support.
    """
    m, n = A.shape
    if m == 0:
        return np.ones(n, dtype=bool)
    As = sparse.csr_matrix(A)
    I = sparse.identity(n, format="csr")
    A_ub = sparse.vstack([sparse.hstack([-As, sparse.csr_matrix((m, n))]), sparse.hstack([-I, I])]).tocsr()
    b_ub = np.zeros(m + n)
    c = np.concatenate([np.zeros(n), -np.ones(n)])
    bounds = [(0, None)] * n + [(0, 1)] * n
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"support LP failed: {res.message}")
    return res.x[n:] > 0.5


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _logsumexp(z: np.ndarray) -> float:
    m = z.max()
    return float(m + np.log(np.exp(z - m).sum()))


def _dual_newton(A: np.ndarray) -> np.ndarray:
    """Minimise log sum exp(A^T lam) over lam >= 0 by projected Newton steps."""
    m, n = A.shape
    lam = np.zeros(m)
    if m == 0:
        return np.full(n, 1.0 / n)
    f = _logsumexp(A.T @ lam)
    for _ in range(MAX_ITER):
        p = _softmax(A.T @ lam)
        g = A @ p
        pg = np.where(lam > 0, g, np.minimum(g, 0))
        if np.abs(pg).max() < TOL:
            break
        free = ~((lam <= 0) & (g > 0))
        d = np.zeros(m)
        Af = A[free]
        gf = g[free]
        H = (Af * p) @ Af.T - np.outer(gf, gf)
        step = np.linalg.lstsq(H + 1e-14 * np.eye(len(gf)), -gf, rcond=None)[0]
        if not np.all(np.isfinite(step)) or step @ gf >= 0:
            step = -gf
        d[free] = step
        t = 1.0
        for _ in range(60):
            new = np.maximum(lam + t * d, 0.0)
            fn = _logsumexp(A.T @ new)
            if fn <= f + 1e-4 * g @ (new - lam):
                break
            t *= 0.5
        else:
            break
        if np.abs(new - lam).max() < 1e-15:
            break
        lam, f = new, fn
    return _softmax(A.T @ lam)


def maxent_solve(db: Sequence[Sentence], atoms: Sequence[str], max_atoms: int = MAX_ATOMS) -> PModel:
    atoms = tuple(atoms)
    if len(set(atoms)) != len(atoms):
        raise InputError("duplicate atom")
    if len(atoms) > max_atoms:
        raise ResourceCapExceeded(f"{len(atoms)} atoms exceed the cap of {max_atoms}")
    A = constraint_rows(db, atoms)
    S = _support(A)
    if not S.any():
        raise InconsistentDatabase("no probability model satisfies every sentence")
    AS = A[:, S]
    AS = AS[np.abs(AS).max(axis=1) > 0] if len(AS) else AS
    p = np.zeros(2 ** len(atoms))
    p[S] = _dual_newton(AS)
    return PModel(atoms, p)


class _Inconsistent:
    def __repr__(self) -> str:
        return "INCONSISTENT"


INCONSISTENT = _Inconsistent()


def _atoms_of(db: Iterable[Sentence], *events: Event) -> list[str]:
    seen: dict[str, None] = {}
    for c in db:
        for a in c.condition.atoms + c.consequence.atoms:
            seen.setdefault(a)
    for e in events:
        for a in e.atoms:
            seen.setdefault(a)
    return list(seen)


def prob_query(db: Sequence[Sentence], b: Event, a: Event, atoms: Sequence[str] | None = None):
    """me[DB](a & b) / me[DB](a), or INCONSISTENT when conditioning on a is impossible."""
    atoms = list(atoms) if atoms is not None else _atoms_of(db, a, b)
    if a.is_contradiction():
        return INCONSISTENT
    try:
        model = maxent_solve(db, atoms)
    except InconsistentDatabase:
        return INCONSISTENT
    ma = event_mask(a, atoms)
    if not (ma & (model.probabilities > 0)).any():
        return INCONSISTENT
    pa = model.probabilities[ma].sum()
    return float(model.probabilities[ma & event_mask(b, atoms)].sum() / pa)


def build_sentences(g: EnrichedGraph, mode: str = "lower-bound", scope: Iterable[str] | None = None) -> list[Sentence]:
    """One sentence per edge inside ``scope`` (all nodes by default)."""
    if mode not in ("lower-bound", "strict"):
        raise InputError(f"unknown mode {mode!r}")
    keep = set(g.nodes if scope is None else scope)
    out = []
    for u, v in g.lattice_edges:
        if u in keep and v in keep:
            out.append(Sentence(Event.of(v), Event.of(u), 1.0, 1.0))
    for u, v, d in g.extra_edges:
        if u in keep and v in keep:
            out.append(Sentence(Event.of(v), Event.of(u), d, 1.0 if mode == "lower-bound" else d))
    return out


def prob_match(g: EnrichedGraph, given: Iterable[str], requested: Iterable[str], mode: str = "lower-bound"):
    """QP(ev(requested) | ev(given)) over the nodes reachable from both profiles."""
    given, requested = list(given), list(requested)
    for v in given + requested:
        if v not in g.adjacency:
            raise InputError(f"unknown node {v!r}")
    scope = g.reachable(given + requested)
    atoms = [v for v in g.nodes if v in scope]
    if len(atoms) > MAX_ATOMS:
        raise ResourceCapExceeded(f"query scope has {len(atoms)} atoms, cap is {MAX_ATOMS}")
    db = build_sentences(g, mode, scope)
    return prob_query(db, Event.of(*requested), Event.of(*given), atoms)
