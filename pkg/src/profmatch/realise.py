"""Realisability of strict inequality systems and extraction of weightings.

Fourier-Motzkin elimination decides realisability over positive values and
produces either a witness (by back-substitution) or a certificate: non-negative
integer multipliers whose combination has every right-hand multiplicity at
most the left-hand one. The margin LP computes the weighting actually used.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

import numpy as np

from .errors import NotRealisable, ResourceCapExceeded
from .lattice import Lattice
from .learn import InequalitySystem
from .measure import Weighting
from .simplex import maximize

EPSILON = Fraction(1, 1024)
DEFAULT_MAX_ROWS = 5000


@dataclass(frozen=True)
class RealisabilityResult:
    realisable: bool
    witness: tuple[Fraction, ...] | None = None
    certificate: tuple[int, ...] | None = None
    method: str = "fourier-motzkin"


def verify_witness(system: InequalitySystem, x) -> bool:
    return all(v > 0 for v in x) and all(q.holds(x) for q in system.inequalities)


def verify_certificate(system: InequalitySystem, cert) -> bool:
    """Pure multiset check: the combined left side contains the combined right side."""
    if len(cert) != len(system.inequalities) or any(k < 0 for k in cert) or not any(cert):
        return False
    total = [0] * system.n
    for k, q in zip(cert, system.inequalities):
        for i in q.lhs:
            total[i] += k
        for i in q.rhs:
            total[i] -= k
    return all(t >= 0 for t in total)


def _normalize(coef, mult):
    g = reduce(gcd, coef, reduce(gcd, mult, 0))
    if g > 1:
        coef = tuple(c // g for c in coef)
        mult = tuple(k // g for k in mult)
    return coef, mult


def _prune(rows):
    """Simplify a row list. Returns (rows, certificate or None)."""
    best: dict[tuple, tuple] = {}
    for coef, mult in rows:
        coef, mult = _normalize(coef, mult)
        if all(c >= 0 for c in coef):
            return [], mult
        if all(c <= 0 for c in coef):
            continue  # holds for every positive assignment
        old = best.get(coef)
        if old is None or sum(mult) < sum(old):
            best[coef] = mult
    out = sorted(best.items())
    if 1 < len(out) and max(abs(c) for coef, _ in out for c in coef) < 2**40:
        C = np.array([coef for coef, _ in out], dtype=np.int64)
        keep = np.ones(len(out), dtype=bool)
        for i in range(len(out)):
            if not keep[i]:
                continue
            # Row i implies every row it dominates componentwise.
            dominated = np.all(C <= C[i], axis=1) & keep
            dominated[i] = False
            keep &= ~dominated
        out = [r for r, k in zip(out, keep) if k]
    return out, None


def decide_realisability(system: InequalitySystem, max_rows: int = DEFAULT_MAX_ROWS,
                         fallback: bool = False) -> RealisabilityResult:
    """Decide realisability by Fourier-Motzkin elimination in ascending variable order.

    Raises ResourceCapExceeded when the row count exceeds ``max_rows``, unless
    ``fallback`` is set, in which case the margin LP decides instead.
    """
    n, m = system.n, len(system.inequalities)
    rows = []
    for j, q in enumerate(system.inequalities):
        mult = [0] * m
        mult[j] = 1
        rows.append((tuple(q.coefficients(n)), tuple(mult)))
    cur, cert = _prune(rows)
    levels = []
    for v in range(n):
        if cert is not None:
            break
        pos = [r for r in cur if r[0][v] > 0]
        neg = [r for r in cur if r[0][v] < 0]
        new = [r for r in cur if r[0][v] == 0]
        # A positive-coefficient row stays valid with x_v dropped, since x_v > 0.
        for coef, mult in pos:
            new.append((coef[:v] + (0,) + coef[v + 1:], mult))
        for pc, pm in pos:
            a = pc[v]
            for nc, nm in neg:
                b = -nc[v]
                new.append((tuple(b * x + a * y for x, y in zip(pc, nc)),
                            tuple(b * x + a * y for x, y in zip(pm, nm))))
        levels.append((v, pos, neg))
        if len(new) > max_rows:
            if fallback:
                return _lp_decide(system)
            raise ResourceCapExceeded(f"Fourier-Motzkin produced {len(new)} rows (cap {max_rows})")
        cur, cert = _prune(new)
    if cert is not None:
        return RealisabilityResult(False, certificate=tuple(cert))
    assert not cur

    x: list[Fraction] = [Fraction(0)] * n
    for v, pos, neg in reversed(levels):
        lo, hi = Fraction(0), None
        for coef, _ in pos:
            rest = sum((c * x[i] for i, c in enumerate(coef) if i != v and c), Fraction(0))
            bound = -rest / coef[v]
            hi = bound if hi is None or bound < hi else hi
        for coef, _ in neg:
            rest = sum((c * x[i] for i, c in enumerate(coef) if i != v and c), Fraction(0))
            bound = rest / -coef[v]
            lo = max(lo, bound)
        x[v] = lo + 1 if hi is None else (lo + hi) / 2
    witness = tuple(x)
    assert verify_witness(system, witness), "back-substitution produced an invalid witness"
    return RealisabilityResult(True, witness=witness)


def _margin_lp(system: InequalitySystem, epsilon: Fraction):
    """Solve min sum(x) s.t. sum_V x - sum_U x >= eps, x >= eps.

    Works on the dual so that the simplex starts from a feasible basis.
    Returns ("ok", x) or ("infeasible", integer certificate).
    """
    n, ineqs = system.n, system.inequalities
    if not ineqs:
        return "ok", [epsilon] * n
    # With y = x - eps each row reads M y >= b.
    b = [epsilon * (1 - len(q.rhs) + len(q.lhs)) for q in ineqs]
    A = [[0] * len(ineqs) for _ in range(n)]
    for j, q in enumerate(ineqs):
        for i in q.rhs:
            A[i][j] += 1
        for i in q.lhs:
            A[i][j] -= 1
    res = maximize(b, A, [1] * n)
    if res.status == "unbounded":
        den = reduce(lcm, (z.denominator for z in res.ray), 1)
        ints = [int(z * den) for z in res.ray]
        g = reduce(gcd, ints, 0) or 1
        return "infeasible", [k // g for k in ints]
    return "ok", [y + epsilon for y in res.duals]


def _lp_decide(system: InequalitySystem) -> RealisabilityResult:
    status, data = _margin_lp(system, EPSILON)
    if status == "ok":
        return RealisabilityResult(True, witness=tuple(data), method="lp")
    return RealisabilityResult(False, certificate=tuple(data), method="lp")


def extract_weights(system: InequalitySystem, lattice: Lattice, epsilon: Fraction = EPSILON) -> Weighting:
    """A weighting satisfying every inequality with margin ``epsilon``.

    Variable i belongs to concept id i + 1; top and bottom get ``epsilon``.
    """
    if system.n != max(lattice.n - 2, 0):
        raise ValueError("system does not match the lattice")
    status, data = _margin_lp(system, epsilon)
    if status == "infeasible":
        raise NotRealisable("inequality system is not realisable", certificate=tuple(data))
    x = data
    for q in system.inequalities:
        assert sum((x[i] for i in q.rhs), Fraction(0)) - sum((x[i] for i in q.lhs), Fraction(0)) >= epsilon
    if lattice.n == 1:
        return Weighting((Fraction(1),))
    raw = [epsilon] + list(x) + [epsilon]
    return Weighting.normalized(raw)
