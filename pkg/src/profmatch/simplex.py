"""A small exact-rational simplex solver (tableau form, Bland's rule)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass
class LPResult:
    status: str  # "optimal" or "unbounded"
    value: Fraction | None = None
    x: list[Fraction] | None = None
    duals: list[Fraction] | None = None
    ray: list[Fraction] | None = None


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Maximise c.x subject to A x <= b and x >= 0, where b >= 0.

    Because b is non-negative the slack basis is feasible and no first phase
    is needed. On unboundedness the improving ray (over x) is returned; on
    optimality the dual prices of the rows are returned as well.
    """
    m, n = len(A), len(c)
    if any(Fraction(v) < 0 for v in b):
        raise ValueError("right-hand side must be non-negative")
    zero, one = Fraction(0), Fraction(1)
    T = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [zero] * m + [Fraction(b[i])]
        row[n + i] = one
        T.append(row)
    obj = [-Fraction(v) for v in c] + [zero] * m + [zero]
    basis = [n + i for i in range(m)]

    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            ray = [zero] * n
            if enter < n:
                ray[enter] = one
            for i in range(m):
                if basis[i] < n:
                    ray[basis[i]] = -T[i][enter]
            return LPResult("unbounded", ray=ray)
        piv = T[leave][enter]
        prow = [v / piv for v in T[leave]]
        T[leave] = prow
        for i in range(m):
            if i != leave and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [u - f * p for u, p in zip(T[i], prow)]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [u - f * p for u, p in zip(obj, prow)]
        basis[leave] = enter

    x = [zero] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i][-1]
    return LPResult("optimal", value=obj[-1], x=x, duals=obj[n:n + m])
