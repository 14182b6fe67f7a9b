"""Text rendering for CLI reports.

Table mode aligns columns for people; machine mode prints one
``key=value`` record per line. Rationals print as p/q, probabilities with
nine decimals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return f"{v:.9f}"
    return str(v)


def table(header: Sequence[str], rows: Sequence[Sequence], mode: str = "table") -> str:
    cells = [[fmt_value(c) for c in r] for r in rows]
    if mode == "machine":
        return "".join(" ".join(f"{h}={c}" for h, c in zip(header, r)) + "\n" for r in cells)
    widths = [len(h) for h in header]
    for r in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, r)]
    lines = [header] + cells
    return "".join(" ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in lines)


def fields(pairs: Sequence[tuple[str, object]], mode: str = "table") -> str:
    if mode == "machine":
        return "".join(f"{k}={fmt_value(v)}\n" for k, v in pairs)
    width = max((len(k) for k, _ in pairs), default=0)
    return "".join(f"{k.ljust(width)}  {fmt_value(v)}\n" for k, v in pairs)
