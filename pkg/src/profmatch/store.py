"""Saving and loading match indexes as a directory of TSV tables.

Every file starts with a metadata line carrying the format version and the
SHA-256 of the remaining bytes. Fitness values are written as exact p/q.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from pathlib import Path

from .errors import IndexFormatError
from .index import MatchIndex, ProfileRecord, filter_order
from .lattice import Filter, Profile, lattice_from_order
from .measure import Weighting, match_value


FORMAT = "profmatch-index"
VERSION = 1

RECORD_COLUMNS = ["ID", "RequiredFilter", "Fitness", "GreaterFitness", "EqualFitness", "LesserFitness", "NextID"]
MATCH_COLUMNS = ["ID", "RequiredFilter", "RequiredProfile", "GivenFilter", "GivenProfile", "Fitness", "NextID"]
CONCEPT_COLUMNS = ["ID", "Name", "Weight", "Parents"]
PROFILE_COLUMNS = ["ID", "Kind", "Filter", "Asserted"]
MATRIX_COLUMNS = ["GivenFilter", "RequiredFilter", "Fitness"]

NULL = "null"


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    body = "\t".join(header) + "\n" + "".join("\t".join(str(c) for c in r) + "\n" for r in rows)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    path.write_text(f"# {FORMAT} version={VERSION} sha256={digest}\n{body}", encoding="utf-8")


def _read_table(path: Path, header: list[str]) -> list[list[str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IndexFormatError(f"missing index table {path.name}") from None
    meta, _, body = text.partition("\n")
    parts = dict(p.split("=", 1) for p in meta.split()[2:] if "=" in p) if meta.startswith(f"# {FORMAT} ") else None
    if parts is None:
        raise IndexFormatError(f"{path.name}: missing metadata line")
    if parts.get("version") != str(VERSION):
        raise IndexFormatError(f"{path.name}: unsupported format version {parts.get('version')!r}")
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != parts.get("sha256"):
        raise IndexFormatError(f"{path.name}: checksum mismatch (file truncated or modified)")
    lines = body.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].split("\t") != header:
        raise IndexFormatError(f"{path.name}: unexpected header")
    rows = [ln.split("\t") for ln in lines[1:]]
    for i, r in enumerate(rows, start=3):
        if len(r) != len(header):
            raise IndexFormatError(f"{path.name} line {i}: expected {len(header)} fields")
    return rows


def save_index(index: MatchIndex, path) -> None:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    lat = index.lattice
    fmt = lat.format_filter

    _write_table(d / "Concepts.tsv", CONCEPT_COLUMNS, [
        [c, lat.names[c], index.weighting[c], "|".join(lat.names[p] for p in lat.upper_covers(c)) or "-"]
        for c in range(lat.n)])
    profs = sorted(list(index.profiles.values()) + list(index.requests.values()), key=lambda p: p.id)
    _write_table(d / "Profiles.tsv", PROFILE_COLUMNS, [
        [p.id, p.kind, fmt(index.profile_filter[p.id]), "|".join(sorted(lat.names[c] for c in p.asserted))]
        for p in profs])
    _write_table(d / "Matrix.tsv", MATRIX_COLUMNS, [
        [fmt(f), fmt(g), index.matrix[f, g]] for f in index.filters for g in index.filters])

    requests_by_filter: dict[int, list[str]] = {}
    for rid in sorted(index.requests):
        requests_by_filter.setdefault(index.profile_filter[rid], []).append(rid)

    rec_rows, match_rows = [], []
    rid = mid = 0
    for g in index.filters:
        recs = index.records[g]
        base = rid
        for i, rec in enumerate(recs):
            rid += 1
            nxt = base + i + 2 if i + 1 < len(recs) else NULL
            rec_rows.append([rid, fmt(g), rec.fitness, rec.greater, rec.equal, rec.lesser, nxt])
            req = "|".join(requests_by_filter.get(g, [])) or "-"
            for j, pid in enumerate(rec.profiles):
                mid += 1
                nxt = mid + 1 if j + 1 < len(rec.profiles) else NULL
                match_rows.append([mid, fmt(g), req, fmt(index.profile_filter[pid]), pid, rec.fitness, nxt])
    _write_table(d / "ProfileRecords.tsv", RECORD_COLUMNS, rec_rows)
    _write_table(d / "MatchingProfiles.tsv", MATCH_COLUMNS, match_rows)


def _chains(rows: list[list[str]], group_of, name: str) -> list[list[list[str]]]:
    """Follow NextID links; each chain is a list of rows in link order."""
    by_id: dict[str, list[str]] = {}
    for r in rows:
        if r[0] in by_id:
            raise IndexFormatError(f"{name}: duplicate ID {r[0]}")
        by_id[r[0]] = r
    targets = {}
    for r in rows:
        nxt = r[-1]
        if nxt == NULL:
            continue
        if nxt not in by_id:
            raise IndexFormatError(f"{name}: dangling NextID {nxt} in row {r[0]}")
        if group_of(by_id[nxt]) != group_of(r):
            raise IndexFormatError(f"{name}: NextID {nxt} leaves its group")
        if nxt in targets:
            raise IndexFormatError(f"{name}: rows {targets[nxt]} and {r[0]} both link to {nxt}")
        targets[nxt] = r[0]
    chains = []
    seen: set[str] = set()
    for r in rows:
        if r[0] in targets:
            continue
        chain = []
        cur = r
        while True:
            seen.add(cur[0])
            chain.append(cur)
            if cur[-1] == NULL:
                break
            cur = by_id[cur[-1]]
        chains.append(chain)
    if len(seen) != len(rows):
        raise IndexFormatError(f"{name}: NextID chain contains a cycle")
    return chains


def _frac(s: str, name: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise IndexFormatError(f"{name}: bad rational {s!r}") from None


def _int(s: str, name: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise IndexFormatError(f"{name}: bad integer {s!r}") from None


def load_index(path) -> MatchIndex:
    d = Path(path)
    if not d.is_dir():
        raise IndexFormatError(f"index directory not found: {d}")
    concepts = _read_table(d / "Concepts.tsv", CONCEPT_COLUMNS)
    names = [r[1] for r in concepts]
    edges = [(r[1], p) for r in concepts if r[3] != "-" for p in r[3].split("|")]
    try:
        lat = lattice_from_order(names, edges)
    except Exception as e:
        raise IndexFormatError(f"Concepts.tsv: {e}") from None
    for r in concepts:
        if lat.index.get(r[1]) != _int(r[0], "Concepts.tsv"):
            raise IndexFormatError("Concepts.tsv: concept ids do not match the rebuilt lattice")
    try:
        w = Weighting(tuple(_frac(r[2], "Concepts.tsv") for r in sorted(concepts, key=lambda r: int(r[0]))))
    except IndexFormatError:
        raise
    except Exception as e:
        raise IndexFormatError(f"Concepts.tsv: {e}") from None

    def pfilter(text: str, name: str) -> int:
        try:
            return lat.parse_filter(text).members
        except Exception as e:
            raise IndexFormatError(f"{name}: {e}") from None

    given: dict[str, Profile] = {}
    requests: dict[str, Profile] = {}
    pf: dict[str, int] = {}
    for r in _read_table(d / "Profiles.tsv", PROFILE_COLUMNS):
        pid, kind = r[0], r[1]
        if kind not in ("profile", "request"):
            raise IndexFormatError(f"Profiles.tsv: unknown kind {kind!r}")
        try:
            asserted = frozenset(lat.id_of(n) for n in r[3].split("|"))
        except Exception as e:
            raise IndexFormatError(f"Profiles.tsv: {e}") from None
        p = Profile(pid, asserted, kind)
        pf[pid] = pfilter(r[2], "Profiles.tsv")
        if lat.close(sum(1 << c for c in asserted)) != pf[pid]:
            raise IndexFormatError(f"Profiles.tsv: filter of {pid} does not match its concepts")
        (requests if kind == "request" else given)[pid] = p
    filters = tuple(filter_order(pf.values()))

    matrix: dict[tuple[int, int], Fraction] = {}
    for r in _read_table(d / "Matrix.tsv", MATRIX_COLUMNS):
        f, g = pfilter(r[0], "Matrix.tsv"), pfilter(r[1], "Matrix.tsv")
        v = _frac(r[2], "Matrix.tsv")
        if v != match_value(w, Filter(f, lat), Filter(g, lat)):
            raise IndexFormatError(f"Matrix.tsv: stored value {r[2]} disagrees with the weighting")
        matrix[f, g] = v
    if set(matrix) != {(f, g) for f in filters for g in filters}:
        raise IndexFormatError("Matrix.tsv: matrix does not cover exactly the indexed filters")

    rec_rows = _read_table(d / "ProfileRecords.tsv", RECORD_COLUMNS)
    match_rows = _read_table(d / "MatchingProfiles.tsv", MATCH_COLUMNS)
    members: dict[tuple[int, Fraction], list[str]] = {}
    for chain in _chains(match_rows, lambda r: (r[1], r[5]), "MatchingProfiles.tsv"):
        key = (pfilter(chain[0][1], "MatchingProfiles.tsv"), _frac(chain[0][5], "MatchingProfiles.tsv"))
        if key in members:
            raise IndexFormatError("MatchingProfiles.tsv: fitness group split across chains")
        members[key] = [r[4] for r in chain]
        for r in chain:
            if r[4] not in given or pf[r[4]] != pfilter(r[3], "MatchingProfiles.tsv"):
                raise IndexFormatError(f"MatchingProfiles.tsv: unknown or mismatched profile {r[4]}")

    records: dict[int, tuple[ProfileRecord, ...]] = {g: () for g in filters}
    for chain in _chains(rec_rows, lambda r: r[1], "ProfileRecords.tsv"):
        g = pfilter(chain[0][1], "ProfileRecords.tsv")
        if g not in records or records[g]:
            raise IndexFormatError(f"ProfileRecords.tsv: unexpected column {chain[0][1]}")
        recs = []
        for r in chain:
            v = _frac(r[2], "ProfileRecords.tsv")
            ids = tuple(members.pop((g, v), ()))
            rec = ProfileRecord(v, _int(r[3], "ProfileRecords.tsv"), _int(r[4], "ProfileRecords.tsv"),
                                _int(r[5], "ProfileRecords.tsv"), ids)
            if rec.equal != len(ids) or rec.equal < 1:
                raise IndexFormatError(f"ProfileRecords.tsv: record {r[0]} count disagrees with its profiles")
            if recs and not v < recs[-1].fitness:
                raise IndexFormatError(f"ProfileRecords.tsv: record {r[0]} breaks descending order")
            recs.append(rec)
        records[g] = tuple(recs)
    if members:
        raise IndexFormatError("MatchingProfiles.tsv: entries without a matching profile record")

    index = MatchIndex(lat, w, filters, matrix, given, requests, pf, records)
    _validate(index)
    return index


def _validate(index: MatchIndex) -> None:
    total = len(index.profiles)
    for g, recs in index.records.items():
        above = 0
        for rec in recs:
            if (rec.greater, rec.greater + rec.equal + rec.lesser) != (above, total):
                raise IndexFormatError("ProfileRecords.tsv: inconsistent greater/equal/lesser counts")
            for pid in rec.profiles:
                if index.matrix[index.profile_filter[pid], g] != rec.fitness:
                    raise IndexFormatError(f"profile {pid} filed under the wrong fitness")
            above += rec.equal
        if above != total:
            raise IndexFormatError("a column does not account for every profile")
