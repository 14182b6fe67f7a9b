"""Command-line interface.

Exit status: 0 success, 1 input or validation error, 2 infeasible or
inconsistent, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .errors import InputError, NotRealisable, ProfmatchError, ResourceCapExceeded
from .fuzzy import extend_profile, fuzzy_match, parse_graph
from .gap import DEFAULT_MAX_SELECTIONS, gap_query
from .index import build_index, threshold_for, topk
from .lattice import Profile, build_lattice, parse_knowledge_base, parse_profiles
from .learn import check_plausibility, derive_inequalities, parse_expert_matrix, verify_ranking
from .maxent import INCONSISTENT, build_sentences, maxent_solve, prob_match
from .measure import format_weights, inverse_match_value, match_value, mvt_of, parse_weights
from .realise import DEFAULT_MAX_ROWS, EPSILON, decide_realisability, extract_weights
from .render import fields, table
from .store import load_index, save_index


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _lattice(path: str):
    return build_lattice(parse_knowledge_base(_read(path)))


def _names(text: str) -> list[str]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise InputError("expected a comma-separated list of concept names")
    return names


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def cmd_validate(a, out) -> int:
    lat = _lattice(a.kb)
    pairs = [("concepts", lat.n), ("top", lat.names[lat.top]), ("bottom", lat.names[lat.bottom])]
    if a.weights:
        parse_weights(_read(a.weights), lat, a.normalize)
        pairs.append(("weights", "ok"))
    if a.profiles:
        pairs.append(("profiles", len(parse_profiles(_read(a.profiles), lat))))
    status = 0
    if a.matrix:
        h = parse_expert_matrix(_read(a.matrix), lat)
        bad = check_plausibility(h)
        pairs.append(("matrix_entries", len(h.entries)))
        pairs.append(("plausibility_violations", len(bad)))
        if bad:
            status = 1
            out.write(fields(pairs, a.format))
            out.write(table(["constraint", "witness"], [(v.constraint, v.render(lat)) for v in bad], a.format))
            return status
    out.write(fields(pairs, a.format))
    return status


def cmd_match(a, out) -> int:
    lat = _lattice(a.kb)
    w = parse_weights(_read(a.weights), lat, a.normalize)
    if a.given and a.requested:
        f, g = lat.parse_filter(a.given), lat.parse_filter(a.requested)
        out.write(fields([("given", str(f)), ("requested", str(g)), ("match", match_value(w, f, g)),
                          ("inverse", inverse_match_value(w, f, g)), ("term", str(mvt_of(f, g)))], a.format))
        return 0
    if a.given or a.requested:
        raise InputError("pass both --given and --requested, or neither for the full matrix")
    fs = lat.filters()
    rows = [(str(f), str(g), match_value(w, f, g)) for f in fs for g in fs]
    out.write(table(["given", "requested", "match"], rows, a.format))
    return 0


def cmd_topk(a, out) -> int:
    index = load_index(a.index)
    req = index.lattice.parse_filter(a.required)
    res = topk(index, req, a.k, a.floor)
    out.write(table(["profile", "fitness"], res.entries, a.format))
    if a.format == "machine":
        out.write(fields([("lambda", res.lam), ("threshold", res.threshold if res.threshold is not None else "none"),
                          ("virtual", str(res.virtual).lower())], a.format))
    if a.ell:
        out.write(fields([("threshold_for_ell", threshold_for(index, req, a.ell))], a.format))
    return 0


def cmd_gap(a, out) -> int:
    index = load_index(a.index)
    lat = index.lattice
    if a.profile:
        p = index.profiles.get(a.profile) or index.requests.get(a.profile)
        if p is None:
            raise InputError(f"unknown profile {a.profile!r}")
    elif a.given:
        p = Profile("__query__", frozenset(lat.id_of(n) for n in _names(a.given)))
    else:
        raise InputError("pass --profile or --given")
    res = gap_query(index, p, a.k, a.ell, a.max_selections)
    rows = [(lat.format_set(c.extension), "|".join(c.supporting)) for c in res.candidates]
    out.write(table(["extension", "supporting"], rows, a.format))
    out.write(fields([("selections", res.selections), ("truncated", str(res.truncated).lower())], a.format))
    if res.truncated:
        print("error: selection cap reached, result is partial", file=sys.stderr)
        return ResourceCapExceeded.exit_code
    return 0


def cmd_learn(a, out) -> int:
    lat = _lattice(a.kb)
    h = parse_expert_matrix(_read(a.matrix), lat)
    bad = check_plausibility(h)
    if bad:
        out.write(table(["constraint", "witness"], [(v.constraint, v.render(lat)) for v in bad], a.format))
        print(f"error: {len(bad)} plausibility violation(s)", file=sys.stderr)
        return 1
    system = derive_inequalities(h, lat, check=False)
    res = decide_realisability(system, a.max_rows, fallback=True)
    lines = system.render()
    if not res.realisable:
        out.write(table(["multiplier", "inequality"], list(zip(res.certificate, lines)), a.format))
        print("error: inequality system is not realisable", file=sys.stderr)
        return NotRealisable.exit_code
    w = extract_weights(system, lat, a.epsilon)
    failures = verify_ranking(w, h)
    if failures:
        out.write(table(["condition", "filters"], [(f.condition, f.render(lat)) for f in failures], a.format))
        print("error: learned weighting does not preserve the ranking", file=sys.stderr)
        return 1
    out.write(table(["concept", "weight"], [(lat.names[c], w[c]) for c in range(lat.n)], a.format))
    if a.out:
        Path(a.out).write_text(format_weights(w, lat), encoding="utf-8")
    return 0


def cmd_fuzzy(a, out) -> int:
    g = parse_graph(_read(a.graph))
    weights = None
    if a.weights:
        weights = {}
        for lineno, raw in enumerate(_read(a.weights).splitlines(), start=1):
            line = raw.split("#", 1)[0].split()
            if not line:
                continue
            if len(line) != 3 or line[0] != "weight":
                raise InputError("expected 'weight <node> <value>'", lineno)
            weights[line[1]] = Fraction(line[2])
        missing = [v for v in g.nodes if v not in weights]
        if missing:
            raise InputError("no weight given for: " + ", ".join(missing))
    f = extend_profile(g, _names(a.given))
    r = extend_profile(g, _names(a.requested))
    rows = [(v, f[v], r[v]) for v in g.nodes if f[v] or r[v]]
    out.write(table(["concept", "given", "requested"], rows, a.format))
    out.write(fields([("match", float(fuzzy_match(weights, f, r))),
                      ("inverse", float(fuzzy_match(weights, r, f)))], a.format))
    return 0


def cmd_entropy(a, out) -> int:
    g = parse_graph(_read(a.graph))
    given, requested = _names(a.given), _names(a.requested)
    if a.dump:
        scope = g.reachable(given + requested)
        atoms = [v for v in g.nodes if v in scope]
        db = build_sentences(g, a.mode, scope)
        model = maxent_solve(db, atoms)
        out.write(table(["world", "probability"], list(zip(model.world_labels(), map(float, model.probabilities))), a.format))
    value = prob_match(g, given, requested, a.mode)
    if value is INCONSISTENT:
        out.write(fields([("probability", "inconsistent")], a.format))
        return 2
    out.write(fields([("probability", float(value))], a.format))
    return 0


def cmd_index(a, out) -> int:
    if a.action == "build":
        if not (a.kb and a.weights and a.profiles):
            raise InputError("index build needs --kb, --weights and --profiles")
        lat = _lattice(a.kb)
        w = parse_weights(_read(a.weights), lat, a.normalize)
        index = build_index(lat, w, parse_profiles(_read(a.profiles), lat))
        save_index(index, a.index)
    elif a.action == "save":
        if not a.out:
            raise InputError("index save needs --out")
        index = load_index(a.index)
        save_index(index, a.out)
    else:
        index = load_index(a.index)
    out.write(fields([("filters", len(index.filters)), ("profiles", len(index.profiles)),
                      ("requests", len(index.requests)),
                      ("records", sum(len(r) for r in index.records.values()))], a.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["table", "machine"], default="table", help="output mode")
    p = argparse.ArgumentParser(prog="profmatch", description="Lattice-based profile matching.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a knowledge base and optional companion files")
    s.add_argument("--kb", required=True, help="knowledge-base file")
    s.add_argument("--weights", help="weights file")
    s.add_argument("--normalize", action="store_true", help="rescale weights that do not sum to 1")
    s.add_argument("--profiles", help="profiles file")
    s.add_argument("--matrix", help="expert matrix CSV; checked against the plausibility constraints")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("match", parents=[common], help="matching value of a filter pair, or the full matrix")
    s.add_argument("--kb", required=True)
    s.add_argument("--weights", required=True)
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--given", help="given filter, e.g. <C2|C4>")
    s.add_argument("--requested", help="requested filter")
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("topk", parents=[common], help="top-k given profiles for a required filter")
    s.add_argument("--index", required=True, help="index directory")
    s.add_argument("--required", required=True, help="required filter, e.g. <C2|C3>")
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--floor", type=_rational, default=Fraction(0), help="never return fitness below this")
    s.add_argument("--ell", type=_positive, help="also report the threshold reached by ell distinct filters")
    s.set_defaults(func=cmd_topk)

    s = sub.add_parser("gap", parents=[common], help="minimal extensions into top-k lists")
    s.add_argument("--index", required=True)
    s.add_argument("--profile", help="id of an indexed profile")
    s.add_argument("--given", help="comma-separated concepts of an ad-hoc profile")
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--ell", type=_positive, required=True)
    s.add_argument("--max-selections", type=_positive, default=DEFAULT_MAX_SELECTIONS)
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("learn", parents=[common], help="learn a ranking-preserving weighting")
    s.add_argument("--kb", required=True)
    s.add_argument("--matrix", required=True, help="expert matrix CSV (given,requested,value)")
    s.add_argument("--epsilon", type=_rational, default=EPSILON, help="LP margin")
    s.add_argument("--max-rows", type=_positive, default=DEFAULT_MAX_ROWS,
                   help="elimination row cap before falling back to the LP")
    s.add_argument("--out", help="write the learned weights file here")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("fuzzy", parents=[common], help="fuzzy extension and matching over a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--given", required=True, help="comma-separated concepts")
    s.add_argument("--requested", required=True, help="comma-separated concepts")
    s.add_argument("--weights", help="'weight <node> <value>' lines; unit weights by default")
    s.set_defaults(func=cmd_fuzzy)

    s = sub.add_parser("entropy", parents=[common], help="maximum-entropy probabilistic match")
    s.add_argument("--graph", required=True)
    s.add_argument("--given", required=True)
    s.add_argument("--requested", required=True)
    s.add_argument("--mode", choices=["lower-bound", "strict"], default="lower-bound")
    s.add_argument("--dump", action="store_true", help="print the model over all worlds")
    s.set_defaults(func=cmd_entropy)

    s = sub.add_parser("index", parents=[common], help="build, copy or check a persisted index")
    s.add_argument("action", choices=["build", "save", "load"])
    s.add_argument("--index", required=True, help="index directory")
    s.add_argument("--kb")
    s.add_argument("--weights")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--profiles")
    s.add_argument("--out", help="destination directory for 'save'")
    s.set_defaults(func=cmd_index)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; those are input errors here.
        return 0 if e.code in (0, None) else InputError.exit_code
    try:
        return args.func(args, out)
    except ProfmatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
