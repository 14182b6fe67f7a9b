import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_small_lattices, brute_closure, brute_upsets, random_lattice
from profmatch.errors import InputError, LatticeError
from profmatch.lattice import (
    Profile,
    bits,
    build_lattice,
    filter_close,
    lattice_from_order,
    parse_knowledge_base,
    parse_profiles,
)


def kb(text):
    return build_lattice(parse_knowledge_base(text))


def test_five_element_lattice_filters(five):
    assert five.names == ("C1", "C2", "C3", "C4", "C5")
    got = {frozenset(f.names()) for f in five.filters()}
    want = [{"C1"}, {"C1", "C2"}, {"C1", "C3"}, {"C1", "C2", "C3"}, {"C1", "C3", "C4"},
            {"C1", "C2", "C3", "C4"}, {"C1", "C2", "C3", "C4", "C5"}]
    assert got == {frozenset(s) for s in want}


def test_filter_generators_render(five):
    assert str(five.parse_filter("<C2|C4>")) == "<C2|C4>"
    assert str(five.parse_filter("<C4|C3>")) == "<C4>"
    assert five.parse_filter("<C5>").members == five.full


def test_blowup_chain_order():
    lat = kb("concept programming\nblowup programming experience { 1, 2, 3 }")
    e1, e2, e3 = (lat.id_of(f"programming.experience.{v}") for v in "123")
    p = lat.id_of("programming")
    assert lat.leq(e3, e2) and lat.leq(e2, e1) and lat.leq(e1, p)
    assert not lat.leq(e1, e2)
    assert lat.n == 4


def test_blowup_equals_hand_expansion():
    rng = random.Random(3)
    for _ in range(30):
        k = rng.randint(1, 4)
        vals = [f"v{i}" for i in range(k)]
        base = "concept A\nconcept B\naxiom B <= A\n"
        auto = kb(base + f"blowup B r {{ {', '.join(vals)} }}")
        names = ["B"] + [f"B.r.{v}" for v in vals]
        hand = base + "".join(f"concept {n}\n" for n in names[1:])
        hand += "".join(f"axiom {names[i + 1]} <= {names[i]}\n" for i in range(k))
        manual = kb(hand)
        assert auto.names == manual.names and auto.up == manual.up


def test_synthetic_top_and_bottom(antichain):
    assert antichain.names[0] == "__top__" and antichain.names[-1] == "__bottom__"
    assert antichain.names[1:-1] == ("x1", "x2", "x3", "x4", "x5")


def test_declaration_order_is_irrelevant():
    lines = ["concept C1", "concept C2", "concept C3", "axiom C2 <= C1", "axiom C3 <= C1"]
    a = kb("\n".join(lines))
    b = kb("\n".join(reversed(lines)))
    assert a.names == b.names and a.up == b.up


def test_natural_ordering_of_middle_ids():
    lat = kb("concept T\n" + "".join(f"concept x{i}\naxiom x{i} <= T\n" for i in (10, 2, 1)))
    assert lat.names[1:4] == ("x1", "x2", "x10")


@pytest.mark.parametrize("text,fragment", [
    ("concept A\nconcept A", "line 2: duplicate concept"),
    ("concept A\naxiom A <= B", "line 2: axiom references undeclared concept 'B'"),
    ("concept A\nnonsense here", "line 2: syntax error"),
    ("# only a comment\n", "no concepts declared"),
    ("concept A\nblowup Z r { 1 }", "line 2: blow-up references undeclared"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_knowledge_base(text)


def test_cycle_rejected():
    with pytest.raises(LatticeError, match="cycle"):
        kb("concept A\nconcept B\naxiom A <= B\naxiom B <= A")


def test_non_lattice_rejected():
    text = "concept T\nconcept B\nconcept a\nconcept b\nconcept c\nconcept d\n"
    text += "".join(f"axiom {x} <= T\n" for x in "ab")
    text += "".join(f"axiom {y} <= {x}\n" for x in "ab" for y in "cd")
    text += "".join(f"axiom B <= {y}\n" for y in "cd")
    with pytest.raises(LatticeError, match="not a lattice"):
        kb(text)


def test_small_lattice_counts():
    counts = [0] * 7
    for lat in all_small_lattices(6):
        counts[lat.n] += 1
    assert counts[1:] == [1, 1, 1, 2, 5, 15]


def test_filters_match_brute_force():
    for lat in all_small_lattices(6):
        assert sorted(f.members for f in lat.filters()) == sorted(m for m in brute_upsets(lat) if m >> lat.top & 1)


def test_join_and_meet_match_brute_force():
    for lat in all_small_lattices(6):
        n = lat.n
        for a in range(n):
            for b in range(n):
                ubs = [c for c in range(n) if lat.leq(a, c) and lat.leq(b, c)]
                lbs = [c for c in range(n) if lat.leq(c, a) and lat.leq(c, b)]
                assert lat.join(a, b) == next(c for c in ubs if all(lat.leq(c, d) for d in ubs))
                assert lat.meet(a, b) == next(c for c in lbs if all(lat.leq(d, c) for d in lbs))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_closure_is_smallest_upset(seed):
    rng = random.Random(seed)
    lat = random_lattice(rng)
    gens = {rng.randrange(lat.n) for _ in range(rng.randint(1, 3))}
    f = filter_close(lat, gens)
    assert f.members == brute_closure(lat, gens)
    assert lat.is_upset(f.members)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_filters_closed_under_union_and_intersection(seed):
    lat = random_lattice(random.Random(seed))
    fs = lat.filters()
    masks = {f.members for f in fs}
    for f in fs:
        assert f.members >> lat.top & 1
        for g in fs:
            assert (f | g).members in masks and (f & g).members in masks


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_order_is_a_partial_order(seed):
    lat = random_lattice(random.Random(seed))
    n = lat.n
    for a in range(n):
        assert lat.leq(a, a) and lat.leq(n - 1, a) and lat.leq(a, 0)
        for b in range(n):
            if a != b:
                assert not (lat.leq(a, b) and lat.leq(b, a))
            for c in range(n):
                if lat.leq(a, b) and lat.leq(b, c):
                    assert lat.leq(a, c)


def test_lattice_from_order_rejects_reserved_name():
    with pytest.raises(LatticeError, match="reserved"):
        lattice_from_order(["__top__", "a", "b"], [])


def test_profiles(diamond):
    ps = parse_profiles("profile P : C2, C3\nrequest R : C4\n", diamond)
    assert ps[0] == Profile("P", frozenset({1, 2}), "profile")
    assert ps[1].kind == "request"
    assert ps[1].filter(diamond).members == diamond.full
    assert list(bits(ps[0].filter(diamond).members)) == [0, 1, 2]


@pytest.mark.parametrize("text,fragment", [
    ("profile P : C9", "line 1"),
    ("profile P : C2\nprofile P : C3", "line 2: duplicate profile id"),
    ("profile P :", "line 1"),
])
def test_profile_errors(diamond, text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_profiles(text, diamond)
