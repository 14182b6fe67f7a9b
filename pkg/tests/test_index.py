import random
from fractions import Fraction as Fr

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_topk, naive_topk_for, random_lattice, random_profiles, random_weights
from profmatch.errors import InputError
from profmatch.index import (
    ProfileRecord,
    add_profile,
    build_index,
    make_records,
    threshold_for,
    topk,
    topk_given,
)
from profmatch.lattice import Profile
from profmatch.measure import Weighting


def test_worked_top3(diamond, diamond_index):
    req = diamond.parse_filter("<C2|C3>")
    res = topk(diamond_index, req, 3)
    assert res.ids() == {"B", "C", "D", "E"}
    assert res.lam == 4 and res.threshold == Fr(1, 2)
    assert dict(res.entries) == {"B": 1, "C": Fr(5, 8), "D": Fr(1, 2), "E": Fr(1, 2)}


def test_worked_top2(diamond, diamond_index):
    res = topk(diamond_index, diamond.parse_filter("<C2|C3>"), 2)
    assert res.ids() == {"B", "C"} and res.lam == 2 and res.threshold == Fr(5, 8)


def test_worked_records(diamond, diamond_index):
    recs = diamond_index.records[diamond.parse_filter("<C2|C3>").members]
    assert recs == (
        ProfileRecord(Fr(1), 0, 1, 3, ("B",)),
        ProfileRecord(Fr(5, 8), 1, 1, 2, ("C",)),
        ProfileRecord(Fr(1, 2), 2, 2, 0, ("D", "E")),
    )


def test_threshold_for(diamond, diamond_index):
    req = diamond.parse_filter("<C2|C3>")
    assert threshold_for(diamond_index, req, 1) == 1
    assert threshold_for(diamond_index, req, 2) == Fr(5, 8)
    assert threshold_for(diamond_index, req, 3) == Fr(1, 2)
    with pytest.raises(InputError):
        threshold_for(diamond_index, req, 4)


def test_floor_cuts_low_groups(diamond, diamond_index):
    req = diamond.parse_filter("<C2|C3>")
    res = topk(diamond_index, req, 3, floor=Fr(3, 5))
    assert res.ids() == {"B", "C"}
    assert topk(diamond_index, req, 3, floor=Fr(2)).lam == 0


def test_virtual_column(diamond, diamond_index):
    req = diamond.parse_filter("<C4>")
    res = topk(diamond_index, req, 1)
    assert res.virtual
    assert res.ids() == {"B"} and res.threshold == Fr(4, 5)
    assert not topk(diamond_index, diamond.parse_filter("<C2>"), 1).virtual


def test_row_oriented_query(diamond, diamond_index):
    res = topk_given(diamond_index, diamond.parse_filter("<C2>"), 1)
    assert res.ids() == {"A"} and res.threshold == Fr(5, 8)


def test_k_must_be_positive(diamond, diamond_index):
    with pytest.raises(InputError):
        topk(diamond_index, diamond.parse_filter("<C2>"), 0)


def test_duplicate_profile_rejected(diamond, diamond_index):
    with pytest.raises(InputError, match="duplicate"):
        add_profile(diamond_index, Profile("B", frozenset({1})))


def test_make_records_counts():
    recs = make_records({"a": Fr(1, 2), "b": Fr(1), "c": Fr(1, 2), "d": Fr(0)})
    assert [(r.fitness, r.greater, r.equal, r.lesser) for r in recs] == [
        (Fr(1), 0, 1, 3), (Fr(1, 2), 1, 2, 1), (Fr(0), 3, 1, 0)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_topk_matches_naive(seed):
    rng = random.Random(seed)
    lat = random_lattice(rng)
    w = Weighting(random_weights(rng, lat.n))
    profiles = random_profiles(rng, lat, rng.randint(1, 25))
    index = build_index(lat, w, profiles)
    for f in lat.filters():
        for k in (1, 2, 3, 5):
            assert topk(index, f, k).ids() == naive_topk_for(lat, w, profiles, f.members, k)


def _same(a, b):
    return (a.filters == b.filters and a.matrix == b.matrix and a.records == b.records
            and a.profile_filter == b.profile_filter and set(a.profiles) == set(b.profiles)
            and set(a.requests) == set(b.requests))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**9))
def test_add_profile_equals_rebuild(seed):
    rng = random.Random(seed)
    lat = random_lattice(rng)
    w = Weighting(random_weights(rng, lat.n))
    profiles = random_profiles(rng, lat, rng.randint(2, 20), requests=rng.randint(0, 2))
    cut = rng.randint(1, len(profiles) - 1)
    index = build_index(lat, w, profiles[:cut])
    for p in profiles[cut:]:
        index = add_profile(index, p)
    assert _same(index, build_index(lat, w, profiles))


def test_add_profile_leaves_original(diamond, diamond_index):
    before = dict(diamond_index.records)
    new = add_profile(diamond_index, Profile("F", frozenset({3})))
    assert diamond_index.records == before and "F" not in diamond_index.profiles
    assert topk(new, diamond.parse_filter("<C2|C3>"), 1).ids() == {"B", "F"}


def test_naive_topk_helper():
    assert naive_topk({"a": 1, "b": 1, "c": 0}, 1) == {"a", "b"}
