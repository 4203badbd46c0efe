from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from timedni.constraints import parse_constraint
from timedni.dbm import (
    INF,
    Zone,
    _closure,
    fed_complement,
    fed_contains,
    fed_is_empty,
    fed_merge,
    fed_subtract,
    le,
    lt,
)

CLOCKS = ("x", "y")


def Z(text, clocks=CLOCKS):
    return Zone.from_constraint(clocks, parse_constraint(text, allow_diagonal=True))


def val(**kw):
    return {c: Fraction(kw.get(c, 0)) for c in CLOCKS}


def test_bound_encoding_orders_strictness():
    assert lt(3) < le(3) < lt(4)
    assert INF > le(10**6)


def test_universe_and_zero():
    assert Zone.universe(CLOCKS).contains(val(x=7, y=Fraction(1, 3)))
    z = Zone.zero(CLOCKS)
    assert z.contains(val()) and not z.contains(val(x=Fraction(1, 10)))


def test_empty_zone():
    assert Z("x<1 && x>2").is_empty


def test_up_down():
    z = Zone.zero(CLOCKS).up()
    assert z.contains(val(x=3, y=3)) and not z.contains(val(x=3, y=2))
    d = Z("x==2 && y==3").down()
    assert d.contains(val(x=0, y=1)) and not d.contains(val(x=0, y=0))


def test_reset_and_pre_reset():
    z = Z("x>=1 && x<=2 && y<=5").reset(["x"])
    assert z.contains(val(x=0, y=5)) and not z.contains(val(x=1, y=0))
    p = Z("x==0 && y>=3").pre_reset(["x"])
    assert p.contains(val(x=9, y=4)) and not p.contains(val(x=9, y=2))


def test_includes_and_intersection():
    a, b = Z("x<=4"), Z("x>1 && x<=2")
    assert a.includes(b) and not b.includes(a)
    assert a.intersect(b) == b
    assert not Z("x<1").intersects(Z("x>1"))


def test_to_constraint_round_trip():
    z = Z("x>1 && x<=4 && y-x<0")
    assert Zone.from_constraint(CLOCKS, z.to_constraint()) == z


def test_complement_of_universe_is_empty():
    assert Zone.universe(CLOCKS).complement() == []


def test_federation_ops():
    a = Z("x<=4")
    b = Z("x>1 && x<=2")
    diff = fed_subtract([a], [b])
    assert not fed_contains(diff, val(x=Fraction(3, 2)))
    assert fed_contains(diff, val(x=3)) and fed_contains(diff, val(x=1))
    assert fed_is_empty(fed_subtract([b], [a]))
    merged = fed_merge(list(diff) + [b])
    assert fed_is_empty(fed_subtract(merged, [a])) and fed_is_empty(fed_subtract([a], merged))


def test_fed_complement_partitions():
    fed = [Z("x<1"), Z("x>3 && y<2")]
    comp = fed_complement(fed, CLOCKS)
    for x in range(0, 10):
        for y in range(0, 6):
            v = val(x=Fraction(x, 2), y=Fraction(y, 2))
            assert fed_contains(fed, v) != fed_contains(comp, v)


def test_lift_and_project():
    z = Z("x<=2", ("x",))
    lifted = z.lift(CLOCKS)
    assert lifted.contains(val(x=1, y=100))
    assert lifted.project(("x",)) == z


bound = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-5, 5), st.booleans()).filter(
    lambda t: t[0] != t[1]
)


def zone_from(bs):
    triples = [(i, j, le(c) if strict is False else lt(c)) for i, j, c, strict in bs]
    return Zone.from_bounds(CLOCKS, triples)


valuations = st.fixed_dictionaries({c: st.fractions(0, 7, max_denominator=4) for c in CLOCKS})


@given(st.lists(bound, max_size=5))
def test_canonical_idempotent(bs):
    z = zone_from(bs)
    if z.is_empty:
        return
    m = [list(r) for r in z.m]
    assert _closure(m)
    assert tuple(map(tuple, m)) == z.m


@settings(max_examples=150)
@given(st.lists(bound, max_size=4), st.lists(valuations, min_size=1, max_size=20))
def test_complement_disjoint_cover(bs, vs):
    z = zone_from(bs)
    comp = z.complement()
    for v in vs:
        hits = sum(p.contains(v) for p in comp)
        assert hits == (0 if z.contains(v) else 1)


@given(st.lists(bound, max_size=4), valuations, st.fractions(0, 3, max_denominator=4))
def test_up_contains_delays(bs, v, d):
    z = zone_from(bs)
    if z.contains(v):
        assert z.up().contains({c: x + d for c, x in v.items()})


@given(st.lists(bound, max_size=4), st.lists(bound, max_size=4), valuations)
def test_intersection_semantics(b1, b2, v):
    z1, z2 = zone_from(b1), zone_from(b2)
    assert z1.intersect(z2).contains(v) == (z1.contains(v) and z2.contains(v))


@given(st.lists(bound, max_size=4), valuations)
def test_reset_semantics(bs, v):
    z = zone_from(bs)
    if z.contains(v):
        assert z.reset(["y"]).contains({"x": v["x"], "y": Fraction(0)})


@given(st.lists(bound, max_size=4), st.lists(bound, max_size=4))
def test_includes_matches_subtraction(b1, b2):
    z1, z2 = zone_from(b1), zone_from(b2)
    assert z1.includes(z2) == fed_is_empty(fed_subtract([z2], [z1]))
