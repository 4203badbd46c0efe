from fractions import Fraction

import pytest

from timedni.constraints import TRUE, parse_constraint
from timedni.model import (
    EPS,
    AlphabetSpec,
    EpsilonError,
    ModelError,
    TimedWord,
    determinism_witness,
    fresh_names,
    hide,
    is_deterministic,
    is_dta,
    make_automaton,
    monitor_base,
    product,
    restrict,
    trim,
    untime,
    validate,
)
from conftest import corpus


def small():
    return make_automaton(
        "S",
        [("0", "x>=1", "h", [], "1"), ("1", "x<2", "l", ["x"], "2"), ("0", "l", "3")],
        low=["l"],
        high=["h"],
        clocks=["x"],
        invariants={"1": "x<=3"},
    )


def test_alphabet_problems():
    assert AlphabetSpec(frozenset("a"), frozenset("a"), frozenset()).problems()
    assert AlphabetSpec(frozenset("a"), frozenset("h"), frozenset("z")).problems()
    assert AlphabetSpec(frozenset({EPS}), frozenset(), frozenset()).problems()
    assert not AlphabetSpec(frozenset("a"), frozenset("h"), frozenset("h")).problems()


def test_make_automaton_collects_locations():
    a = small()
    assert a.locations == ("0", "1", "2", "3")
    assert a.initial == "0"
    assert a.invariant("1")[0] == parse_constraint("x<=3")
    assert a.invariant("0") == (TRUE,)
    assert validate(a) == []


def test_validate_reports_each_problem():
    a = make_automaton(
        "B",
        [("0", "y<1", "z", ["w"], "1")],
        low=["l"],
        clocks=["x"],
        invariants={"0": "x>=2"},
    )
    diags = validate(a)
    assert any("undeclared clock" in d for d in diags)
    assert any("not in the alphabet" in d for d in diags)
    assert any("resets undeclared" in d for d in diags)
    assert any("lower bound" in d for d in diags)
    assert not any("lower bound" in d for d in validate(a, internal=True))


def test_hide_and_restrict():
    a = small()
    h = hide(a, {"h"})
    assert [e.action for e in h.edges] == [EPS, "l", "l"]
    assert h.alphabet.high == frozenset()
    r = restrict(a, {"h"})
    assert [e.action for e in r.edges] == ["l", "l"]
    with pytest.raises(ModelError):
        hide(a, {"nope"})


def test_untime_drops_clocks():
    u = untime(small())
    assert u.clocks == () and all(e.guard.is_true and not e.resets for e in u.edges)
    assert u.invariant("1") == (TRUE,)


def test_timed_word_folds_silent_steps():
    w = TimedWord(((Fraction(1), EPS), (Fraction(1, 2), "l"), (0, "h"), (2, "l")))
    assert w.pairs == ((Fraction(3, 2), "l"), (0, "h"), (2, "l"))
    assert str(w.project({"l"})) == "(1.5, l)(2, l)"
    assert TimedWord.from_json(w.to_json()) == w
    with pytest.raises(ValueError):
        TimedWord(((-1, "l"),))


def test_fresh_names():
    m = fresh_names({"x", "x'"}, ["x", "y"])
    assert m["y"] == "y" and m["x"] not in {"x", "x'"}


def test_product_synchronises_and_renames():
    a1 = make_automaton("P", [("p0", "x<1", "a", [], "p1"), ("p0", "h", "p2")], low=["a"], high=["h"], clocks=["x"])
    a2 = make_automaton("Q", [("q0", "x>0", "a", ["x"], "q1")], low=["a"], clocks=["x"])
    arena, info = product(a1, a2, {"a"})
    assert len(arena.clocks) == 2 and info.clock_map["x"] != "x"
    sync = [e for e in arena.edges if e.action == "a"]
    assert len(sync) == 1
    assert sync[0].source == ("p0", "q0") and sync[0].target == ("p1", "q1")
    assert sync[0].resets == {info.clock_map["x"]}
    assert any(e.action == "h" and e.target == ("p2", "q0") for e in arena.edges)


def test_determinism():
    a = make_automaton("D", [("0", "x<2", "a", [], "1"), ("0", "x>=2", "a", [], "2")], low=["a"], clocks=["x"])
    assert is_deterministic(a)
    b = make_automaton("N", [("0", "x<=2", "a", [], "1"), ("0", "x>=2", "a", [], "2")], low=["a"], clocks=["x"])
    assert not is_deterministic(b)
    assert determinism_witness(b) is not None
    c = make_automaton("E", [("0", EPS, "1")], low=["a"])
    with pytest.raises(EpsilonError):
        is_deterministic(c)


def test_invariant_blocks_overlap():
    # the guards overlap at x==2, which the source invariant excludes
    a = make_automaton(
        "I",
        [("0", "x<=2", "a", [], "1"), ("0", "x>=2", "a", [], "2")],
        low=["a"],
        clocks=["x"],
        invariants={"0": "x<2"},
    )
    assert is_deterministic(a)


def test_is_dta_on_corpus():
    for name in ("A1", "A2", "Ag", "Ah", "K", "H", "P"):
        assert is_dta(corpus(name)), name
    assert not is_dta(corpus("N"))


def test_monitor_base_restricts_high():
    base = monitor_base(corpus("A1"))
    assert all(e.action in corpus("A1").alphabet.low for e in base.edges)


def test_trim_removes_unreachable():
    a = make_automaton("T", [("0", "a", "1"), ("2", "a", "0")], low=["a"])
    assert set(trim(a).locations) == {"0", "1"}
