import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus, random_nfa
from timedni.constraints import TRUE, parse_constraint
from timedni.model import (
    LAMBDA,
    AlphabetSpec,
    Edge,
    ModelError,
    TimedAutomaton,
    TimedWord,
    is_deterministic,
    is_dta,
    make_automaton,
    restrict,
    untime,
)
from timedni.runs import accepts, run_word
from timedni.timed import (
    OutsideDecidableClass,
    build_inclusion_gadget,
    build_monitor_product,
    check_csnni_timed_dta,
    check_snni_timed,
    complete_deterministic,
    solve_safety_game,
    strategy_closure_violations,
    strategy_maximality_violations,
    synthesize_snni,
    timed_language_included,
)
from timedni.regions import build_region_graph
from timedni.untimed import check_csnni_untimed, check_snni_untimed

DELAYS = [Fraction(k, 2) for k in range(7)]


def random_dta(rng: random.Random, n_max=3):
    """One clock; low edges out of a location are deterministic by construction."""
    n = rng.randint(1, n_max)
    locs = [str(i) for i in range(n)]
    edges = []
    for q in locs:
        for act in ("a", "b"):
            r = rng.random()
            c = rng.randint(0, 2)
            if r < 0.35:
                edges.append(Edge(q, TRUE, act, frozenset(rng.choice([(), ("x",)])), rng.choice(locs)))
            elif r < 0.7:
                edges.append(Edge(q, parse_constraint(f"x<{c}") if c else TRUE, act, frozenset(), rng.choice(locs)))
                if c:
                    edges.append(Edge(q, parse_constraint(f"x>={c}"), act, frozenset(["x"]), rng.choice(locs)))
        for _ in range(rng.randint(0, 2)):
            g = rng.choice(["", "x<1", "x>=1", "x>1", "x<=2"])
            edges.append(Edge(q, parse_constraint(g), "h", frozenset(rng.choice([(), ("x",)])), rng.choice(locs)))
    inv = {}
    for q in locs:
        if rng.random() < 0.25:
            inv[q] = (parse_constraint(f"x<={rng.randint(1, 3)}"),)
    return TimedAutomaton(
        "T", tuple(locs), "0", ("x",),
        AlphabetSpec(frozenset("ab"), frozenset("h"), frozenset()), tuple(edges), inv,
    )


def sample_run(rng, a, steps=5):
    """A random concrete run of ``a``; returns the (delay, action) pairs."""
    q, v = a.initial, {c: Fraction(0) for c in a.clocks}
    out = []
    for _ in range(steps):
        opts = []
        for d in DELAYS:
            w = {c: x + d for c, x in v.items()}
            if not any(cc.holds(w) for cc in a.invariant(q)):
                continue
            for e in a.edges_from(q):
                if not e.guard.holds(w):
                    continue
                u = {c: (Fraction(0) if c in e.resets else x) for c, x in w.items()}
                if any(cc.holds(u) for cc in a.invariant(e.target)):
                    opts.append((d, e, u))
        if not opts:
            break
        d, e, v = rng.choice(opts)
        q = e.target
        out.append((d, e.action))
    return out


def test_witness_replay_A1():
    a = corpus("A1")
    v = check_snni_timed(a)
    assert not v.holds
    assert accepts(a, v.run)
    assert not accepts(restrict(a, a.alphabet.high), v.witness.pairs)
    assert TimedWord(tuple(v.run)).project(a.alphabet.low) == v.witness


def test_witness_replay_Ag():
    a = corpus("Ag")
    v = check_snni_timed(a)
    assert str(v.witness) == "(2.5, l)"
    assert accepts(a, v.run)
    assert not accepts(restrict(a, a.alphabet.high), v.witness.pairs)


def test_outside_dta_is_refused():
    with pytest.raises(OutsideDecidableClass):
        check_snni_timed(corpus("N"))
    with pytest.raises(OutsideDecidableClass):
        synthesize_snni(corpus("N"))


@pytest.mark.parametrize("name", ["A1", "Ag", "Ah", "K", "H", "P"])
def test_monitor_is_complete_and_faithful(name):
    # each timed word over the low actions has exactly one monitor run, and it
    # avoids the sink iff the low restriction accepts the word
    rng = random.Random(name)
    mp = build_monitor_product(corpus(name))
    low = sorted(mp.monitor.alphabet.low)
    for _ in range(300):
        word = [(rng.choice(DELAYS), rng.choice(low)) for _ in range(rng.randint(0, 4))]
        runs = run_word(mp.monitor, word)
        assert len(runs) == 1
        (q, _), = runs
        assert (q != mp.qbad) == accepts(mp.base, word)


def test_complete_deterministic_rejects_nondeterminism():
    with pytest.raises(ModelError):
        complete_deterministic(corpus("N"))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_timed_snni_is_sound_on_samples(seed):
    rng = random.Random(seed)
    a = random_dta(rng)
    if not is_dta(a):
        return
    v = check_snni_timed(a)
    low_part = restrict(a, a.alphabet.high)
    if v.holds:
        for _ in range(40):
            run = sample_run(rng, a)
            w = TimedWord(tuple(run)).project(a.alphabet.low)
            assert accepts(low_part, w.pairs), (run, w)
    else:
        assert accepts(a, v.run)
        assert not accepts(low_part, v.witness.pairs)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_timed_engine_agrees_with_untimed_on_clock_free(seed):
    a = random_nfa(random.Random(seed))
    if not is_dta(a):
        return
    assert check_snni_timed(a).holds == check_snni_untimed(a).holds
    # deterministic low part: cosimulation agrees with language equality
    assert check_csnni_timed_dta(a).holds == check_csnni_untimed(a).holds


def test_timed_inclusion():
    p = make_automaton("P", [("0", "x>1 && x<=2", "a", [], "1")], low=["a"], clocks=["x"])
    q = make_automaton("Q", [("0", "x>=1", "a", [], "1")], low=["a"], clocks=["x"])
    assert timed_language_included(p, q)[0]
    ok, w = timed_language_included(q, p)
    assert not ok and accepts(q, w.pairs) and not accepts(p, w.pairs)


def _tiny_game():
    # 0 -c-> bad, 0 -u-> 1, 1 -u-> 2 -c-> bad
    a = make_automaton("G", [("0", "c", "bad"), ("0", "u", "1"), ("1", "c", "2"), ("2", "u", "bad")], low=["c", "u"])
    rg = build_region_graph(a)
    bad = {i for i, (q, _) in enumerate(rg.nodes) if q == "bad"}
    return rg, bad


def test_safety_game():
    rg, bad = _tiny_game()
    s = solve_safety_game(rg, bad, {"c"})
    node = {q: i for i, (q, _) in enumerate(rg.nodes)}
    assert node["2"] not in s.winning
    assert s.allowed[node["0"]] == {LAMBDA}
    assert "c" not in s.allowed[node["1"]]
    assert not strategy_closure_violations(s)
    assert not strategy_maximality_violations(s)
    assert solve_safety_game(rg, bad, set()) is None


def test_first_round_strategy_A1():
    s = synthesize_snni(corpus("A1"), {"h"})
    first = s.rounds[0].strategy
    assert first.bad and not (first.bad & first.winning)
    assert not strategy_closure_violations(first)
    assert not strategy_maximality_violations(first)


def test_counter_final_shape():
    res = synthesize_snni(corpus("K"), {"a"})
    assert res.ok and res.effective_rounds == 2
    assert {e.action for e in res.final.edges} == {"h"}
    assert check_snni_timed(res.final).holds


def test_preempt_rounds():
    res = synthesize_snni(corpus("H"), {"a"})
    assert res.ok
    assert res.effective_rounds == 1 and res.iteration_count == 2
    assert not res.rounds[-1].effective


def test_gadget_shape():
    a1 = corpus("A2")
    a2 = corpus("A1")
    a1 = restrict(a1, a1.alphabet.high)
    a2 = restrict(a2, a2.alphabet.high)
    g = build_inclusion_gadget(a1, a2)
    assert is_dta(g)
    assert len(g.alphabet.high) == 1
    assert check_snni_timed(g).holds == timed_language_included(a2, a1)[0]


def test_gadget_needs_deterministic_first():
    nd = make_automaton("N", [("0", "a", "1"), ("0", "a", "2")], low=["a"])
    with pytest.raises(ModelError):
        build_inclusion_gadget(nd, nd)
