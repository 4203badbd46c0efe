"""Finite (clock-free) automata: closures, determinization, inclusion,
weak (bi)simulation and the SNNI-family checkers and control problems."""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

from .model import EPS, AlphabetSpec, Edge, ModelError, TimedAutomaton, TimedWord, hide, restrict


class ClockedInputError(ModelError):
    pass


def _need_clock_free(*autos):
    for a in autos:
        if a.clocks:
            raise ClockedInputError(f"{a.name} has clocks; use the timed engine")


def _succ(a: TimedAutomaton) -> dict:
    out: dict = {q: {} for q in a.locations}
    for e in a.edges:
        out.setdefault(e.source, {}).setdefault(e.action, set()).add(e.target)
    return out


def epsilon_closure(a: TimedAutomaton) -> dict:
    _need_clock_free(a)
    succ = _succ(a)
    closure = {}
    for q in a.locations:
        seen = {q}
        stack = [q]
        while stack:
            p = stack.pop()
            for r in succ.get(p, {}).get(EPS, ()):
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        closure[q] = frozenset(seen)
    return closure


class _Weak:
    """Materialised weak steps ``=a=>`` of a finite automaton."""

    def __init__(self, a: TimedAutomaton):
        self.a = a
        self.closure = epsilon_closure(a)
        self.succ = _succ(a)
        self._cache: dict = {}

    def step(self, states, action) -> frozenset:
        """Strong ``action`` step from a set of states, then ε-closure."""
        out = set()
        for q in states:
            for r in self.succ.get(q, {}).get(action, ()):
                out |= self.closure[r]
        return frozenset(out)

    def weak(self, q, action) -> frozenset:
        key = (q, action)
        if key not in self._cache:
            if action == EPS:
                self._cache[key] = self.closure[q]
            else:
                self._cache[key] = self.step(self.closure[q], action)
        return self._cache[key]

    def moves(self, q):
        """Strong moves ``(action, target)`` including ε."""
        for act, tgts in sorted(self.succ.get(q, {}).items()):
            for t in sorted(tgts, key=repr):
                yield act, t

    def visible(self) -> list[str]:
        return sorted({e.action for e in self.a.edges if e.action != EPS})


def determinize(a: TimedAutomaton, name: str | None = None) -> TimedAutomaton:
    """Subset construction; locations are frozensets of ``a``'s locations."""
    _need_clock_free(a)
    w = _Weak(a)
    start = w.closure[a.initial]
    seen = {start: None}
    queue = deque([start])
    edges = []
    actions = w.visible()
    while queue:
        s = queue.popleft()
        for act in actions:
            t = w.step(s, act)
            if not t:
                continue
            edges.append(Edge(s, _true(), act, frozenset(), t))
            if t not in seen:
                seen[t] = None
                queue.append(t)
    return TimedAutomaton(name or f"det({a.name})", tuple(seen), start, (), a.alphabet, tuple(edges))


def _true():
    from .constraints import TRUE

    return TRUE


def language_included(a1: TimedAutomaton, a2: TimedAutomaton):
    """``(True, None)`` or ``(False, w)`` with ``w`` a shortest, lexicographically
    first word of ``L(a1)`` outside ``L(a2)``."""
    _need_clock_free(a1, a2)
    w1, w2 = _Weak(a1), _Weak(a2)
    actions = sorted(set(w1.visible()))
    start = (w1.closure[a1.initial], w2.closure[a2.initial])
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        s1, s2 = node
        for act in actions:
            t1 = w1.step(s1, act)
            if not t1:
                continue
            t2 = w2.step(s2, act)
            nxt = (t1, t2)
            if nxt in parent:
                continue
            parent[nxt] = (node, act)
            if not t2:
                word = []
                cur = nxt
                while parent[cur] is not None:
                    cur, a = parent[cur]
                    word.append(a)
                return False, tuple(reversed(word))
            queue.append(nxt)
    return True, None


def language_equivalent(a1, a2) -> bool:
    return language_included(a1, a2)[0] and language_included(a2, a1)[0]


def _reachable(a: TimedAutomaton) -> list:
    succ = _succ(a)
    seen = {a.initial: None}
    stack = [a.initial]
    while stack:
        q = stack.pop()
        for tgts in succ.get(q, {}).values():
            for t in tgts:
                if t not in seen:
                    seen[t] = None
                    stack.append(t)
    return sorted(seen, key=repr)


@dataclass
class FiniteRelation:
    pairs: frozenset
    role: str  # "simulation" | "bisimulation"

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)


@dataclass
class RelationResult:
    holds: bool
    relation: FiniteRelation
    unmatched: object = None  # state of the second system with no partner
    rounds: int = 0

    def __bool__(self):
        return self.holds


def _greatest(t1: TimedAutomaton, t2: TimedAutomaton, symmetric: bool) -> RelationResult:
    _need_clock_free(t1, t2)
    w1, w2 = _Weak(t1), _Weak(t2)
    r1, r2 = _reachable(t1), _reachable(t2)
    alive = {(p, q) for p in r1 for q in r2}
    removed_at: dict = {}

    def failing_moves(p, q, rel):
        """Yield (side, move target, candidate pairs) for unmatched moves."""
        for act, q2 in w2.moves(q):
            cands = [(p2, q2) for p2 in sorted(w1.weak(p, act), key=repr)]
            if not any(c in rel for c in cands):
                yield cands
        if symmetric:
            for act, p2 in w1.moves(p):
                cands = [(p2, q2) for q2 in sorted(w2.weak(q, act), key=repr)]
                if not any(c in rel for c in cands):
                    yield cands

    rounds = 0
    while True:
        dead = sorted(
            (pair for pair in alive if next(failing_moves(*pair, alive), None) is not None),
            key=repr,
        )
        if not dead:
            break
        rounds += 1
        for pair in dead:
            alive.discard(pair)
            removed_at[pair] = rounds
    start = (t1.initial, t2.initial)
    role = "bisimulation" if symmetric else "simulation"
    relation = FiniteRelation(frozenset(alive), role)
    if start in alive:
        return RelationResult(True, relation, None, rounds)
    # follow the earliest-removed failure chain down to a move with no candidate
    pair = start
    visited = set()
    while pair not in visited:
        visited.add(pair)
        r = removed_at[pair]
        then = alive | {k for k, v in removed_at.items() if v >= r}
        cands = next(failing_moves(*pair, then), None)
        if not cands:
            break
        pair = min(cands, key=lambda c: (removed_at.get(c, 0), repr(c)))
    return RelationResult(False, relation, pair[1], rounds)


def weak_simulates(t1: TimedAutomaton, t2: TimedAutomaton) -> RelationResult:
    """Does ``t1`` weakly simulate ``t2``?"""
    return _greatest(t1, t2, symmetric=False)


def weak_bisimilar(t1: TimedAutomaton, t2: TimedAutomaton) -> RelationResult:
    return _greatest(t1, t2, symmetric=True)


# -- verdicts ------------------------------------------------------------------


@dataclass
class Verdict:
    property: str
    holds: bool
    witness: TimedWord | None = None  # language counterexample
    unmatched: object = None  # state with no simulating partner
    relation: FiniteRelation | None = None
    note: str = ""
    stats: dict = field(default_factory=dict)
    run: object = None  # full timed run behind a timed witness
    untimed: bool = False

    def __post_init__(self):
        if not self.holds and self.witness is None and self.unmatched is None:
            raise ValueError("a failing verdict needs a witness")

    def witness_text(self) -> str:
        if self.witness is not None:
            if self.untimed:
                return " ".join(self.witness.untimed()) or "ε"
            return str(self.witness)
        if self.unmatched is not None:
            from .regions import loc_label

            return f"unmatched state {loc_label(self.unmatched)}"
        return ""


def untimed_word(actions) -> TimedWord:
    return TimedWord(tuple((0, a) for a in actions))


def check_snni_untimed(a: TimedAutomaton) -> Verdict:
    _need_clock_free(a)
    t0 = time.perf_counter()
    high = a.alphabet.high
    ok, word = language_included(hide(a, high), restrict(a, high))
    stats = {"locations": len(a.locations), "edges": len(a.edges), "seconds": time.perf_counter() - t0}
    return Verdict("SNNI", ok, None if ok else untimed_word(word), stats=stats, untimed=True)


def check_csnni_untimed(a: TimedAutomaton) -> Verdict:
    _need_clock_free(a)
    t0 = time.perf_counter()
    high = a.alphabet.high
    res = weak_simulates(restrict(a, high), hide(a, high))
    stats = {"locations": len(a.locations), "relation": len(res.relation), "seconds": time.perf_counter() - t0}
    return Verdict("CSNNI", res.holds, unmatched=res.unmatched, relation=res.relation, stats=stats, untimed=True)


def check_bsnni_untimed(a: TimedAutomaton) -> Verdict:
    _need_clock_free(a)
    t0 = time.perf_counter()
    high = a.alphabet.high
    res = weak_bisimilar(restrict(a, high), hide(a, high))
    stats = {"locations": len(a.locations), "relation": len(res.relation), "seconds": time.perf_counter() - t0}
    return Verdict("BSNNI", res.holds, unmatched=res.unmatched, relation=res.relation, stats=stats, untimed=True)


def snni_cp_untimed(a: TimedAutomaton, controllable=None) -> bool:
    """A controller enforcing SNNI exists iff disabling every Σc action works."""
    _need_clock_free(a)
    sc = a.alphabet.controllable if controllable is None else frozenset(controllable)
    return check_snni_untimed(restrict(a, sc)).holds


def csnni_cp_untimed(a: TimedAutomaton, controllable=None) -> bool:
    _need_clock_free(a)
    sc = a.alphabet.controllable if controllable is None else frozenset(controllable)
    return check_csnni_untimed(restrict(a, sc)).holds


def snni_csp_untimed(a: TimedAutomaton, controllable=None):
    """Most permissive SNNI controller for a finite automaton (fixpoint C*)."""
    _need_clock_free(a)
    from .timed import synthesize_loop

    if controllable is not None:
        a = a.with_(alphabet=AlphabetSpec(a.alphabet.low, a.alphabet.high, frozenset(controllable)))
    result = synthesize_loop(a, untimed=True)
    if result.outcome == "controller":
        assert result.effective_rounds <= 2, "finite automata must stabilise by round 2"
    return result
