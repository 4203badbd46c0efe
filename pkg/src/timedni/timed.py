"""dTA engine: monitor products, SNNI verification, safety games and the
iterated controller synthesis."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .constraints import TRUE, ClockConstraint
from .dbm import INF, Zone, bound_value, fed_complement, fed_intersect, fed_merge, is_strict
from .model import (
    EPS,
    LAMBDA,
    AlphabetSpec,
    Edge,
    EpsilonError,
    ModelError,
    TimedAutomaton,
    TimedWord,
    determinism_witness,
    fresh_names,
    is_deterministic,
    monitor_base,
    product,
    restrict,
    trim,
)
from .regions import RegionGraph, build_region_graph, loc_label, max_constants

QBAD = "q_bad"


class OutsideDecidableClass(ModelError):
    """SNNI problems on timed automata outside dTA are undecidable."""


# -- completion and monitor ------------------------------------------------


def _inv_fed(a: TimedAutomaton, q):
    return [Zone.from_constraint(a.clocks, cc) for cc in a.invariant(q)]


def complete_deterministic(a: TimedAutomaton, actions=None) -> TimedAutomaton:
    """Complete deterministic copy of ``a`` with an absorbing sink ``q_bad``.

    Invariants are folded into the guards and erased.
    """
    try:
        wit = determinism_witness(a)
    except EpsilonError:
        raise ModelError(f"{a.name}: completion needs an ε-free automaton") from None
    if wit is not None:
        raise ModelError(f"{a.name}: completion needs a deterministic automaton (edges {wit})")
    actions = sorted(a.alphabet.actions if actions is None else actions)
    qbad = QBAD
    while qbad in a.locations:
        qbad += "'"
    inv = {q: _inv_fed(a, q) for q in a.locations}
    by_src: dict = {}
    for e in a.edges:
        by_src.setdefault((e.source, e.action), []).append(e)
    edges = []
    for q in a.locations:
        for b in actions:
            good = []
            for e in by_src.get((q, b), ()):
                g = Zone.from_constraint(a.clocks, e.guard)
                back = [z.pre_reset(e.resets) for z in inv[e.target]]
                pieces = fed_intersect(fed_intersect([g], inv[q]), back)
                for z in fed_merge(pieces):
                    edges.append(Edge(q, z.to_constraint(), b, e.resets, e.target, tag=e.tag))
                good.extend(pieces)
            for z in fed_merge(fed_complement(good, a.clocks)):
                edges.append(Edge(q, z.to_constraint(), b, frozenset(), qbad))
    for b in actions:
        edges.append(Edge(qbad, TRUE, b, frozenset(), qbad))
    return TimedAutomaton(
        f"complete({a.name})",
        a.locations + (qbad,),
        a.initial,
        a.clocks,
        a.alphabet,
        tuple(edges),
        {},
        max_constants(a),
    )


@dataclass
class MonitorProduct:
    source: TimedAutomaton
    base: TimedAutomaton  # the low restriction fed to the monitor
    monitor: TimedAutomaton
    arena: TimedAutomaton
    bad: frozenset  # arena locations whose monitor component is q_bad
    clock_map: dict  # monitor clock -> arena clock
    qbad: str = QBAD

    def origin(self, k: int):
        """Edge of the source automaton behind arena edge ``k`` (None for monitor-only)."""
        k1, _ = self.arena.edges[k].tag
        return k1


def build_monitor_product(a: TimedAutomaton, untimed: bool = False) -> MonitorProduct:
    from .untimed import determinize

    base = monitor_base(a)
    try:
        det = is_deterministic(base)
    except EpsilonError:
        det = False
    if not det:
        if untimed and not a.clocks:
            base = determinize(base)
        else:
            raise OutsideDecidableClass(
                f"{a.name} is not in dTA: its low restriction is not deterministic and ε-free; "
                "SNNI problems are undecidable for general timed automata"
            )
    low = a.alphabet.low
    mon = complete_deterministic(base, actions=low)
    mon = mon.with_(alphabet=AlphabetSpec(low, frozenset(), frozenset()))
    qbad = [q for q in mon.locations if q not in base.locations][0]
    arena, info = product(a, mon, low, name=f"arena({a.name})")
    bad = frozenset(q for q in arena.locations if q[1] == qbad)
    return MonitorProduct(a, base, mon, arena, bad, info.clock_map, qbad)


# -- region graph helpers --------------------------------------------------


def arena_graph(mp: MonitorProduct) -> RegionGraph:
    return build_region_graph(mp.arena)


def bad_nodes(mp: MonitorProduct, rg: RegionGraph) -> set[int]:
    return {i for i, (q, _) in enumerate(rg.nodes) if q in mp.bad}


def _step_cost(rg: RegionGraph, n: int) -> int:
    _, (ints, fracs) = rg.nodes[n]
    return 1 if fracs[0] else 0


def shortest_path(rg: RegionGraph, targets: set[int]):
    """Cheapest path from the initial node to a target.

    Cost is lexicographic: discrete steps, then firings from regions where
    some clock has an integral value, then time steps.  Returns a list of
    steps ``("time", n, m)`` / ``("edge", k, n, m)`` or None.
    """
    if rg.initial is None:
        return None
    start = rg.initial
    dist = {start: (0, 0, 0)}
    parent: dict = {start: None}
    heap = [((0, 0, 0), start)]
    while heap:
        cost, n = heapq.heappop(heap)
        if cost != dist.get(n):
            continue
        if n in targets:
            steps = []
            cur = n
            while parent[cur] is not None:
                prev, step = parent[cur]
                steps.append(step)
                cur = prev
            return list(reversed(steps))
        moves = []
        if n in rg.time:
            moves.append(((0, 0, 1), rg.time[n], ("time", n, rg.time[n])))
        zc = _step_cost(rg, n)
        for k, t in rg.out.get(n, ()):
            moves.append(((1, zc, 0), t, ("edge", k, n, t)))
        for dc, t, step in moves:
            nc = (cost[0] + dc[0], cost[1] + dc[1], cost[2] + dc[2])
            if t not in dist or nc < dist[t]:
                dist[t] = nc
                parent[t] = (n, step)
                heapq.heappush(heap, (nc, t))
    return None


def _delay_into(zone: Zone, v: dict) -> Fraction:
    """A delay ``d`` with ``v + d`` in ``zone`` (midpoint of the admissible interval)."""
    lo, lo_strict = Fraction(0), False
    hi, hi_strict = None, False
    for i, c in enumerate(zone.clocks):
        a = i + 1
        lower = zone.m[0][a]
        cand = Fraction(-bound_value(lower)) - v[c]
        if cand > lo or (cand == lo and is_strict(lower)):
            lo, lo_strict = cand, is_strict(lower)
        upper = zone.m[a][0]
        if upper != INF:
            cand = Fraction(bound_value(upper)) - v[c]
            if hi is None or cand < hi or (cand == hi and is_strict(upper)):
                hi, hi_strict = cand, is_strict(upper)
    if hi is None:
        return lo + Fraction(1, 2) if lo_strict else lo
    if hi == lo:
        return lo
    return (lo + hi) / 2


@dataclass
class ConcreteRun:
    steps: list  # (delay, action, arena edge index)

    def word(self, low) -> TimedWord:
        return TimedWord(tuple((d, a) for d, a, _ in self.steps)).project(low)

    def full(self) -> list:
        return [(d, a) for d, a, _ in self.steps]


def concretize(rg: RegionGraph, steps) -> ConcreteRun:
    a = rg.automaton
    v = {c: Fraction(0) for c in a.clocks}
    out = []
    waited = False
    for step in steps:
        if step[0] == "time":
            waited = True
            continue
        _, k, n, _t = step
        d = Fraction(0)
        if waited:
            d = _delay_into(rg.node_zone(n), v) if a.clocks else Fraction(0)
        for c in v:
            v[c] += d
        e = a.edges[k]
        for c in e.resets:
            v[c] = Fraction(0)
        out.append((d, e.action, k))
        waited = False
    return ConcreteRun(out)


# -- verification ----------------------------------------------------------


def check_snni_timed(a: TimedAutomaton):
    from .untimed import Verdict

    t0 = time.perf_counter()
    if not _dta_or_raise(a):
        raise OutsideDecidableClass(f"{a.name} is not in dTA")
    mp = build_monitor_product(a)
    rg = arena_graph(mp)
    bad = bad_nodes(mp, rg)
    stats = {
        "locations": len(a.locations),
        "edges": len(a.edges),
        "arena_locations": len(mp.arena.locations),
        "arena_nodes": len(rg),
    }
    path = shortest_path(rg, bad) if bad else None
    stats["seconds"] = time.perf_counter() - t0
    if path is None:
        return Verdict("SNNI", True, stats=stats)
    run = concretize(rg, path)
    return Verdict("SNNI", False, witness=run.word(a.alphabet.low), stats=stats, run=run.full())


def _dta_or_raise(a: TimedAutomaton) -> bool:
    from .model import is_dta

    if not is_dta(a):
        raise OutsideDecidableClass(
            f"{a.name} is outside the decidable class dTA (low restriction must be deterministic "
            "and ε-free); SNNI for general timed automata is undecidable"
        )
    return True


def check_csnni_timed_dta(a: TimedAutomaton):
    v = check_snni_timed(a)
    v.property = "CSNNI"
    v.note = "on dTA, CSNNI coincides with SNNI"
    return v


def timed_language_included(b: TimedAutomaton, d: TimedAutomaton):
    """``L(b) ⊆ L(d)`` for ε-free deterministic ``d``.  Returns (bool, word)."""
    acts = b.alphabet.actions | d.alphabet.actions
    mon = complete_deterministic(d, actions=acts)
    qbad = mon.locations[-1]
    bb = b.with_(alphabet=AlphabetSpec(acts, frozenset(), frozenset()))
    mon = mon.with_(alphabet=AlphabetSpec(acts, frozenset(), frozenset()))
    arena, _ = product(bb, mon, acts)
    rg = build_region_graph(arena)
    targets = {i for i, (q, _) in enumerate(rg.nodes) if q[1] == qbad}
    if not targets:
        return True, None
    path = shortest_path(rg, targets)
    return False, concretize(rg, path).word(acts)


def low_languages_equal(a1: TimedAutomaton, a2: TimedAutomaton, untimed: bool = False) -> bool:
    r1, r2 = restrict(a1, a1.alphabet.high), restrict(a2, a2.alphabet.high)
    if untimed and not r1.clocks and not r2.clocks:
        from .untimed import language_equivalent

        return language_equivalent(r1, r2)
    return timed_language_included(r1, r2)[0] and timed_language_included(r2, r1)[0]


# -- safety games --------------------------------------------------------------


@dataclass
class Strategy:
    graph: RegionGraph
    winning: frozenset
    allowed: dict  # node -> frozenset of controllable actions and possibly LAMBDA
    controllable: frozenset
    bad: frozenset

    def allows(self, n: int, action: str) -> bool:
        return action in self.allowed.get(n, ())


def _actions_ok(rg: RegionGraph, n: int, W, controllable) -> tuple[bool, set]:
    """(uncontrollable moves stay in W, controllable actions whose moves all stay in W)."""
    edges = rg.automaton.edges
    per_action: dict = {}
    unc_ok = True
    for k, t in rg.out.get(n, ()):
        act = edges[k].action
        if act in controllable:
            per_action[act] = per_action.get(act, True) and t in W
        elif t not in W:
            unc_ok = False
    return unc_ok, {act for act, ok in per_action.items() if ok}


def solve_safety_game(rg: RegionGraph, bad: set[int], controllable) -> Strategy | None:
    """Greatest fixpoint of the safe set; None when the initial node loses."""
    controllable = frozenset(controllable)
    W = set(range(len(rg))) - set(bad)
    changed = True
    while changed:
        changed = False
        for n in sorted(W):
            unc_ok, ok_acts = _actions_ok(rg, n, W, controllable)
            time_ok = n not in rg.time or rg.time[n] in W
            if not unc_ok or (not time_ok and not ok_acts):
                W.discard(n)
                changed = True
    if rg.initial is None or rg.initial not in W:
        return None
    allowed = {}
    for n in W:
        _, ok_acts = _actions_ok(rg, n, W, controllable)
        if n not in rg.time or rg.time[n] in W:
            ok_acts.add(LAMBDA)
        allowed[n] = frozenset(ok_acts)
    return Strategy(rg, frozenset(W), allowed, controllable, frozenset(bad))


def strategy_closure_violations(s: Strategy) -> list:
    rg, W = s.graph, s.winning
    edges = rg.automaton.edges
    bad = []
    for n in sorted(W):
        for k, t in rg.out.get(n, ()):
            act = edges[k].action
            if (act not in s.controllable or act in s.allowed[n]) and t not in W:
                bad.append((n, act, t))
        if LAMBDA in s.allowed[n] and n in rg.time and rg.time[n] not in W:
            bad.append((n, LAMBDA, rg.time[n]))
        if LAMBDA not in s.allowed[n] and not (s.allowed[n] - {LAMBDA}):
            bad.append((n, "deadlock", None))
    return bad


def strategy_maximality_violations(s: Strategy) -> list:
    rg, W = s.graph, s.winning
    edges = rg.automaton.edges
    bad = []
    for n in sorted(W):
        enabled = {edges[k].action for k, _ in rg.out.get(n, ())} & s.controllable
        for act in enabled - s.allowed[n]:
            if all(t in W for k, t in rg.out.get(n, ()) if edges[k].action == act):
                bad.append((n, act))
        if LAMBDA not in s.allowed[n] and (n not in rg.time or rg.time[n] in W):
            bad.append((n, LAMBDA))
    return bad


# -- extraction --------------------------------------------------------------


def _components(rg: RegionGraph, W) -> dict:
    parent = {n: n for n in W}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    for n in W:
        t = rg.time.get(n)
        if t is not None and t in W:
            ra, rb = find(n), find(t)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots: dict = {}
    comp = {}
    for n in sorted(W):
        loc = rg.nodes[n][0]
        r = find(n)
        if r not in roots:
            roots[r] = sum(1 for rr in roots if rg.nodes[rr][0] == loc)
        comp[n] = roots[r]
    return comp


def _redundant_clocks(mp: MonitorProduct, s: Strategy) -> dict:
    """Monitor clocks that always equal their source clock under ``s``.

    All clocks start at zero, so a monitor clock stays equal to its source
    clock as long as every edge the strategy keeps resets both or neither.
    """
    rg, arena, W = s.graph, mp.arena, s.winning
    used = [
        arena.edges[k]
        for n in W
        for k, t in rg.out.get(n, ())
        if t in W and (arena.edges[k].action not in s.controllable or arena.edges[k].action in s.allowed[n])
    ]
    out = {}
    for c, c2 in mp.clock_map.items():
        if c not in arena.clocks or c2 == c:
            continue
        if all((c in e.resets) == (c2 in e.resets) for e in used):
            out[c2] = c
    return out


def extract_controlled(mp: MonitorProduct, s: Strategy, name: str | None = None) -> TimedAutomaton:
    """Region-refined automaton whose runs are those allowed by ``s``."""
    rg = s.graph
    arena = mp.arena
    src = mp.source
    W = s.winning
    comp = _components(rg, W)
    drop = _redundant_clocks(mp, s)
    keep = tuple(c for c in arena.clocks if c not in drop)

    def zone_of(n):
        z = rg.node_zone(n)
        return z.project(keep) if drop else z

    def loc_of(n):
        return (rg.nodes[n][0], comp[n])

    inv_zones: dict = {}
    for n in W:
        inv_zones.setdefault(loc_of(n), []).append(zone_of(n))
    grouped: dict = {}
    for n in sorted(W):
        for k, t in rg.out.get(n, ()):
            e = arena.edges[k]
            if e.action in s.controllable and e.action not in s.allowed[n]:
                continue
            assert t in W, "strategy leaves the winning set"
            k1 = mp.origin(k)
            origin = src.edges[k1].tag if src.edges[k1].tag is not None else k1
            resets = frozenset(c for c in e.resets if c in keep)
            key = (loc_of(n), loc_of(t), e.action, resets, origin)
            grouped.setdefault(key, []).append(zone_of(n))
    edges = []
    for key in sorted(grouped, key=repr):
        s_loc, t_loc, act, resets, origin = key
        for z in fed_merge(grouped[key]):
            edges.append(Edge(s_loc, z.to_constraint() if keep else TRUE, act, resets, t_loc, tag=origin))
    invariants = {}
    for q, zs in inv_zones.items():
        if keep:
            invariants[q] = tuple(z.to_constraint() for z in fed_merge(zs))
    locs = sorted(inv_zones, key=lambda q: loc_label(q))
    init = loc_of(rg.initial)
    ceil = {c: v for c, v in zip(rg.space.clocks, rg.space.ceil) if c in keep}
    out = TimedAutomaton(
        name or f"C({src.name})",
        tuple(locs),
        init,
        keep,
        src.alphabet,
        tuple(edges),
        invariants,
        ceil,
    )
    return trim(out)


def inclusion_recheck(b: TimedAutomaton, a_prev: TimedAutomaton, untimed: bool = False) -> bool:
    """``L(b/Σh) ⊆ L(a_prev∖Σh)``: no bad state reachable when ``b`` plays
    against the monitor of ``a_prev``."""
    mp = build_monitor_product(a_prev, untimed=untimed)
    low = b.alphabet.low
    arena, _ = product(b, mp.monitor, low)
    rg = build_region_graph(arena)
    return not any(q[1] == mp.qbad for q, _ in rg.nodes)


# -- synthesis loop ------------------------------------------------------------


@dataclass
class Round:
    index: int
    monitor: MonitorProduct
    graph: RegionGraph
    strategy: Strategy | None
    controlled: TimedAutomaton | None
    effective: bool


@dataclass
class SynthesisResult:
    outcome: str  # "controller" | "bot"
    rounds: list
    final: TimedAutomaton | None
    verdict: object = None
    iteration_count: int = 0
    effective_rounds: int = 0
    round1_size: int = 0
    label: str = "SNNI"
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.outcome == "controller"


def synthesize_loop(a: TimedAutomaton, untimed: bool = False, max_rounds: int | None = None) -> SynthesisResult:
    t0 = time.perf_counter()
    if not untimed:
        _dta_or_raise(a)
    sc = a.alphabet.controllable
    current = a
    rounds: list[Round] = []
    limit = max_rounds
    final = None
    while True:
        mp = build_monitor_product(current, untimed=untimed)
        rg = arena_graph(mp)
        if limit is None:
            limit = max(len(rg), 1)
        bad = bad_nodes(mp, rg)
        strat = solve_safety_game(rg, bad, sc)
        idx = len(rounds) + 1
        if strat is None:
            rounds.append(Round(idx, mp, rg, None, None, True))
            return SynthesisResult(
                "bot",
                rounds,
                None,
                iteration_count=len(rounds),
                effective_rounds=sum(r.effective for r in rounds),
                round1_size=len(rounds[0].graph),
                seconds=time.perf_counter() - t0,
            )
        if not bad:
            rounds.append(Round(idx, mp, rg, strat, current, False))
            final = current
            break
        nxt = extract_controlled(mp, strat, name=f"{a.name}^{idx}")
        rounds.append(Round(idx, mp, rg, strat, nxt, True))
        if not untimed or nxt.clocks:
            wit = determinism_witness(restrict(nxt, nxt.alphabet.high))
            assert wit is None, f"round {idx}: low restriction lost determinism at edges {wit}"
        if low_languages_equal(nxt, current, untimed=untimed):
            final = nxt
            break
        current = nxt
        assert len(rounds) <= limit, "iteration bound exceeded"
    if untimed and not final.clocks:
        from .untimed import check_snni_untimed

        verdict = check_snni_untimed(final)
    else:
        verdict = check_snni_timed(final)
    assert verdict.holds, "synthesised automaton failed its SNNI self-check"
    return SynthesisResult(
        "controller",
        rounds,
        final,
        verdict=verdict,
        iteration_count=len(rounds),
        effective_rounds=sum(r.effective for r in rounds),
        round1_size=len(rounds[0].graph),
        seconds=time.perf_counter() - t0,
    )


def synthesize_snni(a: TimedAutomaton, controllable=None) -> SynthesisResult:
    if controllable is not None:
        a = a.with_(alphabet=AlphabetSpec(a.alphabet.low, a.alphabet.high, frozenset(controllable)))
    return synthesize_loop(a, untimed=False)


def synthesize_csnni_dta(a: TimedAutomaton, controllable=None) -> SynthesisResult:
    res = synthesize_snni(a, controllable)
    res.label = "CSNNI"
    res.notes.append("on dTA the CSNNI control problems coincide with the SNNI ones")
    if res.ok and not res.final.clocks:
        from .untimed import check_csnni_untimed

        cross = check_csnni_untimed(res.final)
        res.notes.append(f"untimed CSNNI cross-check: {cross.holds}")
        assert cross.holds
    return res


# -- the inclusion gadget ----------------------------------------------------


def build_inclusion_gadget(a1: TimedAutomaton, a2: TimedAutomaton, name: str = "A12") -> TimedAutomaton:
    """Automaton that is SNNI iff ``L(a2) ⊆ L(a1)``.

    A fresh initial location with no delay allowed moves silently into
    ``a1`` or via a fresh high action into ``a2``.
    """
    if any(e.action == EPS for e in a1.edges) or not is_deterministic(a1):
        raise ModelError("the first automaton must be deterministic and ε-free")
    sigma = a1.alphabet.actions | a2.alphabet.actions | {e.action for e in a1.edges + a2.edges if e.action != EPS}
    taken_clocks = set(a1.clocks)
    cmap = fresh_names(taken_clocks, a2.clocks)
    z = fresh_names(set(a1.clocks) | set(cmap.values()), ["z"])["z"]
    h = fresh_names(sigma, ["h"])["h"]

    def locs(a, tag):
        return {q: (tag, q) for q in a.locations}

    m1, m2 = locs(a1, 1), locs(a2, 2)
    q0 = ("0", "q012")
    edges = [
        Edge(q0, TRUE, EPS, frozenset(), m1[a1.initial]),
        Edge(q0, TRUE, h, frozenset(), m2[a2.initial]),
    ]
    for e in a1.edges:
        edges.append(Edge(m1[e.source], e.guard, e.action, e.resets, m1[e.target]))
    for e in a2.edges:
        edges.append(
            Edge(m2[e.source], e.guard.rename(cmap), e.action, frozenset(cmap[c] for c in e.resets), m2[e.target])
        )
    from .constraints import Atom

    inv = {q0: (ClockConstraint((Atom(z, "<=", 0),)),)}
    for q in a1.locations:
        inv[m1[q]] = a1.invariant(q)
    for q in a2.locations:
        inv[m2[q]] = tuple(cc.rename(cmap) for cc in a2.invariant(q))
    clocks = (z,) + a1.clocks + tuple(cmap[c] for c in a2.clocks)
    return TimedAutomaton(
        name,
        (q0,) + tuple(m1.values()) + tuple(m2.values()),
        q0,
        clocks,
        AlphabetSpec(frozenset(sigma), frozenset({h}), frozenset()),
        tuple(edges),
        inv,
    )
