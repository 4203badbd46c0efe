"""Timed automata, alphabets, timed words and the structural operators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .constraints import UPPER_OPS, ClockConstraint, TRUE
from .dbm import Zone, lt

EPS = "ε"
LAMBDA = "λ"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class AlphabetSpec:
    low: frozenset = frozenset()
    high: frozenset = frozenset()
    controllable: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "low", frozenset(self.low))
        object.__setattr__(self, "high", frozenset(self.high))
        object.__setattr__(self, "controllable", frozenset(self.controllable))

    @property
    def actions(self) -> frozenset:
        return self.low | self.high

    @property
    def uncontrollable(self) -> frozenset:
        return self.actions - self.controllable

    def problems(self) -> list[str]:
        out = []
        both = self.low & self.high
        if both:
            out.append(f"actions both low and high: {sorted(both)}")
        extra = self.controllable - self.actions
        if extra:
            out.append(f"controllable actions not in the alphabet: {sorted(extra)}")
        for special in (EPS, LAMBDA):
            if special in self.actions:
                out.append(f"reserved symbol {special} used as an action")
        return out

    def drop(self, names: Iterable[str]) -> "AlphabetSpec":
        names = frozenset(names)
        return AlphabetSpec(self.low - names, self.high - names, self.controllable - names)


@dataclass(frozen=True)
class Edge:
    source: Hashable
    guard: ClockConstraint
    action: str
    resets: frozenset
    target: Hashable
    tag: object = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "resets", frozenset(self.resets))


Invariant = tuple  # disjunction of ClockConstraint; () is not used, TRUE is (TRUE,)


@dataclass(frozen=True, eq=False)
class TimedAutomaton:
    name: str
    locations: tuple
    initial: Hashable
    clocks: tuple
    alphabet: AlphabetSpec
    edges: tuple
    invariants: Mapping = field(default_factory=dict)
    ceilings: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "clocks", tuple(self.clocks))
        object.__setattr__(self, "edges", tuple(self.edges))
        inv = {}
        for q, v in dict(self.invariants).items():
            if isinstance(v, ClockConstraint):
                v = (v,)
            v = tuple(v)
            if v and not all(cc.is_true for cc in v):
                inv[q] = v
        object.__setattr__(self, "invariants", inv)
        object.__setattr__(self, "ceilings", dict(self.ceilings))

    @property
    def is_clock_free(self) -> bool:
        return not self.clocks

    def invariant(self, q) -> tuple:
        return self.invariants.get(q, (TRUE,))

    def edges_from(self, q) -> list[Edge]:
        return [e for e in self.edges if e.source == q]

    def used_actions(self) -> set[str]:
        return {e.action for e in self.edges}

    def with_(self, **kw) -> "TimedAutomaton":
        return replace(self, **kw)

    def __repr__(self):
        return (
            f"TimedAutomaton({self.name!r}, |Q|={len(self.locations)}, "
            f"|E|={len(self.edges)}, X={list(self.clocks)})"
        )


def make_automaton(
    name: str,
    edges: Sequence[tuple],
    *,
    low=(),
    high=(),
    controllable=(),
    clocks=(),
    initial=None,
    invariants=None,
    locations=None,
) -> TimedAutomaton:
    """Build from ``(src, action, tgt)`` or ``(src, guard, action, resets, tgt)`` tuples."""
    from .constraints import parse_constraint

    es = []
    for t in edges:
        if len(t) == 3:
            s, act, d = t
            g, r = TRUE, ()
        else:
            s, g, act, r, d = t
            if isinstance(g, str):
                g = parse_constraint(g)
        es.append(Edge(s, g, act, frozenset(r), d))
    locs = list(locations or [])
    for e in es:
        for q in (e.source, e.target):
            if q not in locs:
                locs.append(q)
    if initial is None:
        initial = es[0].source if es else (locs[0] if locs else "q0")
    if initial not in locs:
        locs.insert(0, initial)
    inv = {}
    for q, text in (invariants or {}).items():
        inv[q] = (parse_constraint(text),) if isinstance(text, str) else text
    return TimedAutomaton(
        name,
        tuple(locs),
        initial,
        tuple(clocks),
        AlphabetSpec(frozenset(low), frozenset(high), frozenset(controllable)),
        tuple(es),
        inv,
    )


# -- timed words -------------------------------------------------------------


@dataclass(frozen=True)
class TimedWord:
    """A sequence of (delay, action) pairs; ε pairs are folded away."""

    pairs: tuple = ()

    def __post_init__(self):
        out = []
        carry = Fraction(0)
        for d, a in self.pairs:
            d = Fraction(d)
            if d < 0:
                raise ValueError("delays are non-negative")
            if a == EPS:
                carry += d
                continue
            out.append((carry + d, a))
            carry = Fraction(0)
        object.__setattr__(self, "pairs", tuple(out))

    def project(self, keep: Iterable[str]) -> "TimedWord":
        keep = set(keep)
        return TimedWord(tuple((d, a if a in keep else EPS) for d, a in self.pairs))

    def untimed(self) -> tuple[str, ...]:
        return tuple(a for _, a in self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __str__(self):
        if not self.pairs:
            return "ε"
        return "".join(f"({_fmt(d)}, {a})" for d, a in self.pairs)

    def to_json(self):
        return [[str(d), a] for d, a in self.pairs]

    @classmethod
    def from_json(cls, data) -> "TimedWord":
        return cls(tuple((Fraction(d), a) for d, a in data))


def _fmt(d: Fraction) -> str:
    if d.denominator == 1:
        return str(d.numerator)
    # finite decimal when possible, else the fraction
    den = d.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        s = f"{float(d):.10f}".rstrip("0")
        return s
    return str(d)


# -- validation --------------------------------------------------------------


def validate(a: TimedAutomaton, internal: bool = False) -> list[str]:
    """Diagnostics for every violated well-formedness rule (empty when clean)."""
    diags = list(a.alphabet.problems())
    locs = set(a.locations)
    clocks = set(a.clocks)
    if len(locs) != len(a.locations):
        diags.append("duplicate location names")
    if len(clocks) != len(a.clocks):
        diags.append("duplicate clock names")
    if a.initial not in locs:
        diags.append(f"initial location {a.initial!r} is not declared")
    for q, disj in a.invariants.items():
        if q not in locs:
            diags.append(f"invariant on undeclared location {q!r}")
        for cc in disj:
            for atom in cc.atoms:
                if atom.clock not in clocks or (atom.other and atom.other not in clocks):
                    diags.append(f"invariant of {q!r} uses undeclared clock in {atom}")
                if atom.op not in UPPER_OPS and not internal:
                    diags.append(f"invariant uses lower bound: {atom} at location {q!r}")
                if atom.diagonal and not internal:
                    diags.append(f"invariant of {q!r} uses diagonal atom {atom}")
        if len(disj) > 1 and not internal:
            diags.append(f"invariant of {q!r} is a disjunction")
    allowed = a.alphabet.actions | {EPS}
    for k, e in enumerate(a.edges):
        ident = f"edge #{k} {e.source}->{e.target} on {e.action}"
        if e.source not in locs:
            diags.append(f"{ident}: undeclared source")
        if e.target not in locs:
            diags.append(f"{ident}: undeclared target")
        if e.action not in allowed:
            diags.append(f"{ident}: action not in the alphabet")
        bad = e.resets - clocks
        if bad:
            diags.append(f"{ident}: resets undeclared clock(s) {sorted(bad)}")
        for atom in e.guard.atoms:
            if atom.clock not in clocks or (atom.other and atom.other not in clocks):
                diags.append(f"{ident}: guard uses undeclared clock in {atom}")
            if atom.diagonal and not internal:
                diags.append(f"{ident}: diagonal guard {atom}")
    return diags


def check_valid(a: TimedAutomaton, internal: bool = True):
    diags = validate(a, internal=internal)
    if diags:
        raise ModelError(f"{a.name}: " + "; ".join(diags))


# -- structural operators ------------------------------------------------------


def _check_actions(a: TimedAutomaton, names) -> frozenset:
    names = frozenset(names)
    unknown = names - a.alphabet.actions
    if unknown:
        raise ModelError(f"unknown action(s) {sorted(unknown)} for {a.name}")
    return names


def hide(a: TimedAutomaton, names: Iterable[str]) -> TimedAutomaton:
    names = _check_actions(a, names)
    edges = tuple(replace(e, action=EPS) if e.action in names else e for e in a.edges)
    return replace(a, name=f"{a.name}/hide", edges=edges, alphabet=a.alphabet.drop(names))


def restrict(a: TimedAutomaton, names: Iterable[str]) -> TimedAutomaton:
    names = _check_actions(a, names)
    edges = tuple(e for e in a.edges if e.action not in names)
    return replace(a, name=f"{a.name}\\restrict", edges=edges, alphabet=a.alphabet.drop(names))


def untime(a: TimedAutomaton) -> TimedAutomaton:
    edges = tuple(replace(e, guard=TRUE, resets=frozenset()) for e in a.edges)
    return replace(a, name=f"untime({a.name})", clocks=(), edges=edges, invariants={}, ceilings={})


def fresh_names(taken: Iterable[str], wanted: Iterable[str], suffix: str = "'") -> dict[str, str]:
    """Map each wanted name to itself, or to a primed variant if it collides."""
    taken = set(taken)
    mapping = {}
    for c in wanted:
        new = c
        while new in taken:
            new += suffix
        taken.add(new)
        mapping[c] = new
    return mapping


@dataclass
class ProductInfo:
    clock_map: dict  # a2 clock -> arena clock
    inverse: dict  # arena clock -> (side, original clock)


def product(a1: TimedAutomaton, a2: TimedAutomaton, sync: Iterable[str], name=None):
    """Synchronised product; a2's clocks are renamed apart.  Returns (A, ProductInfo)."""
    sync = frozenset(sync)
    cmap = fresh_names(a1.clocks, a2.clocks)
    a2_clocks = tuple(cmap[c] for c in a2.clocks)
    clocks = a1.clocks + a2_clocks

    def ren(cc):
        return cc.rename(cmap)

    locs = [(q1, q2) for q1 in a1.locations for q2 in a2.locations]
    inv = {}
    for q1, q2 in locs:
        d1 = a1.invariant(q1)
        d2 = tuple(ren(cc) for cc in a2.invariant(q2))
        inv[(q1, q2)] = tuple(c1 & c2 for c1 in d1 for c2 in d2)
    out1: dict = {}
    for k, e in enumerate(a1.edges):
        out1.setdefault(e.source, []).append((k, e))
    out2: dict = {}
    for k, e in enumerate(a2.edges):
        out2.setdefault(e.source, []).append((k, e))
    edges = []
    for q1, q2 in locs:
        for k1, e1 in out1.get(q1, ()):
            if e1.action in sync:
                for k2, e2 in out2.get(q2, ()):
                    if e2.action == e1.action:
                        edges.append(
                            Edge(
                                (q1, q2),
                                e1.guard & ren(e2.guard),
                                e1.action,
                                e1.resets | {cmap[c] for c in e2.resets},
                                (e1.target, e2.target),
                                tag=(k1, k2),
                            )
                        )
            else:
                edges.append(Edge((q1, q2), e1.guard, e1.action, e1.resets, (e1.target, q2), tag=(k1, None)))
        for k2, e2 in out2.get(q2, ()):
            if e2.action not in sync:
                edges.append(
                    Edge(
                        (q1, q2),
                        ren(e2.guard),
                        e2.action,
                        frozenset(cmap[c] for c in e2.resets),
                        (q1, e2.target),
                        tag=(None, k2),
                    )
                )
    alpha = AlphabetSpec(
        a1.alphabet.low | (a2.alphabet.low - a1.alphabet.high),
        a1.alphabet.high | (a2.alphabet.high - a1.alphabet.low),
        a1.alphabet.controllable,
    )
    ceil = dict(a1.ceilings)
    ceil.update({cmap[c]: v for c, v in a2.ceilings.items()})
    arena = TimedAutomaton(
        name or f"{a1.name}x{a2.name}", tuple(locs), (a1.initial, a2.initial), clocks, alpha, tuple(edges), inv, ceil
    )
    info = ProductInfo(
        clock_map=cmap,
        inverse={**{c: (1, c) for c in a1.clocks}, **{cmap[c]: (2, c) for c in a2.clocks}},
    )
    return arena, info


# -- determinism -------------------------------------------------------------


class EpsilonError(ModelError):
    pass


def determinism_witness(a: TimedAutomaton):
    """First pair of edges violating determinism, or None.  ε-edges are an error."""
    if any(e.action == EPS for e in a.edges):
        raise EpsilonError("determinism undefined for ε")
    zones = [Zone.from_constraint(a.clocks, e.guard) for e in a.edges]
    inv = {}

    def inv_zones(q):
        if q not in inv:
            inv[q] = [Zone.from_constraint(a.clocks, cc) for cc in a.invariant(q)]
        return inv[q]

    for i, e in enumerate(a.edges):
        for j in range(i + 1, len(a.edges)):
            f = a.edges[j]
            if e.source != f.source or e.action != f.action:
                continue
            if e.target == f.target and e.resets == f.resets:
                continue
            meet = zones[i].intersect(zones[j])
            if any(meet.intersects(z) for z in inv_zones(e.source)):
                return (i, j)
    return None


def is_deterministic(a: TimedAutomaton) -> bool:
    return determinism_witness(a) is None


def _initial_eps_collapse(a: TimedAutomaton) -> TimedAutomaton | None:
    """Collapse a forced zero-time ε step out of a fresh initial location.

    Applies only when the initial location has no incoming edges, admits no
    positive delay, and its sole outgoing edge is an unguarded ε-edge.  The ε
    step then happens at time zero, where resets are no-ops, so starting at
    the edge's target is equivalent.  Unreachable locations are trimmed.
    """
    q0 = a.initial
    outs = a.edges_from(q0)
    if len(outs) != 1 or outs[0].action != EPS or not outs[0].guard.is_true:
        return None
    if any(e.target == q0 for e in a.edges) or not _forbids_delay(a, q0):
        return None
    edges = tuple(e for e in a.edges if e.source != q0)
    locs = tuple(q for q in a.locations if q != q0)
    inv = {q: v for q, v in a.invariants.items() if q != q0}
    return trim(replace(a, locations=locs, initial=outs[0].target, edges=edges, invariants=inv))


def _forbids_delay(a: TimedAutomaton, q) -> bool:
    if not a.clocks:
        return False
    zones = [Zone.from_constraint(a.clocks, cc) for cc in a.invariant(q)]
    zero = Zone.zero(a.clocks)
    if not any(z.includes(zero) for z in zones):
        return False
    positive = zero.up().constrain([(0, 1, lt(0))])
    return all(not z.intersects(positive) for z in zones)


def monitor_base(a: TimedAutomaton) -> TimedAutomaton:
    """``a`` restricted to its low actions, with the initial ε shortcut applied."""
    r = restrict(a, a.alphabet.high)
    if any(e.action == EPS for e in r.edges):
        collapsed = _initial_eps_collapse(r)
        if collapsed is not None:
            return collapsed
    return r


def is_dta(a: TimedAutomaton) -> bool:
    try:
        return is_deterministic(monitor_base(a))
    except EpsilonError:
        return False


def reachable_locations(a: TimedAutomaton) -> set:
    seen = {a.initial}
    stack = [a.initial]
    while stack:
        q = stack.pop()
        for e in a.edges_from(q):
            if e.target not in seen:
                seen.add(e.target)
                stack.append(e.target)
    return seen


def trim(a: TimedAutomaton) -> TimedAutomaton:
    """Drop locations not reachable in the discrete graph."""
    keep = reachable_locations(a)
    return replace(
        a,
        locations=tuple(q for q in a.locations if q in keep),
        edges=tuple(e for e in a.edges if e.source in keep),
        invariants={q: v for q, v in a.invariants.items() if q in keep},
    )
