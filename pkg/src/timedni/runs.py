"""Concrete execution of timed words, used for witness replay and oracles."""

from __future__ import annotations

from fractions import Fraction

from .model import EPS, TimedAutomaton


def _inv_ok(a: TimedAutomaton, q, v: dict) -> bool:
    return any(cc.holds(v) for cc in a.invariant(q))


def initial_configs(a: TimedAutomaton) -> set:
    v = {c: Fraction(0) for c in a.clocks}
    if not _inv_ok(a, a.initial, v):
        return set()
    return {(a.initial, tuple(sorted(v.items())))}


def step(a: TimedAutomaton, configs, delay, action) -> set:
    """Let ``delay`` elapse then fire one ``action`` edge, from every configuration."""
    delay = Fraction(delay)
    out = set()
    for q, vt in configs:
        v = {c: x + delay for c, x in vt}
        if not _inv_ok(a, q, v):
            continue
        for e in a.edges:
            if e.source != q or e.action != action or not e.guard.holds(v):
                continue
            w = {c: (Fraction(0) if c in e.resets else x) for c, x in v.items()}
            if _inv_ok(a, e.target, w):
                out.add((e.target, tuple(sorted(w.items()))))
    return out


def run_word(a: TimedAutomaton, pairs) -> set:
    """Configurations reached by reading ``pairs`` exactly (ε steps must be explicit)."""
    configs = initial_configs(a)
    for d, act in pairs:
        configs = step(a, configs, d, act)
        if not configs:
            break
    return configs


def accepts(a: TimedAutomaton, pairs) -> bool:
    return bool(run_word(a, pairs))


def accepts_eps_free(a: TimedAutomaton, pairs) -> bool:
    if any(e.action == EPS for e in a.edges):
        raise ValueError("automaton has ε-edges; membership needs explicit silent steps")
    return accepts(a, pairs)
