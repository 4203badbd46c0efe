"""Independent brute-force oracles, written without the library's algorithms."""

from collections import deque

EPS = "ε"


def _post(edges, states, act):
    return frozenset(t for (s, a, t) in edges if s in states and a == act)


def _eps_close(edges, states):
    seen = set(states)
    todo = list(states)
    while todo:
        s = todo.pop()
        for (p, a, t) in edges:
            if p == s and a == EPS and t not in seen:
                seen.add(t)
                todo.append(t)
    return frozenset(seen)


def _subsets_reachable(edges, init, actions):
    start = _eps_close(edges, {init})
    seen = {start}
    todo = [start]
    while todo:
        s = todo.pop()
        for act in actions:
            t = _eps_close(edges, _post(edges, s, act))
            if t and t not in seen:
                seen.add(t)
                todo.append(t)
    return len(seen)


def snni_brute_force(a) -> bool:
    """Compare the hidden and restricted languages word by word.

    Words are enumerated up to |det(hidden)| * |det(restricted)|, which is
    enough for a regular inclusion to show a counterexample if one exists.
    """
    high = set(a.alphabet.high)
    raw = [(e.source, e.action, e.target) for e in a.edges]
    hidden = [(s, EPS if act in high else act, t) for (s, act, t) in raw]
    restricted = [(s, act, t) for (s, act, t) in raw if act not in high]
    low = sorted({act for (_, act, _) in raw if act not in high})
    bound = _subsets_reachable(hidden, a.initial, low) * _subsets_reachable(restricted, a.initial, low)
    start = (_eps_close(hidden, {a.initial}), frozenset({a.initial}))
    frontier = {start}
    seen = {start}
    for _ in range(bound + 1):
        nxt = set()
        for s1, s2 in frontier:
            for act in low:
                t1 = _eps_close(hidden, _post(hidden, s1, act))
                if not t1:
                    continue
                t2 = _post(restricted, s2, act)
                if not t2:
                    return False
                if (t1, t2) not in seen:
                    seen.add((t1, t2))
                    nxt.add((t1, t2))
        frontier = nxt
        if not frontier:
            break
    return True


def words_upto(a, length, hide=()):
    """All words of length <= ``length`` of ``a`` with actions in ``hide`` silent."""
    hide = set(hide)
    edges = [(e.source, EPS if e.action in hide else e.action, e.target) for e in a.edges]
    acts = sorted({act for (_, act, _) in edges if act != EPS})
    out = set()
    q = deque([((), _eps_close(edges, {a.initial}))])
    while q:
        w, s = q.popleft()
        out.add(w)
        if len(w) == length:
            continue
        for act in acts:
            t = _eps_close(edges, _post(edges, s, act))
            if t:
                q.append((w + (act,), t))
    return out


def included_upto(a1, a2, length):
    return words_upto(a1, length) <= words_upto(a2, length)
