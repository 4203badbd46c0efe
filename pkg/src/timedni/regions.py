"""Clock regions and the region graph.

A region is stored as ``(ints, fracs)``.  ``ints[i]`` is the integer part of
clock ``i``, or ``M_i + 1`` when the clock is above its ceiling.  ``fracs`` is
the ordered partition of the bounded clocks by fractional part; ``fracs[0]``
holds the clocks with zero fraction and may be empty, later classes are
non-empty and increasing.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .dbm import INF, Zone, bound_value, is_strict, le, lt

Region = tuple  # (ints: tuple[int, ...], fracs: tuple[tuple[int, ...], ...])


class RegionSpace:
    """Regions over ``clocks`` with per-clock ceilings ``ceil``."""

    def __init__(self, clocks: Sequence[str], ceil: Mapping[str, int]):
        self.clocks = tuple(clocks)
        self.ceil = tuple(int(ceil.get(c, 0)) for c in self.clocks)
        self._zone = lru_cache(maxsize=None)(self._zone_uncached)

    def __repr__(self):
        return f"RegionSpace({dict(zip(self.clocks, self.ceil))})"

    # -- basic regions -------------------------------------------------
    def initial(self) -> Region:
        n = len(self.clocks)
        return (0,) * n, (tuple(range(n)),)

    def unbounded(self, i: int, ints) -> bool:
        return ints[i] > self.ceil[i]

    def successor(self, r: Region) -> Region | None:
        """Immediate time successor, or None when ``r`` is time-stable."""
        ints, fracs = r
        zero, rest = fracs[0], fracs[1:]
        if zero:
            new_ints = list(ints)
            moving = []
            for i in zero:
                if ints[i] == self.ceil[i]:
                    new_ints[i] = self.ceil[i] + 1
                else:
                    moving.append(i)
            classes = ((),) + ((tuple(moving),) if moving else ()) + rest
            return tuple(new_ints), classes
        if not rest:
            return None
        last = rest[-1]
        new_ints = list(ints)
        for i in last:
            new_ints[i] += 1
        return tuple(new_ints), (last,) + rest[:-1]

    def reset(self, r: Region, idx) -> Region:
        idx = set(idx)
        if not idx:
            return r
        ints, fracs = r
        new_ints = tuple(0 if i in idx else v for i, v in enumerate(ints))
        zero = tuple(sorted(set(fracs[0]) | idx))
        rest = tuple(
            c for c in (tuple(i for i in cls if i not in idx) for cls in fracs[1:]) if c
        )
        return new_ints, (zero,) + rest

    def is_time_stable(self, r: Region) -> bool:
        return self.successor(r) is None

    # -- valuations and zones ------------------------------------------
    def of_valuation(self, v: Mapping[str, Fraction]) -> Region:
        ints = []
        bounded = []
        for i, c in enumerate(self.clocks):
            val = Fraction(v[c])
            if val < 0:
                raise ValueError("clock values are non-negative")
            if val > self.ceil[i]:
                ints.append(self.ceil[i] + 1)
            else:
                k = math.floor(val)
                ints.append(k)
                bounded.append((val - k, i))
        zero = tuple(sorted(i for f, i in bounded if f == 0))
        groups: dict[Fraction, list[int]] = {}
        for f, i in bounded:
            if f != 0:
                groups.setdefault(f, []).append(i)
        rest = tuple(tuple(sorted(groups[f])) for f in sorted(groups))
        return tuple(ints), (zero,) + rest

    def zone(self, r: Region) -> Zone:
        return self._zone(r)

    def _zone_uncached(self, r: Region) -> Zone:
        ints, fracs = r
        pos = {}
        for k, cls in enumerate(fracs):
            for i in cls:
                pos[i] = k
        bounds = []
        n = len(self.clocks)
        for i in range(n):
            a = i + 1
            if self.unbounded(i, ints):
                bounds.append((0, a, lt(-self.ceil[i])))
                continue
            k = ints[i]
            if pos[i] == 0:
                bounds += [(a, 0, le(k)), (0, a, le(-k))]
            else:
                bounds += [(a, 0, lt(k + 1)), (0, a, lt(-k))]
        for i in range(n):
            for j in range(n):
                if i == j or i not in pos or j not in pos:
                    continue
                d = ints[i] - ints[j]
                if pos[i] == pos[j]:
                    bounds.append((i + 1, j + 1, le(d)))
                elif pos[i] < pos[j]:
                    bounds.append((i + 1, j + 1, lt(d)))
                else:
                    bounds.append((i + 1, j + 1, lt(d + 1)))
        return Zone.from_bounds(self.clocks, bounds)

    def from_zone(self, z: Zone) -> Region:
        """Read back a region from its canonical zone."""
        if z.is_empty or z.clocks != self.clocks:
            raise ValueError("not a region zone of this space")
        m = z.m
        ints, zero, frac = [], [], []
        for i in range(len(self.clocks)):
            a = i + 1
            lower = m[0][a]
            if m[a][0] == INF:
                ints.append(self.ceil[i] + 1)
                continue
            k = -bound_value(lower)
            ints.append(k)
            (frac if is_strict(lower) else zero).append(i)

        def same(i, j):
            return m[i + 1][j + 1] == le(ints[i] - ints[j])

        def below(i, j):
            return m[i + 1][j + 1] == lt(ints[i] - ints[j])

        classes: list[list[int]] = []
        for i in sorted(frac):
            for cls in classes:
                if same(i, cls[0]):
                    cls.append(i)
                    break
            else:
                classes.append([i])
        rank = [sum(1 for o in classes if o is not cls and below(o[0], cls[0])) for cls in classes]
        classes = [cls for _, cls in sorted(zip(rank, classes))]
        return tuple(ints), (tuple(sorted(zero)),) + tuple(tuple(c) for c in classes)

    def meets(self, r: Region, z: Zone) -> bool:
        return self.zone(r).intersects(z)

    def bound(self) -> int:
        n = len(self.clocks)
        return math.factorial(n) * 2**n * math.prod(2 * m + 2 for m in self.ceil)

    def describe(self, r: Region) -> str:
        return str(self.zone(r)) if self.clocks else "true"

    def sample(self, r: Region) -> dict[str, Fraction]:
        """A representative valuation: fractional classes spread over (0, 1)."""
        ints, fracs = r
        k = len(fracs)
        v = {}
        for pos, cls in enumerate(fracs):
            f = Fraction(pos, k) if k else Fraction(0)
            for i in cls:
                v[self.clocks[i]] = ints[i] + f
        for i, c in enumerate(self.clocks):
            if c not in v:
                v[c] = Fraction(self.ceil[i] + 1) + Fraction(1, 2)
        return v


def region_key(r: Region):
    return r


def max_constants(a) -> dict[str, int]:
    """Per-clock largest constant in guards/invariants, floored by ``a.ceilings``."""
    ceil = {c: 0 for c in a.clocks}
    ceil.update({c: v for c, v in a.ceilings.items() if c in ceil})

    def visit(cc):
        for atom in cc.atoms:
            for c in atom.clocks():
                if c in ceil:
                    ceil[c] = max(ceil[c], abs(atom.const))

    for e in a.edges:
        visit(e.guard)
    for disj in a.invariants.values():
        for cc in disj:
            visit(cc)
    return ceil


@dataclass
class RegionGraph:
    automaton: object
    space: RegionSpace
    nodes: list  # (location, region), sorted
    index: dict
    initial: int | None
    discrete: list  # (src, edge_index, tgt)
    time: dict  # src -> tgt
    blocked: set = field(default_factory=set)  # time successor leaves the invariant
    out: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def node_zone(self, n: int) -> Zone:
        return self.space.zone(self.nodes[n][1])

    def describe(self, n: int) -> str:
        loc, r = self.nodes[n]
        return f"({loc_label(loc)}, {self.space.describe(r)})"


def loc_label(loc) -> str:
    if isinstance(loc, tuple):
        return "(" + ",".join(loc_label(x) for x in loc) + ")"
    if isinstance(loc, frozenset):
        return "{" + ",".join(sorted(loc_label(x) for x in loc)) + "}"
    return str(loc)


def _loc_sort_key(loc):
    return loc_label(loc)


class RegionSplitError(AssertionError):
    """A guard or invariant cuts through a region (ceilings too small)."""


def build_region_graph(a, space: RegionSpace | None = None) -> RegionGraph:
    if space is None:
        space = RegionSpace(a.clocks, max_constants(a))
    inv = {q: [Zone.from_constraint(a.clocks, cc) for cc in disj] for q, disj in a.invariants.items()}
    guards = [Zone.from_constraint(a.clocks, e.guard) for e in a.edges]
    resets = [[a.clocks.index(c) for c in sorted(e.resets)] for e in a.edges]
    by_source: dict = {}
    for k, e in enumerate(a.edges):
        by_source.setdefault(e.source, []).append(k)

    def inside(zones, rz):
        if zones is None:
            return True
        hit = False
        for z in zones:
            if z.includes(rz):
                return True
            if z.intersects(rz):
                hit = True
        if hit:
            # a union may still cover the region
            from .dbm import fed_subtract, fed_is_empty

            if fed_is_empty(fed_subtract([rz], zones)):
                return True
            raise RegionSplitError(f"invariant splits region {rz}")
        return False

    def ok(q, r):
        return inside(inv.get(q), space.zone(r))

    start = (a.initial, space.initial())
    found = {}
    disc = []
    tim = {}
    blocked = set()
    if ok(*start):
        found[start] = None
        queue = deque([start])
        while queue:
            node = queue.popleft()
            q, r = node
            rz = space.zone(r)
            for k in by_source.get(q, ()):
                g = guards[k]
                if g.includes(rz):
                    pass
                elif g.intersects(rz):
                    raise RegionSplitError(f"guard of edge {k} splits region {rz}")
                else:
                    continue
                tgt = (a.edges[k].target, space.reset(r, resets[k]))
                if not ok(*tgt):
                    continue
                disc.append((node, k, tgt))
                if tgt not in found:
                    found[tgt] = None
                    queue.append(tgt)
            s = space.successor(r)
            if s is not None:
                if ok(q, s):
                    tim[node] = (q, s)
                    if (q, s) not in found:
                        found[(q, s)] = None
                        queue.append((q, s))
                else:
                    blocked.add(node)
    nodes = sorted(found, key=lambda n: (_loc_sort_key(n[0]), n[1]))
    index = {n: i for i, n in enumerate(nodes)}
    nlocs = len(a.locations)
    limit = nlocs * space.bound()
    assert len(nodes) <= limit, f"region count {len(nodes)} exceeds bound {limit}"
    discrete = sorted((index[s], k, index[t]) for s, k, t in disc)
    out: dict = {}
    for s, k, t in discrete:
        out.setdefault(s, []).append((k, t))
    return RegionGraph(
        automaton=a,
        space=space,
        nodes=nodes,
        index=index,
        initial=index.get(start),
        discrete=discrete,
        time={index[s]: index[t] for s, t in tim.items()},
        blocked={index[s] for s in blocked},
        out=out,
    )
