"""Difference bound matrices.

Entry ``m[i][j]`` bounds ``x_i - x_j`` where index 0 is the constant-zero
reference clock.  A bound ``(c, <=)`` is encoded as ``2c + 1`` and ``(c, <)``
as ``2c``; the integer order is then the tightness order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .constraints import Atom, ClockConstraint

INF = 1 << 62
LE_ZERO = 1


def le(c: int) -> int:
    return 2 * c + 1


def lt(c: int) -> int:
    return 2 * c


def bound_value(b: int) -> int:
    return b >> 1


def is_strict(b: int) -> bool:
    return not (b & 1)


def add(a: int, b: int) -> int:
    if a == INF or b == INF:
        return INF
    return (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)


def negate(b: int) -> int:
    """Bound of the complementary half-space, read on the transposed entry."""
    return 1 - b


def _closure(m: list[list[int]]) -> bool:
    """Floyd-Warshall in place.  Returns False when the zone is empty."""
    n = len(m)
    for k in range(n):
        mk = m[k]
        for i in range(n):
            mik = m[i][k]
            if mik == INF:
                continue
            mi = m[i]
            for j in range(n):
                mkj = mk[j]
                if mkj == INF:
                    continue
                s = add(mik, mkj)
                if s < mi[j]:
                    mi[j] = s
        if m[k][k] < LE_ZERO:
            return False
    return all(m[i][i] >= LE_ZERO for i in range(n))


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Zone:
    """A canonical DBM over a fixed, ordered tuple of clocks."""

    clocks: tuple[str, ...]
    m: tuple[tuple[int, ...], ...] | None  # None encodes the empty zone

    # -- construction ----------------------------------------------------
    @classmethod
    def _from_rows(cls, clocks, rows) -> "Zone":
        if not _closure(rows):
            return cls(tuple(clocks), None)
        return cls(tuple(clocks), tuple(tuple(r) for r in rows))

    @classmethod
    def universe(cls, clocks: Sequence[str]) -> "Zone":
        n = len(clocks) + 1
        rows = [[INF] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = LE_ZERO
            rows[0][i] = LE_ZERO
        return cls(tuple(clocks), tuple(tuple(r) for r in rows))

    @classmethod
    def zero(cls, clocks: Sequence[str]) -> "Zone":
        n = len(clocks) + 1
        return cls(tuple(clocks), tuple((LE_ZERO,) * n for _ in range(n)))

    @classmethod
    def empty(cls, clocks: Sequence[str]) -> "Zone":
        return cls(tuple(clocks), None)

    @classmethod
    def from_bounds(cls, clocks: Sequence[str], bounds: Iterable[tuple[int, int, int]]) -> "Zone":
        """Universe tightened by ``(i, j, bound)`` triples, then canonicalized."""
        rows = [list(r) for r in cls.universe(clocks).m]
        for i, j, b in bounds:
            if b < rows[i][j]:
                rows[i][j] = b
        return cls._from_rows(clocks, rows)

    @classmethod
    def from_constraint(cls, clocks: Sequence[str], cc: ClockConstraint) -> "Zone":
        index = {c: k + 1 for k, c in enumerate(clocks)}
        bounds = []
        for a in cc.atoms:
            try:
                i = index[a.clock]
                j = index[a.other] if a.other is not None else 0
            except KeyError as exc:
                raise DimensionError(f"clock {exc.args[0]!r} not in {clocks}") from None
            c = a.const
            if a.op in ("<", "<="):
                bounds.append((i, j, lt(c) if a.op == "<" else le(c)))
            elif a.op in (">", ">="):
                bounds.append((j, i, lt(-c) if a.op == ">" else le(-c)))
            else:
                bounds.append((i, j, le(c)))
                bounds.append((j, i, le(-c)))
        return cls.from_bounds(clocks, bounds)

    # -- queries ---------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.clocks) + 1

    @property
    def is_empty(self) -> bool:
        return self.m is None

    def _check(self, other: "Zone"):
        if self.clocks != other.clocks:
            raise DimensionError(f"zones over {self.clocks} and {other.clocks}")

    def contains(self, v: Mapping[str, Fraction]) -> bool:
        if self.m is None:
            return False
        vals = [Fraction(0)] + [Fraction(v[c]) for c in self.clocks]
        n = self.dim
        for i in range(n):
            for j in range(n):
                b = self.m[i][j]
                if b == INF or i == j:
                    continue
                d = vals[i] - vals[j]
                c = bound_value(b)
                if d > c or (d == c and is_strict(b)):
                    return False
        return True

    def includes(self, other: "Zone") -> bool:
        """``other`` is a subset of ``self``."""
        self._check(other)
        if other.m is None:
            return True
        if self.m is None:
            return False
        return all(
            o <= s for ro, rs in zip(other.m, self.m) for o, s in zip(ro, rs)
        )

    def intersects(self, other: "Zone") -> bool:
        return not self.intersect(other).is_empty

    # -- operations ------------------------------------------------------
    def intersect(self, other: "Zone") -> "Zone":
        self._check(other)
        if self.m is None or other.m is None:
            return Zone.empty(self.clocks)
        rows = [[min(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(self.m, other.m)]
        return Zone._from_rows(self.clocks, rows)

    def constrain(self, bounds: Iterable[tuple[int, int, int]]) -> "Zone":
        if self.m is None:
            return self
        rows = [list(r) for r in self.m]
        for i, j, b in bounds:
            if b < rows[i][j]:
                rows[i][j] = b
        return Zone._from_rows(self.clocks, rows)

    def up(self) -> "Zone":
        """Future closure: remove the upper bounds of every clock."""
        if self.m is None:
            return self
        rows = [list(r) for r in self.m]
        for i in range(1, self.dim):
            rows[i][0] = INF
        return Zone._from_rows(self.clocks, rows)

    def down(self) -> "Zone":
        """Past closure within the non-negative orthant."""
        if self.m is None:
            return self
        rows = [list(r) for r in self.m]
        for i in range(1, self.dim):
            rows[0][i] = LE_ZERO
        return Zone._from_rows(self.clocks, rows)

    def _indices(self, names: Iterable[str]) -> list[int]:
        index = {c: k + 1 for k, c in enumerate(self.clocks)}
        try:
            return [index[c] for c in names]
        except KeyError as exc:
            raise DimensionError(f"clock {exc.args[0]!r} not in {self.clocks}") from None

    def reset(self, names: Iterable[str]) -> "Zone":
        if self.m is None:
            return self
        rows = [list(r) for r in self.m]
        n = self.dim
        for x in self._indices(names):
            for j in range(n):
                rows[x][j] = rows[0][j]
                rows[j][x] = rows[j][0]
            rows[x][x] = LE_ZERO
        return Zone._from_rows(self.clocks, rows)

    def free(self, names: Iterable[str]) -> "Zone":
        """Existentially quantify clocks (they become arbitrary non-negative)."""
        if self.m is None:
            return self
        rows = [list(r) for r in self.m]
        n = self.dim
        for x in self._indices(names):
            for j in range(n):
                if j != x:
                    rows[x][j] = INF
                    rows[j][x] = rows[j][0]
            rows[0][x] = LE_ZERO
        return Zone._from_rows(self.clocks, rows)

    def pre_reset(self, names: Iterable[str]) -> "Zone":
        """Valuations whose image under the reset lies in this zone."""
        names = list(names)
        idx = self._indices(names)
        zeroed = self.constrain([b for x in idx for b in ((x, 0, LE_ZERO), (0, x, LE_ZERO))])
        return zeroed.free(names)

    def rename(self, clocks: Sequence[str]) -> "Zone":
        if len(clocks) != len(self.clocks):
            raise DimensionError("rename must keep the dimension")
        return Zone(tuple(clocks), self.m)

    def lift(self, clocks: Sequence[str]) -> "Zone":
        """Embed into a superset of clocks; the new clocks are unconstrained."""
        pos = {c: k + 1 for k, c in enumerate(clocks)}
        if self.m is None:
            return Zone.empty(clocks)
        src = [0] + [pos[c] for c in self.clocks]
        bounds = [
            (src[i], src[j], self.m[i][j])
            for i in range(self.dim)
            for j in range(self.dim)
            if i != j and self.m[i][j] != INF
        ]
        return Zone.from_bounds(clocks, bounds)

    def project(self, clocks: Sequence[str]) -> "Zone":
        """Existentially eliminate all clocks not in ``clocks`` (kept in given order)."""
        if self.m is None:
            return Zone.empty(clocks)
        idx = [0] + self._indices(clocks)
        rows = [[self.m[i][j] for j in idx] for i in idx]
        return Zone(tuple(clocks), tuple(tuple(r) for r in rows))

    # -- minimal constraint form ----------------------------------------
    @cached_property
    def minimal_bounds(self) -> tuple[tuple[int, int, int], ...]:
        """A non-redundant set of entries generating this zone.

        Entries relative to the reference clock come first; diagonal entries
        are dropped first when they are implied.
        """
        if self.m is None:
            return ()
        base = Zone.universe(self.clocks).m
        n = self.dim
        entries = [
            (i, j, self.m[i][j])
            for i in range(n)
            for j in range(n)
            if i != j and self.m[i][j] != INF and self.m[i][j] < base[i][j]
        ]
        entries.sort(key=lambda e: (e[0] != 0 and e[1] != 0, e[0], e[1]))
        kept = list(entries)
        for e in reversed(entries):
            trial = [k for k in kept if k != e]
            if Zone.from_bounds(self.clocks, trial).m == self.m:
                kept = trial
        return tuple(kept)

    def to_constraint(self) -> ClockConstraint:
        if self.m is None:
            raise ValueError("empty zone has no constraint form")
        atoms = []
        names = ("0",) + self.clocks
        for i, j, b in self.minimal_bounds:
            c, strict = bound_value(b), is_strict(b)
            if j == 0:
                atoms.append(Atom(names[i], "<" if strict else "<=", c))
            elif i == 0:
                atoms.append(Atom(names[j], ">" if strict else ">=", -c))
            else:
                atoms.append(Atom(names[i], "<" if strict else "<=", c, names[j]))
        return ClockConstraint(tuple(_merge_equalities(atoms)))

    def complement(self) -> list["Zone"]:
        """Pairwise-disjoint zones covering the orthant minus this zone."""
        if self.m is None:
            return [Zone.universe(self.clocks)]
        pieces = []
        prefix: list[tuple[int, int, int]] = []
        for i, j, b in self.minimal_bounds:
            piece = Zone.from_bounds(self.clocks, prefix + [(j, i, negate(b))])
            if not piece.is_empty:
                pieces.append(piece)
            prefix.append((i, j, b))
        return pieces

    def __str__(self):
        if self.m is None:
            return "false"
        return str(self.to_constraint())


def _merge_equalities(atoms: list[Atom]) -> list[Atom]:
    out = []
    seen = set()
    for a in atoms:
        if a in seen:
            continue
        if a.op in ("<=", ">=") and a.other is None:
            dual = Atom(a.clock, ">=" if a.op == "<=" else "<=", a.const)
            if dual in atoms:
                seen.add(dual)
                out.append(Atom(a.clock, "==", a.const))
                continue
        if a.other is not None and a.op == "<=":
            dual = Atom(a.other, "<=", -a.const, a.clock)
            if dual in atoms:
                seen.add(dual)
                out.append(Atom(a.clock, "==", a.const, a.other))
                continue
        out.append(a)
    return out


# -- federations (finite unions of zones) --------------------------------

Federation = tuple[Zone, ...]


def fed_reduce(fed: Iterable[Zone]) -> Federation:
    """Drop empty zones and zones included in another member."""
    zs = [z for z in fed if not z.is_empty]
    out: list[Zone] = []
    for k, z in enumerate(zs):
        if any(o.includes(z) and (o != z or idx < k) for idx, o in enumerate(zs) if idx != k):
            continue
        out.append(z)
    return tuple(out)


def fed_intersect(f1: Iterable[Zone], f2: Iterable[Zone]) -> Federation:
    f2 = list(f2)
    return fed_reduce(a.intersect(b) for a in f1 for b in f2)


def fed_complement(fed: Iterable[Zone], clocks: Sequence[str]) -> Federation:
    result: list[Zone] = [Zone.universe(clocks)]
    for z in fed:
        comp = z.complement()
        result = list(fed_reduce(p.intersect(c) for p in result for c in comp))
        if not result:
            break
    return tuple(result)


def fed_subtract(f1: Iterable[Zone], f2: Iterable[Zone]) -> Federation:
    f2 = list(f2)
    clocks = None
    out = list(f1)
    for z in f2:
        clocks = z.clocks
        comp = z.complement()
        out = list(fed_reduce(p.intersect(c) for p in out for c in comp))
    return tuple(out)


def fed_is_empty(fed: Iterable[Zone]) -> bool:
    return all(z.is_empty for z in fed)


def fed_contains(fed: Iterable[Zone], v: Mapping[str, Fraction]) -> bool:
    return any(z.contains(v) for z in fed)


def hull(z1: Zone, z2: Zone) -> Zone:
    z1._check(z2)
    if z1.m is None:
        return z2
    if z2.m is None:
        return z1
    rows = [[max(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(z1.m, z2.m)]
    return Zone._from_rows(z1.clocks, rows)


def fed_merge(fed: Iterable[Zone]) -> Federation:
    """Greedily replace pairs by their hull when the hull adds nothing."""
    zs = list(fed_reduce(fed))
    changed = True
    while changed:
        changed = False
        for a in range(len(zs)):
            for b in range(a + 1, len(zs)):
                h = hull(zs[a], zs[b])
                if fed_is_empty(fed_subtract([h], [zs[a], zs[b]])):
                    zs = [z for k, z in enumerate(zs) if k not in (a, b)] + [h]
                    changed = True
                    break
            if changed:
                break
    return tuple(zs)
