"""Clock constraints: atoms ``x ~ c`` and ``x - y ~ c`` and their conjunctions."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

OPS = ("<", "<=", "==", ">=", ">")
UPPER_OPS = ("<", "<=")

_NORMALIZE_OP = {"=": "==", "≤": "<=", "≥": ">="}


class ConstraintSyntaxError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Atom:
    """``clock op const``, or ``clock - other op const`` when ``other`` is set."""

    clock: str
    op: str
    const: int
    other: str | None = None

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown relation {self.op!r}")
        if self.other is None and self.const < 0:
            raise ValueError("clock constants must be non-negative")

    @property
    def diagonal(self) -> bool:
        return self.other is not None

    def clocks(self) -> tuple[str, ...]:
        return (self.clock,) if self.other is None else (self.clock, self.other)

    def holds(self, v: Mapping[str, Fraction]) -> bool:
        lhs = v[self.clock] - (v[self.other] if self.other is not None else 0)
        c = self.const
        return {
            "<": lhs < c,
            "<=": lhs <= c,
            "==": lhs == c,
            ">=": lhs >= c,
            ">": lhs > c,
        }[self.op]

    def rename(self, mapping: Mapping[str, str]) -> "Atom":
        other = mapping.get(self.other, self.other) if self.other else None
        return Atom(mapping.get(self.clock, self.clock), self.op, self.const, other)

    def __str__(self):
        lhs = self.clock if self.other is None else f"{self.clock}-{self.other}"
        return f"{lhs}{self.op}{self.const}"


@dataclass(frozen=True)
class ClockConstraint:
    """A conjunction of atoms; the empty conjunction is ``true``."""

    atoms: tuple[Atom, ...] = ()

    def clocks(self) -> frozenset[str]:
        return frozenset(c for a in self.atoms for c in a.clocks())

    def holds(self, v: Mapping[str, Fraction]) -> bool:
        return all(a.holds(v) for a in self.atoms)

    def rename(self, mapping: Mapping[str, str]) -> "ClockConstraint":
        return ClockConstraint(tuple(a.rename(mapping) for a in self.atoms))

    def __and__(self, other: "ClockConstraint") -> "ClockConstraint":
        return ClockConstraint(self.atoms + other.atoms)

    @property
    def is_true(self) -> bool:
        return not self.atoms

    def __str__(self):
        return " && ".join(str(a) for a in self.atoms) if self.atoms else "true"


TRUE = ClockConstraint()

_ATOM_RE = re.compile(
    r"^\s*([A-Za-z_][A-Za-z0-9_']*)\s*(?:-\s*([A-Za-z_][A-Za-z0-9_']*)\s*)?"
    r"(<=|>=|==|=|<|>|≤|≥)\s*(-?\d+)\s*$"
)


def parse_constraint(text: str, allow_diagonal: bool = False) -> ClockConstraint:
    """Parse ``"x>1 && y<=2"``.  ``"true"`` and ``""`` give the empty conjunction."""
    text = text.strip()
    if text in ("", "true"):
        return TRUE
    atoms = []
    for part in re.split(r"&&|∧", text):
        m = _ATOM_RE.match(part)
        if not m:
            raise ConstraintSyntaxError(f"cannot parse clock atom {part.strip()!r}")
        clock, other, op, const = m.groups()
        if other is not None and not allow_diagonal:
            raise ConstraintSyntaxError(f"diagonal constraint {part.strip()!r} not allowed here")
        value = int(const)
        if other is None and value < 0:
            raise ConstraintSyntaxError(f"negative constant in {part.strip()!r}")
        atoms.append(Atom(clock, _NORMALIZE_OP.get(op, op), value, other))
    return ClockConstraint(tuple(atoms))


def parse_disjunction(text: str, allow_diagonal: bool = False) -> tuple[ClockConstraint, ...]:
    """Parse ``"A || B"`` into a tuple of conjunctions."""
    return tuple(parse_constraint(part, allow_diagonal) for part in text.split("||"))
