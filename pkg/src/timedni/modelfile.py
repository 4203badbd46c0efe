"""Line-oriented model format.

    automaton K
    clocks x
    alphabet low: a b ; high: h
    controllable: a
    initial 0
    location 0 invariant "x<=4"
    edge 0 -> 1 on a guard "x>=2" reset {x}

``on eps`` labels a silent edge.  ``controller C for K`` opens a block that
inherits clocks and alphabet from ``K`` unless it declares its own.  In
internal mode guards may hold diagonal atoms, invariants may be disjunctions
(``||``) or carry lower bounds, and ``ceiling x N`` lines are accepted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .constraints import ConstraintSyntaxError, ClockConstraint, parse_constraint, parse_disjunction
from .model import EPS, AlphabetSpec, Edge, ModelError, TimedAutomaton, validate
from .regions import loc_label


class ModelSyntaxError(ModelError):
    def __init__(self, line: int, msg: str, path: str = "<model>"):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


class ModelSemanticError(ModelError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass
class _Block:
    name: str
    line: int
    base: str | None = None
    clocks: list | None = None
    low: list | None = None
    high: list | None = None
    controllable: list | None = None
    initial: str | None = None
    locations: list = field(default_factory=list)
    invariants: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)
    ceilings: dict = field(default_factory=dict)
    internal: bool = False


@dataclass
class ModelDocument:
    automata: dict  # name -> TimedAutomaton, in file order
    controllers: dict = field(default_factory=dict)  # controller name -> base name
    lines: dict = field(default_factory=dict)  # name -> line of the block header

    def get(self, name: str | None = None) -> TimedAutomaton:
        if name is None:
            if not self.automata:
                raise ModelError("the model holds no automaton")
            return next(iter(self.automata.values()))
        try:
            return self.automata[name]
        except KeyError:
            raise ModelError(f"no automaton named {name!r}; have {sorted(self.automata)}") from None

    def names(self) -> list[str]:
        return list(self.automata)


_NAME = r"[^\s\"{}#]+"
_EDGE_RE = re.compile(
    rf"^edge\s+({_NAME})\s*->\s*({_NAME})\s+on\s+({_NAME})"
    r"(?:\s+guard\s+\"([^\"]*)\")?"
    r"(?:\s+reset\s+\{([^}]*)\})?\s*$"
)
_LOC_RE = re.compile(rf"^location\s+({_NAME})(?:\s+invariant\s+\"([^\"]*)\")?\s*$")


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def parse_model(text: str, internal: bool = False, path: str = "<model>") -> ModelDocument:
    blocks: list[_Block] = []
    cur: _Block | None = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue

        def fail(msg):
            raise ModelSyntaxError(no, msg, path)

        head = line.split()[0]
        if head in ("automaton", "controller"):
            parts = line.split()
            if head == "automaton" and len(parts) == 2:
                cur = _Block(parts[1], no)
            elif head == "controller" and len(parts) == 4 and parts[2] == "for":
                cur = _Block(parts[1], no, base=parts[3])
            else:
                fail(f"malformed block header {line!r}")
            if any(b.name == cur.name for b in blocks):
                fail(f"duplicate automaton name {cur.name!r}")
            blocks.append(cur)
            continue
        if cur is None:
            fail("statement outside an automaton block")
        if head == "internal":
            if not internal:
                fail("internal-only model; re-run in internal mode")
            cur.internal = True
        elif head == "clocks":
            cur.clocks = line.split()[1:]
        elif head == "alphabet":
            body = line[len("alphabet"):]
            cur.low, cur.high = cur.low or [], cur.high or []
            for part in body.split(";"):
                part = part.strip()
                if not part:
                    continue
                m = re.match(r"^(low|high)\s*:(.*)$", part)
                if not m:
                    fail(f"malformed alphabet part {part!r}")
                (cur.low if m.group(1) == "low" else cur.high).extend(m.group(2).split())
        elif head.startswith("controllable"):
            m = re.match(r"^controllable\s*:(.*)$", line)
            if not m:
                fail("expected 'controllable: a b'")
            cur.controllable = m.group(1).split()
        elif head == "initial":
            parts = line.split()
            if len(parts) != 2:
                fail("expected 'initial <location>'")
            cur.initial = parts[1]
            if parts[1] not in cur.locations:
                cur.locations.append(parts[1])
        elif head == "location":
            m = _LOC_RE.match(line)
            if not m:
                fail(f"malformed location line {line!r}")
            q, inv = m.groups()
            if q not in cur.locations:
                cur.locations.append(q)
            if inv is not None:
                try:
                    if internal:
                        cur.invariants[q] = parse_disjunction(inv, allow_diagonal=True)
                    else:
                        cur.invariants[q] = (parse_constraint(inv),)
                except ConstraintSyntaxError as exc:
                    fail(str(exc))
        elif head == "edge":
            m = _EDGE_RE.match(line)
            if not m:
                fail(f"malformed edge line {line!r}")
            src, tgt, act, guard, resets = m.groups()
            try:
                g = parse_constraint(guard or "", allow_diagonal=internal)
            except ConstraintSyntaxError as exc:
                fail(str(exc))
            rs = [r.strip() for r in (resets or "").replace(",", " ").split() if r.strip()]
            for q in (src, tgt):
                if q not in cur.locations:
                    cur.locations.append(q)
            cur.edges.append(Edge(src, g, EPS if act == "eps" else act, frozenset(rs), tgt))
        elif head == "ceiling":
            parts = line.split()
            if not internal:
                fail("'ceiling' is only accepted in internal mode")
            if len(parts) != 3 or not parts[2].isdigit():
                fail("expected 'ceiling <clock> <int>'")
            cur.ceilings[parts[1]] = int(parts[2])
        else:
            fail(f"unknown statement {head!r}")

    automata, controllers, lines = {}, {}, {}
    by_name = {b.name: b for b in blocks}
    for b in blocks:
        if b.base is not None:
            if b.base not in by_name:
                raise ModelSyntaxError(b.line, f"controller {b.name!r} refers to unknown automaton {b.base!r}", path)
            base = by_name[b.base]
            for attr in ("clocks", "low", "high", "controllable"):
                if getattr(b, attr) is None:
                    setattr(b, attr, getattr(base, attr))
            controllers[b.name] = b.base
        a = _build(b)
        diags = validate(a, internal=internal)
        if diags:
            raise ModelSemanticError([f"{path}:{b.line}: {a.name}: {d}" for d in diags])
        automata[b.name] = a
        lines[b.name] = b.line
    return ModelDocument(automata, controllers, lines)


def _build(b: _Block) -> TimedAutomaton:
    initial = b.initial
    if initial is None:
        initial = b.edges[0].source if b.edges else (b.locations[0] if b.locations else "q0")
        if initial not in b.locations:
            b.locations.insert(0, initial)
    return TimedAutomaton(
        b.name,
        tuple(b.locations),
        initial,
        tuple(b.clocks or ()),
        AlphabetSpec(frozenset(b.low or ()), frozenset(b.high or ()), frozenset(b.controllable or ())),
        tuple(b.edges),
        dict(b.invariants),
        dict(b.ceilings),
    )


def load_model(path, internal: bool = False) -> ModelDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read(), internal=internal, path=str(path))


# -- printing ------------------------------------------------------------------


def location_names(a: TimedAutomaton) -> dict:
    """Printable, unique names for the locations of ``a``."""
    names, used = {}, set()
    for q in a.locations:
        base = re.sub(r"[\s\"#]", "", loc_label(q)).replace("{", "[").replace("}", "]")
        base = base or "q"
        name = base
        k = 1
        while name in used or name == "->":
            k += 1
            name = f"{base}~{k}"
        used.add(name)
        names[q] = name
    return names


def _needs_internal(a: TimedAutomaton) -> bool:
    if a.ceilings:
        return True
    for disj in a.invariants.values():
        if len(disj) > 1:
            return True
        if any(at.diagonal or at.op not in ("<", "<=") for cc in disj for at in cc.atoms):
            return True
    return any(at.diagonal for e in a.edges for at in e.guard.atoms)


def _q(cc: ClockConstraint) -> str:
    return str(cc)


def print_automaton(a: TimedAutomaton, controller_for: str | None = None) -> str:
    names = location_names(a)
    out = []
    if controller_for:
        out.append(f"controller {a.name} for {controller_for}")
    else:
        out.append(f"automaton {a.name}")
    if _needs_internal(a):
        out.append("internal")
    if a.clocks:
        out.append("clocks " + " ".join(a.clocks))
    al = a.alphabet
    parts = []
    if al.low:
        parts.append("low: " + " ".join(sorted(al.low)))
    if al.high:
        parts.append("high: " + " ".join(sorted(al.high)))
    if parts:
        out.append("alphabet " + " ; ".join(parts))
    if al.controllable:
        out.append("controllable: " + " ".join(sorted(al.controllable)))
    for c in sorted(a.ceilings):
        out.append(f"ceiling {c} {a.ceilings[c]}")
    out.append(f"initial {names[a.initial]}")
    for q in a.locations:
        if q in a.invariants:
            inv = " || ".join(_q(cc) for cc in a.invariants[q])
            out.append(f'location {names[q]} invariant "{inv}"')
        else:
            out.append(f"location {names[q]}")
    for e in a.edges:
        line = f"edge {names[e.source]} -> {names[e.target]} on {'eps' if e.action == EPS else e.action}"
        if not e.guard.is_true:
            line += f' guard "{_q(e.guard)}"'
        if e.resets:
            line += " reset {" + ", ".join(sorted(e.resets)) + "}"
        out.append(line)
    return "\n".join(out) + "\n"


def print_model(doc: ModelDocument) -> str:
    return "\n".join(print_automaton(a, doc.controllers.get(n)) for n, a in doc.automata.items())
