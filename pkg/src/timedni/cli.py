"""Command line front end: ``timedni check|synth|info|export|gadget|replay``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .model import ModelError, TimedAutomaton, TimedWord, hide, is_deterministic, is_dta, monitor_base, restrict
from .modelfile import ModelDocument, load_model, location_names, parse_model, print_automaton
from .regions import build_region_graph, loc_label, max_constants
from . import timed, untimed

SCHEMA = 1
EXIT_HOLDS, EXIT_FAILS, EXIT_ERROR = 0, 1, 2

CHECKS = ("snni", "csnni", "bsnni", "snni-cp", "csnni-cp")
SYNTHS = ("snni", "csnni")


class Unsupported(Exception):
    """Problem outside the implemented or decidable class (exit code 2)."""


def _fmt_seconds(s: float) -> str:
    return f"{s:.3f}"


def _verdict_fields(v) -> dict:
    out = {"holds": v.holds, "property": v.property}
    if v.witness is not None:
        out["witness"] = v.witness_text()
        out["witness_word"] = v.witness.to_json()
    if v.unmatched is not None:
        out["unmatched"] = loc_label(v.unmatched)
    if v.run is not None:
        out["run"] = [[str(d), a] for d, a in v.run]
    if v.note:
        out["note"] = v.note
    return out


def _sizes(a: TimedAutomaton) -> dict:
    return {"locations": len(a.locations), "edges": len(a.edges), "clocks": len(a.clocks)}


def run_check(problem: str, a: TimedAutomaton) -> dict:
    t0 = time.perf_counter()
    rep = {"schema": SCHEMA, "automaton": a.name, "sizes": _sizes(a)}
    clock_free = a.is_clock_free
    if problem in ("snni", "csnni", "bsnni"):
        rep["problem"] = f"{problem}-vp"
        if clock_free:
            fn = {"snni": untimed.check_snni_untimed, "csnni": untimed.check_csnni_untimed, "bsnni": untimed.check_bsnni_untimed}
            v = fn[problem](a)
            rep["engine"] = "untimed"
        elif problem == "bsnni":
            raise Unsupported("BSNNI on clocked automata is outside the implemented class")
        else:
            v = timed.check_snni_timed(a) if problem == "snni" else timed.check_csnni_timed_dta(a)
            rep["engine"] = "timed"
            rep["sizes"]["arena_nodes"] = v.stats.get("arena_nodes")
        rep.update(_verdict_fields(v))
    else:
        rep["problem"] = problem
        sc = sorted(a.alphabet.controllable)
        rep["controllable"] = sc
        if clock_free:
            fn = untimed.snni_cp_untimed if problem == "snni-cp" else untimed.csnni_cp_untimed
            rep["holds"] = fn(a)
            rep["engine"] = "untimed"
            rep["note"] = "decided on the automaton with every controllable action disabled"
        else:
            res = timed.synthesize_snni(a) if problem == "snni-cp" else timed.synthesize_csnni_dta(a)
            rep["holds"] = res.ok
            rep["engine"] = "timed"
            rep["iterations"] = res.iteration_count
    rep["seconds"] = _fmt_seconds(time.perf_counter() - t0)
    return rep


def run_synth(problem: str, a: TimedAutomaton):
    t0 = time.perf_counter()
    rep = {"schema": SCHEMA, "automaton": a.name, "problem": f"{problem}-csp", "sizes": _sizes(a)}
    rep["controllable"] = sorted(a.alphabet.controllable)
    if a.is_clock_free:
        if problem == "snni":
            res = untimed.snni_csp_untimed(a)
        else:
            base = restrict(a, a.alphabet.high)
            if not is_deterministic(base):
                raise Unsupported(
                    "CSNNI synthesis needs a deterministic low restriction; "
                    "no most permissive CSNNI controller exists in general"
                )
            res = timed.synthesize_csnni_dta(a)
        rep["engine"] = "untimed"
    else:
        res = timed.synthesize_snni(a) if problem == "snni" else timed.synthesize_csnni_dta(a)
        rep["engine"] = "timed"
    rep["outcome"] = res.outcome
    rep["holds"] = res.ok
    rep["iterations"] = res.iteration_count
    rep["effective_rounds"] = res.effective_rounds
    rep["rounds"] = [
        {
            "round": r.index,
            "effective": r.effective,
            "arena_nodes": len(r.graph),
            "winning": None if r.strategy is None else len(r.strategy.winning),
        }
        for r in res.rounds
    ]
    if res.ok:
        rep["self_check"] = res.verdict.holds
        rep["controlled_sizes"] = _sizes(res.final)
    rep["notes"] = list(res.notes)
    rep["seconds"] = _fmt_seconds(time.perf_counter() - t0)
    return rep, res


def run_info(a: TimedAutomaton) -> dict:
    rep = {"schema": SCHEMA, "problem": "info", "automaton": a.name, "sizes": _sizes(a)}
    al = a.alphabet
    rep["alphabet"] = {
        "low": sorted(al.low),
        "high": sorted(al.high),
        "controllable": sorted(al.controllable),
        "uncontrollable": sorted(al.uncontrollable),
    }
    try:
        rep["deterministic"] = "yes" if is_deterministic(a) else "no"
    except ModelError:
        rep["deterministic"] = "undefined (ε edges)"
    rep["dTA"] = "yes" if is_dta(a) else "no"
    rep["max_constants"] = max_constants(a)
    rep["regions"] = len(build_region_graph(a))
    return rep


# -- rendering -------------------------------------------------------------------


def render_text(rep: dict) -> str:
    lines = []
    for key in sorted(rep):
        val = rep[key]
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True, ensure_ascii=False)
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


def emit(rep, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(rep, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
    else:
        if isinstance(rep, list):
            out.write("\n\n".join(render_text(r) for r in rep) + "\n")
        else:
            out.write(render_text(rep) + "\n")


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def automaton_dot(a: TimedAutomaton, bad=()) -> str:
    names = location_names(a)
    lines = [f'digraph "{_dot_escape(a.name)}" {{', "  rankdir=LR;"]
    lines.append('  __init [shape=point];')
    for q in sorted(a.locations, key=lambda q: names[q]):
        label = names[q]
        if q in a.invariants:
            label += "\\n" + " || ".join(str(cc) for cc in a.invariants[q])
        attrs = f'label="{_dot_escape(label)}"'
        if q in bad:
            attrs += ", color=red"
        lines.append(f'  "{_dot_escape(names[q])}" [{attrs}];')
    lines.append(f'  __init -> "{_dot_escape(names[a.initial])}";')
    rows = []
    for e in a.edges:
        lab = e.action if e.guard.is_true else f"{e.action}, {e.guard}"
        if e.resets:
            lab += " {" + ",".join(sorted(e.resets)) + "}"
        rows.append(f'  "{_dot_escape(names[e.source])}" -> "{_dot_escape(names[e.target])}" [label="{_dot_escape(lab)}"];')
    lines += sorted(rows)
    lines.append("}")
    return "\n".join(lines) + "\n"


def region_graph_dot(rg, bad=()) -> str:
    lines = ['digraph "regions" {']
    for i in range(len(rg)):
        attrs = f'label="{_dot_escape(rg.describe(i))}"'
        if i in bad:
            attrs += ", color=red"
        if i == rg.initial:
            attrs += ", peripheries=2"
        lines.append(f"  n{i} [{attrs}];")
    for s, k, t in rg.discrete:
        act = rg.automaton.edges[k].action
        lines.append(f'  n{s} -> n{t} [label="{_dot_escape(act)}"];')
    for s in sorted(rg.time):
        lines.append(f'  n{s} -> n{rg.time[s]} [style=dashed, label="δ"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- replay ----------------------------------------------------------------------


def replay(rep: dict, a: TimedAutomaton) -> tuple[bool, str]:
    """Re-execute a report's witness against ``a``; True when it confirms the verdict."""
    from .runs import accepts

    if rep.get("holds"):
        return True, "nothing to replay for a holding verdict"
    high = a.alphabet.high
    if "witness_word" in rep:
        word = TimedWord.from_json(rep["witness_word"])
        if a.is_clock_free:
            acts = word.untimed()
            lo = _word_automaton(acts)
            in_hidden = untimed.language_included(lo.with_(alphabet=a.alphabet.drop(high)), hide(a, high))[0]
            in_restr = untimed.language_included(lo.with_(alphabet=a.alphabet.drop(high)), restrict(a, high))[0]
            ok = in_hidden and not in_restr
            return ok, f"word {' '.join(acts) or 'ε'}: in A/Σh={in_hidden}, in A\\Σh={in_restr}"
        run = [(Fraction(d), act) for d, act in rep.get("run", [])]
        full_ok = accepts(a, run)
        proj_ok = TimedWord(tuple(run)).project(a.alphabet.low) == word
        in_restr = accepts(monitor_base(a), word.pairs)
        ok = full_ok and proj_ok and not in_restr
        return ok, f"run accepted={full_ok}, projection matches={proj_ok}, in A\\Σh={in_restr}"
    if "unmatched" in rep:
        again = run_check(rep["problem"].replace("-vp", ""), a)
        ok = not again["holds"] and again.get("unmatched") == rep["unmatched"]
        return ok, f"recomputed unmatched state {again.get('unmatched')}"
    return False, "report carries no witness"


def _word_automaton(acts) -> TimedAutomaton:
    from .model import make_automaton

    edges = [(i, a, i + 1) for i, a in enumerate(acts)]
    return make_automaton("w", edges, initial=0, locations=[0], low=set(acts))


# -- argument handling -------------------------------------------------------------


def _load(path, internal) -> ModelDocument:
    return load_model(path, internal=internal)


def _targets(args):
    """(file, automaton) pairs selected by the arguments."""
    if getattr(args, "all", False):
        root = Path(args.file)
        files = sorted(root.glob("*.ta")) if root.is_dir() else [root]
        for f in files:
            doc = _load(f, args.internal)
            for name in doc.names():
                yield f, doc.get(name)
    else:
        doc = _load(args.file, args.internal)
        yield Path(args.file), doc.get(args.name)


def _exit_for(rep) -> int:
    return EXIT_HOLDS if rep.get("holds") else EXIT_FAILS


def cmd_check(args) -> int:
    def one(item):
        f, a = item
        try:
            rep = run_check(args.problem, a)
            rep["file"] = str(f)
            return rep, _exit_for(rep)
        except (Unsupported, timed.OutsideDecidableClass, ModelError) as exc:
            return {"schema": SCHEMA, "automaton": a.name, "file": str(f), "error": str(exc)}, EXIT_ERROR

    items = list(_targets(args))
    if args.all:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(one, items))
        emit([r for r, _ in results], args.format)
        return max((c for _, c in results), default=EXIT_HOLDS)
    rep, code = one(items[0])
    emit(rep, args.format)
    return code


def cmd_synth(args) -> int:
    (f, a), = list(_targets(args))
    try:
        rep, res = run_synth(args.problem, a)
    except (Unsupported, timed.OutsideDecidableClass, ModelError) as exc:
        emit({"schema": SCHEMA, "automaton": a.name, "error": str(exc)}, args.format)
        return EXIT_ERROR
    rep["file"] = str(f)
    artifact = None
    if res.ok:
        final = res.final.with_(name=args.out_name or f"C_{a.name}")
        if args.emit == "ta":
            artifact = print_automaton(final)
        elif args.emit == "dot":
            artifact = automaton_dot(final)
        elif args.emit == "json":
            artifact = json.dumps(_automaton_json(final), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.rounds_dot and res.rounds:
        d = Path(args.rounds_dot)
        d.mkdir(parents=True, exist_ok=True)
        for r in res.rounds:
            if r.controlled is not None:
                (d / f"round{r.index}.dot").write_text(automaton_dot(r.controlled))
    if artifact is not None:
        if args.output:
            Path(args.output).write_text(artifact)
            rep["artifact"] = args.output
        else:
            sys.stdout.write(artifact)
    emit(rep, args.format, out=sys.stderr if artifact is not None and not args.output else sys.stdout)
    return EXIT_HOLDS if res.ok else EXIT_FAILS


def _automaton_json(a: TimedAutomaton) -> dict:
    names = location_names(a)
    return {
        "schema": SCHEMA,
        "name": a.name,
        "clocks": list(a.clocks),
        "alphabet": {
            "low": sorted(a.alphabet.low),
            "high": sorted(a.alphabet.high),
            "controllable": sorted(a.alphabet.controllable),
        },
        "initial": names[a.initial],
        "locations": [
            {"name": names[q], "invariant": [str(cc) for cc in a.invariant(q)]} for q in a.locations
        ],
        "edges": [
            {
                "source": names[e.source],
                "target": names[e.target],
                "action": e.action,
                "guard": str(e.guard),
                "reset": sorted(e.resets),
            }
            for e in a.edges
        ],
    }


def cmd_info(args) -> int:
    reps = [dict(run_info(a), file=str(f)) for f, a in _targets(args)]
    emit(reps if len(reps) > 1 else reps[0], args.format)
    return EXIT_HOLDS


def cmd_export(args) -> int:
    (f, a), = list(_targets(args))
    try:
        if args.what == "automaton":
            sys.stdout.write(automaton_dot(a))
        elif args.what == "regiongraph":
            sys.stdout.write(region_graph_dot(build_region_graph(a)))
        else:
            mp = timed.build_monitor_product(a, untimed=a.is_clock_free)
            sys.stdout.write(automaton_dot(mp.arena, bad=mp.bad))
    except (timed.OutsideDecidableClass, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_HOLDS


def cmd_gadget(args) -> int:
    doc = _load(args.file, args.internal)
    try:
        g = timed.build_inclusion_gadget(doc.get(args.a1), doc.get(args.a2), name=args.out_name)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = print_automaton(g)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_HOLDS


def cmd_replay(args) -> int:
    rep = json.loads(Path(args.report).read_text())
    doc = _load(args.file, args.internal)
    a = doc.get(args.name or rep.get("automaton"))
    ok, msg = replay(rep, a)
    emit({"schema": SCHEMA, "problem": "replay", "automaton": a.name, "confirmed": ok, "detail": msg}, args.format)
    return EXIT_HOLDS if ok else EXIT_FAILS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="timedni", description="Non-interference checking and control for timed automata")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--internal", action="store_true", help="accept diagonal guards and disjunctive invariants")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("check", parents=[common], help="verify a property")
    c.add_argument("problem", choices=CHECKS)
    c.add_argument("file")
    c.add_argument("name", nargs="?")
    c.add_argument("--all", action="store_true", help="FILE is a directory (or file); check every automaton")
    c.add_argument("--jobs", type=int, default=4)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("synth", parents=[common], help="synthesise the most permissive controller")
    s.add_argument("problem", choices=SYNTHS)
    s.add_argument("file")
    s.add_argument("name", nargs="?")
    s.add_argument("--emit", choices=("ta", "dot", "json"), default="ta")
    s.add_argument("-o", "--output")
    s.add_argument("--out-name")
    s.add_argument("--rounds-dot", help="directory receiving one DOT file per round")
    s.set_defaults(func=cmd_synth, all=False)

    i = sub.add_parser("info", parents=[common], help="sizes, determinism, dTA membership")
    i.add_argument("file")
    i.add_argument("name", nargs="?")
    i.add_argument("--all", action="store_true")
    i.set_defaults(func=cmd_info)

    e = sub.add_parser("export", parents=[common], help="DOT output")
    e.add_argument("kind", choices=("dot",))
    e.add_argument("what", choices=("automaton", "regiongraph", "arena"))
    e.add_argument("file")
    e.add_argument("name", nargs="?")
    e.set_defaults(func=cmd_export, all=False)

    g = sub.add_parser("gadget", parents=[common], help="inclusion gadget: SNNI iff L(A2) ⊆ L(A1)")
    g.add_argument("file")
    g.add_argument("a1")
    g.add_argument("a2")
    g.add_argument("-o", "--output")
    g.add_argument("--out-name", default="A12")
    g.set_defaults(func=cmd_gadget)

    r = sub.add_parser("replay", parents=[common], help="re-execute the witness of a JSON report")
    r.add_argument("report")
    r.add_argument("file")
    r.add_argument("name", nargs="?")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
