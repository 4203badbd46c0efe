import json
import re
import subprocess
import sys

import pytest

from conftest import MODELS, corpus
from timedni.cli import main
from timedni.modelfile import load_model, parse_model
from timedni.regions import build_region_graph
from timedni.timed import build_monitor_product, check_snni_timed
from timedni.untimed import language_included

FAMILY = str(MODELS / "family.ta")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "argv,code",
    [
        (["check", "snni", FAMILY, "A1"], 1),
        (["check", "snni", FAMILY, "A2"], 0),
        (["check", "csnni", str(MODELS / "csnni.ta"), "Ac"], 1),
        (["check", "csnni", str(MODELS / "csnni.ta"), "Ad"], 0),
        (["check", "bsnni", str(MODELS / "bsnni.ta"), "Ae"], 1),
        (["check", "snni", str(MODELS / "nondet_timed.ta"), "N"], 2),
        (["check", "bsnni", FAMILY, "A1"], 2),
        (["check", "snni", str(MODELS / "missing.ta")], 2),
        (["check", "snni-cp", FAMILY, "A1"], 0),
        (["synth", "snni", FAMILY, "A1"], 0),
        (["info", FAMILY, "A1"], 0),
    ],
)
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_json_report(capsys):
    code, out, _ = run(capsys, "check", "snni", FAMILY, "A1", "--format", "json")
    rep = json.loads(out)
    assert code == 1 and rep["schema"] == 1 and rep["holds"] is False
    assert rep["witness"] == str(check_snni_timed(corpus("A1")).witness)


def test_text_report(capsys):
    code, out, _ = run(capsys, "check", "snni", str(MODELS / "untimed_leak.ta"), "Ak")
    assert code == 1 and "l1 l2" in out


def test_replay_confirms_timed_witness(capsys, tmp_path):
    _, out, _ = run(capsys, "check", "snni", FAMILY, "A1", "--format", "json")
    rep = tmp_path / "rep.json"
    rep.write_text(out)
    code, out, _ = run(capsys, "replay", str(rep), FAMILY, "--format", "json")
    assert code == 0 and json.loads(out)["confirmed"] is True
    # against an automaton where the word is fine, replay must not confirm
    code, _, _ = run(capsys, "replay", str(rep), FAMILY, "A2")
    assert code == 1


def test_replay_untimed_and_unmatched(capsys, tmp_path):
    for f, name, prob in [("untimed_leak.ta", "Ak", "snni"), ("csnni.ta", "Ac", "csnni")]:
        _, out, _ = run(capsys, "check", prob, str(MODELS / f), name, "--format", "json")
        rep = tmp_path / f"{name}.json"
        rep.write_text(out)
        code, _, _ = run(capsys, "replay", str(rep), str(MODELS / f), name)
        assert code == 0, name


def test_synth_emits_loadable_model(capsys, tmp_path):
    target = tmp_path / "c.ta"
    code, _, _ = run(capsys, "synth", "snni", FAMILY, "A1", "-o", str(target), "--out-name", "CA1")
    assert code == 0
    c = load_model(target, internal=True).get("CA1")
    assert check_snni_timed(c).holds


def test_synth_bot_and_rounds_dot(capsys, tmp_path):
    code, out, _ = run(capsys, "synth", "snni", str(MODELS / "counter.ta"), "K", "--rounds-dot", str(tmp_path), "-o", str(tmp_path / "k.ta"))
    assert code == 0
    assert sorted(p.name for p in tmp_path.glob("*.dot")) == ["round1.dot", "round2.dot"]
    # no controllable action and a leak: no controller
    code, _, _ = run(capsys, "synth", "snni", str(MODELS / "basic.ta"), "Aa")
    assert code == 1


def test_check_all(capsys):
    code, out, _ = run(capsys, "check", "snni", str(MODELS), "--all", "--format", "json")
    reps = json.loads(out)
    names = {r["automaton"] for r in reps}
    assert {"A1", "A2", "K", "N"} <= names
    assert code == 2
    assert any("error" in r for r in reps if r["automaton"] == "N")


def _dot_nodes(text):
    return len(re.findall(r"^\s+n\d+ \[", text, flags=re.M))


def test_export_region_graph_node_count(capsys):
    code, out, _ = run(capsys, "export", "dot", "regiongraph", FAMILY, "A1")
    assert code == 0
    assert _dot_nodes(out) == len(build_region_graph(corpus("A1")))


def test_export_arena_marks_bad(capsys):
    code, out, _ = run(capsys, "export", "dot", "arena", FAMILY, "A1")
    mp = build_monitor_product(corpus("A1"))
    assert code == 0
    assert out.count("color=red") == len(mp.bad)


def test_gadget_command(capsys, tmp_path):
    f = tmp_path / "pair.ta"
    f.write_text(
        "automaton D1\nalphabet low: a b\nedge 0 -> 1 on a\nedge 1 -> 0 on b\n\n"
        "automaton D2\nalphabet low: a b\nedge 0 -> 1 on a\nedge 1 -> 2 on a\n"
    )
    code, out, _ = run(capsys, "gadget", str(f), "D1", "D2")
    assert code == 0
    g = parse_model(out).get()
    doc = load_model(f)
    expected = language_included(doc.get("D2"), doc.get("D1"))[0]
    assert expected is False
    assert check_snni_timed(g).holds is expected


def test_console_module_entry():
    out = subprocess.run(
        [sys.executable, "-m", "timedni.cli", "check", "snni", FAMILY, "A2"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0
