"""Print the verdict table for every automaton in the model corpus."""

import argparse
from dataclasses import dataclass
from pathlib import Path

from timedni.cli import Unsupported, run_check
from timedni.model import ModelError
from timedni.modelfile import load_model
from timedni.timed import OutsideDecidableClass

ROOT = Path(__file__).resolve().parents[1]


@dataclass
class Config:
    models: Path = ROOT / "models"
    problems: tuple = ("snni", "csnni", "bsnni")


def cell(problem, a):
    try:
        rep = run_check(problem, a)
    except OutsideDecidableClass:
        return "not dTA"
    except (Unsupported, ModelError):
        return "n/a"
    text = "yes" if rep["holds"] else "no"
    if not rep["holds"]:
        text += f" [{rep.get('witness') or rep.get('unmatched')}]"
    return text


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--models", type=Path, default=Config.models)
    args = p.parse_args(argv)
    cfg = Config(models=args.models)
    rows = [("file", "automaton") + cfg.problems]
    for f in sorted(cfg.models.glob("*.ta")):
        for name, a in load_model(f).automata.items():
            rows.append((f.name, name) + tuple(cell(pr, a) for pr in cfg.problems))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


if __name__ == "__main__":
    main()
