"""Run controller synthesis on the corpus examples and print each round."""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from timedni.modelfile import load_model, print_automaton
from timedni.timed import synthesize_snni

ROOT = Path(__file__).resolve().parents[1]


@dataclass
class Config:
    models: Path = ROOT / "models"
    cases: list = field(default_factory=lambda: [("family.ta", "A1"), ("counter.ta", "K"), ("preempt.ta", "H"), ("cp_timed.ta", "P")])
    show_final: bool = False


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--show-final", action="store_true", help="print the synthesised automata")
    cfg = Config(show_final=p.parse_args(argv).show_final)
    for f, name in cfg.cases:
        a = load_model(cfg.models / f).get(name)
        res = synthesize_snni(a)
        print(f"{name}: outcome={res.outcome} iterations={res.iteration_count} "
              f"effective={res.effective_rounds} round-1 arena nodes={res.round1_size} ({res.seconds:.3f}s)")
        for r in res.rounds:
            size = f"{len(r.controlled.locations)} locations, {len(r.controlled.edges)} edges" if r.controlled else "-"
            print(f"  round {r.index}: effective={r.effective} bad nodes={len(r.strategy.bad) if r.strategy else '?'} result: {size}")
        if cfg.show_final and res.ok:
            print(print_automaton(res.final.with_(name=f"C_{name}")))


if __name__ == "__main__":
    main()
