"""Cross-check the finite-automaton checkers against brute force on random inputs."""

import argparse
import random
import sys
import time
from dataclasses import dataclass
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import random_nfa  # noqa: E402
from oracles import snni_brute_force  # noqa: E402
from timedni.model import is_deterministic  # noqa: E402
from timedni.untimed import check_bsnni_untimed, check_csnni_untimed, check_snni_untimed  # noqa: E402


@dataclass
class Config:
    n: int = 1000
    seed: int = 0
    max_states: int = 5
    density: float = 0.3


def run(cfg: Config) -> dict:
    rng = random.Random(cfg.seed)
    stats = {"n": cfg.n, "oracle": 0, "hierarchy": 0, "deterministic": 0, "det_agree": 0, "snni": 0, "csnni": 0, "bsnni": 0}
    t0 = time.perf_counter()
    for _ in range(cfg.n):
        a = random_nfa(rng, max_states=cfg.max_states, density=cfg.density)
        s, c, b = (check_snni_untimed(a).holds, check_csnni_untimed(a).holds, check_bsnni_untimed(a).holds)
        stats["snni"] += s
        stats["csnni"] += c
        stats["bsnni"] += b
        stats["oracle"] += s == snni_brute_force(a)
        stats["hierarchy"] += (not b or c) and (not c or s)
        if is_deterministic(a):
            stats["deterministic"] += 1
            stats["det_agree"] += s == c
    stats["seconds"] = round(time.perf_counter() - t0, 2)
    return stats


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(Config()).items():
        p.add_argument(f"--{name.replace('_', '-')}", type=type(default), default=default)
    cfg = Config(**vars(p.parse_args(argv)))
    stats = run(cfg)
    for k, v in stats.items():
        print(f"{k:14s} {v}")
    ok = stats["oracle"] == stats["hierarchy"] == cfg.n and stats["det_agree"] == stats["deterministic"]
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
