import random
from pathlib import Path

import pytest

from timedni.model import AlphabetSpec, Edge, TimedAutomaton
from timedni.constraints import TRUE
from timedni.modelfile import load_model

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"

# lines printed at the end of the session by pytest_terminal_summary
ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str):
    ACCEPTANCE_LINES[criterion] = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


_cache = {}


def corpus(name: str):
    """Automaton ``name`` from the models directory."""
    if not _cache:
        for f in sorted(MODELS.glob("*.ta")):
            for n, a in load_model(f).automata.items():
                _cache[n] = a
    return _cache[name]


@pytest.fixture
def model():
    return corpus


def random_nfa(rng: random.Random, max_states=5, low=("a", "b"), high=("h",), density=0.3, controllable=()):
    n = rng.randint(1, max_states)
    acts = list(low) + list(high)
    edges = []
    for s in range(n):
        for act in acts:
            for t in range(n):
                if rng.random() < density / max(1, n - 1) * 1.5:
                    edges.append(Edge(f"s{s}", TRUE, act, frozenset(), f"s{t}"))
    return TimedAutomaton(
        "R",
        tuple(f"s{i}" for i in range(n)),
        "s0",
        (),
        AlphabetSpec(frozenset(low), frozenset(high), frozenset(controllable)),
        tuple(edges),
    )


def random_dfa(rng: random.Random, max_states=4, actions=("a", "b")):
    n = rng.randint(1, max_states)
    edges = []
    for s in range(n):
        for act in actions:
            if rng.random() < 0.6:
                edges.append(Edge(f"d{s}", TRUE, act, frozenset(), f"d{rng.randrange(n)}"))
    return TimedAutomaton(
        "DFA",
        tuple(f"d{i}" for i in range(n)),
        "d0",
        (),
        AlphabetSpec(frozenset(actions), frozenset(), frozenset()),
        tuple(edges),
    )


@pytest.fixture
def rng():
    return random.Random(20240601)
