"""Non-interference verification and controller synthesis for timed automata."""

from .constraints import Atom, ClockConstraint, TRUE, parse_constraint
from .dbm import Zone
from .model import (
    EPS,
    LAMBDA,
    AlphabetSpec,
    Edge,
    TimedAutomaton,
    TimedWord,
    hide,
    is_deterministic,
    is_dta,
    make_automaton,
    product,
    restrict,
    untime,
    validate,
)
from .modelfile import load_model, parse_model, print_automaton
from .regions import RegionSpace, build_region_graph
from .timed import (
    OutsideDecidableClass,
    build_inclusion_gadget,
    build_monitor_product,
    check_csnni_timed_dta,
    check_snni_timed,
    complete_deterministic,
    solve_safety_game,
    synthesize_csnni_dta,
    synthesize_snni,
)
from .untimed import (
    check_bsnni_untimed,
    check_csnni_untimed,
    check_snni_untimed,
    csnni_cp_untimed,
    determinize,
    language_included,
    snni_cp_untimed,
    snni_csp_untimed,
    weak_bisimilar,
    weak_simulates,
)

__version__ = "0.1.0"
