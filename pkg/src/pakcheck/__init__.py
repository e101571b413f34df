"""Exact analysis of probabilistic constraints and posterior beliefs in
finite purely probabilistic systems."""

from .analysis import (
    AnalysisReport,
    Constraint,
    Verdict,
    check_constraint,
    check_local_state_independence,
    is_deterministic_action,
    is_proper,
    parse_constraint,
    verify_expectation,
    verify_pak,
    verify_sometimes,
    verify_sufficiency,
)
from .belief import (
    BeliefProfile,
    belief_at,
    belief_profile,
    expected_belief,
    success_probability,
    threshold_measure,
)
from .facts import (
    FALSE,
    TRUE,
    Fact,
    FactSyntaxError,
    ImproperActionError,
    UnknownIdentifierError,
    at_action,
    at_state,
    bind,
    holds_at,
    is_past_based,
    is_run_fact,
    occurs,
    parse_fact,
    performed,
    render,
    runs_satisfying,
)
from .model import (
    GlobalState,
    InvalidTreeError,
    LocalState,
    NullConditionError,
    PakError,
    PpsTree,
    Run,
    TreeBuilder,
    conditional_measure,
    enumerate_runs,
    measure,
    validate_tree,
)
from .modelio import ModelFormatError, load_model, save_model
from .protocol import (
    ProtocolError,
    ProtocolSpec,
    build_counterexample,
    build_tree,
    builtin_fig1,
    builtin_fs,
    builtin_fs_refrain,
)
from .randomized import RandomPpsParams, random_facts, random_pps

__version__ = "0.1.0"
