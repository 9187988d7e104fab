"""ON-OFF privacy for correlated requests from two online sources.

A user alternates between wanting privacy (ON) and not (OFF) while fetching
the latest message of source A or B, with requests following a two-state
Markov chain. Because requests are correlated, OFF-time queries must still
hide the ON-time requests. This package implements the capacity-achieving
randomized query policy, the closed-form rate/converse theory, a seeded
simulator, and an exact enumeration audit that certifies zero leakage.
"""

from ._backend import available as available_backends, name as active_backend
from .analysis import (
    ConverseWitness,
    QueryChain,
    RateCurve,
    converse_min_length,
    converse_min_length_closed_form,
    converse_witness,
    pr_query_ab,
    query_chain,
    rate_curve,
    theoretical_rate,
    write_rate_curve_csv,
)
from .audit import (
    HistoryDistribution,
    HorizonTooLargeError,
    LeakageReport,
    PropositionReport,
    audit_model,
    enumerate_joint,
    leakage,
    oracle_rate,
    probe_table_perturbations,
    verify_propositions,
    verify_query_chain,
)
from .markov import MarkovModel, NonErgodicError, Source, sample_path
from .policy import (
    ClientState,
    Explicit,
    InconsistentHistoryError,
    PolicyTable,
    PrivacyMode,
    Query,
    StepAtZero,
    decode_reference,
    latest_on_time,
    next_query,
    table_for,
)
from .rng import Rng, split_seed
from .server import (
    Answer,
    DecodabilityViolation,
    Message,
    MessageStore,
    OutOfRangeError,
    RateEstimate,
    SessionTrace,
    TraceBatch,
    answer,
    empirical_rate,
    run_session,
    run_sessions,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "ClientState",
    "ConverseWitness",
    "DecodabilityViolation",
    "Explicit",
    "HistoryDistribution",
    "HorizonTooLargeError",
    "InconsistentHistoryError",
    "LeakageReport",
    "MarkovModel",
    "Message",
    "MessageStore",
    "NonErgodicError",
    "OutOfRangeError",
    "PolicyTable",
    "PrivacyMode",
    "PropositionReport",
    "Query",
    "QueryChain",
    "RateCurve",
    "RateEstimate",
    "Rng",
    "SessionTrace",
    "Source",
    "StepAtZero",
    "TraceBatch",
    "active_backend",
    "answer",
    "audit_model",
    "available_backends",
    "converse_min_length",
    "converse_min_length_closed_form",
    "converse_witness",
    "decode_reference",
    "empirical_rate",
    "enumerate_joint",
    "latest_on_time",
    "leakage",
    "next_query",
    "oracle_rate",
    "pr_query_ab",
    "probe_table_perturbations",
    "query_chain",
    "rate_curve",
    "run_session",
    "run_sessions",
    "sample_path",
    "split_seed",
    "table_for",
    "theoretical_rate",
    "verify_propositions",
    "verify_query_chain",
    "write_rate_curve_csv",
]
