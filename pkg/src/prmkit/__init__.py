"""Toolkit for training-data curation, scoring, evaluation and guided search
around two-pass step-level reward models for mathematical reasoning."""

from .core import (
    GoldKind,
    GoldSourceLabel,
    ReasoningTrace,
    StepLabelVector,
    StepScore,
    validate_label_vector,
)
from .errors import (
    MetricUndefinedError,
    ParseError,
    PrmkitError,
    ProtocolError,
    SearchError,
    TransportError,
    UsageError,
    ValidationError,
)
from .scorer import (
    MaskedQuery,
    ScorerBackend,
    build_pass1_query,
    build_pass2_query,
    mock_oracle_backend,
    score_step,
    score_trace,
)
from .template import DEFAULT_TEMPLATE, PromptTemplate

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TEMPLATE",
    "GoldKind",
    "GoldSourceLabel",
    "MaskedQuery",
    "MetricUndefinedError",
    "ParseError",
    "PromptTemplate",
    "PrmkitError",
    "ProtocolError",
    "ReasoningTrace",
    "ScorerBackend",
    "SearchError",
    "StepLabelVector",
    "StepScore",
    "TransportError",
    "UsageError",
    "ValidationError",
    "build_pass1_query",
    "build_pass2_query",
    "mock_oracle_backend",
    "score_step",
    "score_trace",
    "validate_label_vector",
    "__version__",
]
