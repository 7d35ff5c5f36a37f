"""Quantum embeddability of stochastic matrices under Lindbladian dynamics."""

from .errors import (
    ContractViolation,
    DimensionError,
    DomainError,
    EmbedLabError,
    ResourceGuardError,
    UnsupportedDimension,
    ValidationError,
)
from .lindblad import Lindbladian, Superoperator, channel_at, classical_action
from .optimizer import Parameterization, SearchResult, embed_search
from .stochastic import StochasticMatrix, classify_extreme, theorem2_detect

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "DimensionError",
    "DomainError",
    "EmbedLabError",
    "Lindbladian",
    "Parameterization",
    "ResourceGuardError",
    "SearchResult",
    "StochasticMatrix",
    "Superoperator",
    "UnsupportedDimension",
    "ValidationError",
    "channel_at",
    "classical_action",
    "classify_extreme",
    "embed_search",
    "theorem2_detect",
]
