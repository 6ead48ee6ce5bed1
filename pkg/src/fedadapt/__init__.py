"""Federated recommendation with frozen text encoders and trainable adapters.

The package simulates the full pipeline: text-derived item embeddings, a
globally aggregated bottleneck adapter, per-client personalization heads,
optional differential privacy on uploads, and cross-domain transfer and
cold-start evaluation — all with hand-derived gradients and seeded,
thread-count-invariant determinism.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    FedAdaptError,
    FormatError,
    InsufficientCandidatesError,
    MissingItemError,
    NumericError,
    ParseError,
    ProtocolError,
    ShapeError,
)
from .tfre import EmbeddingTable, load_embedding_table, store_embedding_table

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "EmbeddingTable",
    "FedAdaptError",
    "FormatError",
    "InsufficientCandidatesError",
    "MissingItemError",
    "NumericError",
    "ParseError",
    "ProtocolError",
    "ShapeError",
    "load_embedding_table",
    "store_embedding_table",
    "__version__",
]
