"""Knowledge-preserving concept embeddings (KEEP).

Thin Python layer over the C++ core. Configuration is passed as keyword
arguments using the same field names as the ``keep`` command-line tool.
"""

from ._core import (
    Cooccurrence,
    ConfigError,
    Embedding,
    InformationContent,
    InputError,
    KeepError,
    NumericalError,
    Ontology,
    RollUpMap,
    Synthetic,
    WalkCorpus,
    build_cooccurrence,
    generate_synthetic,
    generate_walks,
    impact_assessment,
    intrinsic_discrimination,
    train_glove,
    train_keep,
    train_sgns,
    wilcoxon_signed_rank,
)

__version__ = "0.3.0"

__all__ = [
    "Cooccurrence",
    "ConfigError",
    "Embedding",
    "InformationContent",
    "InputError",
    "KeepError",
    "NumericalError",
    "Ontology",
    "RollUpMap",
    "Synthetic",
    "WalkCorpus",
    "build_cooccurrence",
    "generate_synthetic",
    "generate_walks",
    "impact_assessment",
    "intrinsic_discrimination",
    "train_glove",
    "train_keep",
    "train_sgns",
    "wilcoxon_signed_rank",
]
