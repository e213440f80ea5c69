"""
prosotag: word-level prosody tagging toolkit.

Corpus preparation (normalization, punctuation-proxy segmentation,
alignment ingestion), turn compilation, label-token codecs, constrained
label-only decoding against pluggable sequence models, agreement
metrics, and pitch-course analysis.  See the ``prosotag`` CLI for the
end-to-end pipeline.
"""

from .core import (
    Boundary,
    Corpus,
    Emphasis,
    EmphasisLevel,
    IntonationUnit,
    LabelCombination,
    Prototype,
    Source,
    Turn,
    ValidationReport,
    Word,
    validate_corpus,
)
from .codec import Scheme

__version__ = "0.1.0"

__all__ = [
    "Boundary",
    "Corpus",
    "Emphasis",
    "EmphasisLevel",
    "IntonationUnit",
    "LabelCombination",
    "Prototype",
    "Scheme",
    "Source",
    "Turn",
    "ValidationReport",
    "Word",
    "validate_corpus",
    "__version__",
]
