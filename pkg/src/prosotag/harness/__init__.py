"""Constrained label-only inference over a pluggable sequence model,
plus the oracle model, synthetic corpus generator, and trainable toy
model used for desk-scale verification."""

from .model import (
    AudioFeatures,
    SequenceModel,
    UniformModel,
    make_oracle_model,
    oracle_for_words,
)
from .decode import constrained_decode, simplify_labels, write_predictions
from .synth import SynthSpec, rule_decode, synth_corpus

__all__ = [
    "AudioFeatures",
    "SequenceModel",
    "UniformModel",
    "make_oracle_model",
    "oracle_for_words",
    "constrained_decode",
    "simplify_labels",
    "write_predictions",
    "SynthSpec",
    "rule_decode",
    "synth_corpus",
]
