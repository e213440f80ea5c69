"""
The abstract sequence-model interface the decode harness drives, and
two test doubles: a gold-replaying oracle and a uniform-logits model.

A sequence model is anything with a vocabulary, an audio encoder, and a
stepwise text decoder returning one logit per vocabulary entry.  The
constrained decoder treats it as a black box; determinism of
``decode_step`` given (prefix, state) is part of the contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence, Union, runtime_checkable

import numpy as np

from ..codec import (
    FULL_SPACE,
    LabelSpace,
    Scheme,
    Tokenizer,
    Vocabulary,
    build_vocabulary,
    combo_to_tokens,
    word_tokenizer,
)
from ..core import Turn


@dataclass(frozen=True)
class AudioFeatures:
    """Spectrogram-like frame x channel matrix with frame-rate metadata."""

    data: np.ndarray  # (frames, channels) float
    frame_rate: float  # frames per second

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("features contain non-finite values")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.frame_rate


@runtime_checkable
class SequenceModel(Protocol):
    """Audio encoder + stepwise text decoder over a fixed vocabulary."""

    vocab: Vocabulary

    def encode_audio(self, features: AudioFeatures) -> Any:
        """Encode audio once per turn; the result threads into decode_step."""
        ...

    def decode_step(self, prefix: Sequence[int], state: Any) -> np.ndarray:
        """Logits over the full vocabulary for the next token after ``prefix``."""
        ...


class OracleModel:
    """Replays a labeled turn's gold label tokens, regardless of audio.

    decode_step puts +1 logit on the gold token for the current
    position and 0 elsewhere.  Positions are indexed by prefix LENGTH,
    so an injected wrong label earlier in the prefix does not derail
    the remaining gold outputs.
    """

    def __init__(self, vocab: Vocabulary, gold_by_prefix_len: dict[int, int]):
        self.vocab = vocab
        self._gold = gold_by_prefix_len

    def encode_audio(self, features: AudioFeatures) -> None:
        return None

    def decode_step(self, prefix: Sequence[int], state: Any) -> np.ndarray:
        logits = np.zeros(self.vocab.size, dtype=np.float64)
        gold_id = self._gold.get(len(prefix))
        if gold_id is not None:
            logits[gold_id] = 1.0
        return logits


def oracle_for_words(
    words: Sequence,
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
    tokenizer: Tokenizer = word_tokenizer,
) -> OracleModel:
    """Oracle over an explicit fully labeled word sequence."""
    base = [t for w in words for t in tokenizer(w.text)]
    vocab = build_vocabulary(base, scheme, space)
    gold: dict[int, int] = {}
    pos = 1  # BOS occupies prefix position 0
    for word in words:
        block = combo_to_tokens(space.codes_of(word), scheme, space)
        for token in block:
            gold[pos] = vocab.id(token)
            pos += 1
        pos += len(tuple(tokenizer(word.text)))
    return OracleModel(vocab, gold)


def make_oracle_model(
    turn: Turn,
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
    tokenizer: Tokenizer = word_tokenizer,
) -> OracleModel:
    """Oracle for one fully labeled turn.

    Its vocabulary holds the turn's word tokens plus the scheme's label
    tokens; running it under a different scheme trips the constrained
    decoder's vocabulary check.
    """
    return oracle_for_words(turn.words, scheme, space, tokenizer)


class UniformModel:
    """All-zero logits: every choice falls to the lowest-id tie-break."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    def encode_audio(self, features: AudioFeatures) -> None:
        return None

    def decode_step(self, prefix: Sequence[int], state: Any) -> np.ndarray:
        return np.zeros(self.vocab.size, dtype=np.float64)


# ---------------------------------------------------------------------------
# Features directory format
# ---------------------------------------------------------------------------

FEATURES_FORMAT_VERSION = 1


def write_features(features: Mapping[str, AudioFeatures],
                   out_dir: Union[str, Path]) -> None:
    """One .npy matrix per turn plus an index.json with the frame rate.

    The .npy header already records frame count and channel count; the
    format has no timestamps, so identical inputs give identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = {"format": "prosotag-features", "version": FEATURES_FORMAT_VERSION,
             "frame_rate": {}, "files": {}}
    for key in sorted(features):
        fname = f"{key}.npy".replace("/", "_")
        np.save(out_dir / fname, features[key].data)
        index["files"][key] = fname
        index["frame_rate"][key] = features[key].frame_rate
    (out_dir / "index.json").write_text(
        json.dumps(index, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def read_features(in_dir: Union[str, Path]) -> dict[str, AudioFeatures]:
    in_dir = Path(in_dir)
    index = json.loads((in_dir / "index.json").read_text(encoding="utf-8"))
    if index.get("format") != "prosotag-features":
        raise ValueError(f"{in_dir}: not a features directory")
    out = {}
    for key, fname in index["files"].items():
        out[key] = AudioFeatures(np.load(in_dir / fname),
                                 float(index["frame_rate"][key]))
    return out
