"""
Constrained label-only inference.

The decoder walks the transcript word by word: at each label position it
queries the model, masks the logits down to the tokens the label grammar
allows there, takes the argmax, then force-feeds the word's own tokens
into the prefix.  Word tokens are never predicted and no token outside
the active label vocabulary can ever be emitted.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..codec import (
    FULL_SPACE,
    LabelSpace,
    Scheme,
    Tokenizer,
    decode_grammar,
    tokens_to_combo,
    word_tokenizer,
)
from ..core import Corpus, LabelCombination, Source, Turn, Word
from .model import AudioFeatures, SequenceModel


class DecodeError(RuntimeError):
    """Model/vocabulary mismatch or non-finite model output."""


def constrained_decode(
    model: SequenceModel,
    features: Optional[AudioFeatures],
    words: Sequence[str],
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
    tokenizer: Tokenizer = word_tokenizer,
) -> list:
    """Predict one label per word, drawing label tokens only.

    Ties break toward the lowest token id.  Returns
    :class:`LabelCombination` objects for the full label space and bare
    value codes for a simplex space; an empty word list yields [].
    """
    if not words:
        return []
    vocab = model.vocab
    grammar = decode_grammar(scheme, space)
    missing = sorted({t for slot in grammar for t in slot} - set(vocab.tokens))
    if missing:
        raise DecodeError(
            f"model vocabulary lacks {scheme.value} label tokens: {missing}")
    # ascending ids per slot so argmax's first-max behavior realizes the
    # lowest-token-id tie-break even when base tokens collide with
    # label pieces (possible under the raw scheme)
    slot_ids = [np.array(sorted(vocab.id(t) for t in slot)) for slot in grammar]

    state = model.encode_audio(features) if features is not None else None
    prefix: list[int] = [vocab.bos_id]
    labels = []
    for word in words:
        block: list[str] = []
        for slot, ids in zip(grammar, slot_ids):
            logits = np.asarray(model.decode_step(prefix, state))
            if not np.isfinite(logits[ids]).all():
                raise DecodeError(f"non-finite logits at prefix length {len(prefix)}")
            pick = ids[int(np.argmax(logits[ids]))]
            block.append(vocab.tokens[pick])
            prefix.append(int(pick))
        labels.append(tokens_to_combo(block, scheme, space))
        prefix.extend(vocab.ids(tuple(tokenizer(word))))
    return labels


def decode_turn(
    model: SequenceModel,
    turn: Turn,
    features: Optional[AudioFeatures],
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
    tokenizer: Tokenizer = word_tokenizer,
) -> list:
    """Convenience wrapper taking transcript words from the turn itself."""
    return constrained_decode(model, features, [w.text for w in turn.words],
                              scheme, space, tokenizer)


# ---------------------------------------------------------------------------
# Task projection
# ---------------------------------------------------------------------------


def simplify_labels(corpus: Corpus, task: str) -> Corpus:
    """Project each word's labels down to one feature for a simplex task.

    ``task`` is "boundary", "prototype", or "emphasis"; the other two
    features are cleared.  IU spans are retained so unit structure stays
    recoverable even when boundary flags are projected away.
    """
    if task not in ("boundary", "prototype", "emphasis"):
        raise ValueError(f"unknown task {task!r}")
    sources = []
    for src in corpus.sources:
        spans = src.spans()
        words = tuple(
            w.with_labels(
                boundary=w.boundary if task == "boundary" else None,
                prototype=w.prototype if task == "prototype" else None,
                emphasis=w.emphasis if task == "emphasis" else None,
                emphasis_level=w.emphasis_level if task == "emphasis" else None,
            )
            for w in src.words
        )
        sources.append(Source(src.source_id, words, spans, src.review))
    return Corpus(tuple(sources), corpus.speakers, dict(corpus.provenance))


# ---------------------------------------------------------------------------
# Prediction dumps
# ---------------------------------------------------------------------------

PREDICTIONS_FORMAT_VERSION = 1


def write_predictions(
    entries: Sequence[tuple[str, Turn, Sequence[LabelCombination]]],
    path: Union[str, Path],
) -> None:
    """JSONL, one object per turn: gold and predicted combo per word.

    This dump is the metrics module's sole input.
    """
    with Path(path).open("w", encoding="utf-8") as fh:
        for turn_id, turn, preds in entries:
            words: Sequence[Word] = turn.words
            if len(preds) != len(words):
                raise ValueError(f"{turn_id}: {len(preds)} predictions for "
                                 f"{len(words)} words")
            rows = []
            for i, (w, p) in enumerate(zip(words, preds)):
                gold = w.combo
                if gold is None:
                    raise ValueError(f"{turn_id}: word {i} has no gold labels")
                rows.append({"i": i, "gold": gold.code, "pred": p.code})
            fh.write(json.dumps({"turn_id": turn_id, "pairs": rows},
                                ensure_ascii=False, sort_keys=True) + "\n")
