from __future__ import annotations

import pytest

from prosotag.core import (
    Boundary,
    Corpus,
    Emphasis,
    IntonationUnit,
    Prototype,
    Source,
    Turn,
    Word,
)


def make_word(text: str, i: int, speaker: str = "spk0",
              boundary: Boundary = Boundary.I,
              prototype: Prototype = Prototype.CONTINUATION,
              emphasis: Emphasis = Emphasis.NONE,
              dur: float = 0.25) -> Word:
    return Word(text, i * dur, (i + 1) * dur, speaker,
                boundary=boundary, prototype=prototype, emphasis=emphasis)


def make_iu(texts: list[str], start_index: int = 0, speaker: str = "spk0",
            prototype: Prototype = Prototype.CONTINUATION,
            emphasized: set[int] = frozenset(), dur: float = 0.25) -> IntonationUnit:
    words = tuple(
        make_word(t, start_index + j, speaker,
                  boundary=Boundary.B if j == 0 else Boundary.I,
                  prototype=prototype,
                  emphasis=Emphasis.EMPHASIZED if j in emphasized else Emphasis.NONE,
                  dur=dur)
        for j, t in enumerate(texts)
    )
    return IntonationUnit(words, prototype, speaker)


def make_turn(*ius: IntonationUnit, audio_ref: str = "src0") -> Turn:
    return Turn(tuple(ius), audio_ref, ius[-1].end_s - ius[0].start_s)


def corpus_of(ius: list[IntonationUnit], source_id: str = "src0") -> Corpus:
    words = tuple(w for iu in ius for w in iu.words)
    spans = []
    k = 0
    for iu in ius:
        spans.append((k, k + len(iu.words)))
        k += len(iu.words)
    speakers = tuple(sorted({iu.speaker_id for iu in ius}))
    return Corpus((Source(source_id, words, tuple(spans)),), speakers, {})


@pytest.fixture
def two_iu_corpus() -> Corpus:
    return corpus_of([
        make_iu(["i", "went"], 0, prototype=Prototype.CONTINUATION),
        make_iu(["you", "stayed"], 2, prototype=Prototype.CONCLUSION),
    ])
