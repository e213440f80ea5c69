"""
Synthetic labeled corpora with features that encode the labels by rule,
for desk-scale verification of the whole pipeline.

Every turn becomes one audio source whose words tile a fixed-duration
grid (no silences), so word i owns a fixed block of feature frames.
Four channels carry the annotation:

    0  energy    constant 0.5 baseline
    1  boundary  1 over the frames of an IU-initial word, else 0
    2  emphasis  ramp 0 -> 1 over an emphasized word, else 0
    3  contour   over each IU's last word: rise 0 -> 1 for a question,
                 fall 1 -> 0 for a conclusion, level 0.5 for a
                 continuation; 0 elsewhere

plus i.i.d. Gaussian noise everywhere.  The signal margins dwarf the
default noise, so :func:`rule_decode` (the independent inverse of the
encoding rules) recovers the labels exactly, and a small trained model
has a clean target to learn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import (
    Boundary,
    Corpus,
    Emphasis,
    LabelCombination,
    Prototype,
    Source,
    Word,
)
from .model import AudioFeatures

#: Small function-word lexicon; word identity is deliberately
#: uninformative about the labels.
DEFAULT_LEXICON = tuple(
    "the a and to of in it i you we they he she that this was is be not".split()
    + "so but on at for with as said went well now then um uh oh yeah".split()
)

CH_ENERGY, CH_BOUNDARY, CH_EMPHASIS, CH_CONTOUR = range(4)


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters; identical specs yield identical corpora."""

    n_turns: int = 100
    seed: int = 0
    prototype_weights: tuple[float, float, float] = (0.55, 0.40, 0.05)
    emphasis_weights: tuple[float, float] = (0.40, 0.60)  # (emphasized, none)
    ius_per_turn: tuple[int, int] = (2, 4)  # inclusive range
    words_per_iu: tuple[int, int] = (1, 6)
    n_speakers: int = 4
    speaker_switch_prob: float = 0.1
    word_duration_s: float = 0.25
    frame_rate: float = 16.0
    noise: float = 0.05
    lexicon: tuple[str, ...] = DEFAULT_LEXICON

    def __post_init__(self) -> None:
        for name in ("prototype_weights", "emphasis_weights"):
            w = getattr(self, name)
            if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be non-negative and sum to 1")
        if self.n_turns < 1:
            raise ValueError("n_turns must be >= 1")

    @property
    def frames_per_word(self) -> int:
        n = self.word_duration_s * self.frame_rate
        if abs(n - round(n)) > 1e-9 or round(n) < 2:
            raise ValueError("word_duration_s * frame_rate must be an "
                             "integer >= 2 (ramps need at least 2 frames)")
        return int(round(n))


@dataclass(frozen=True)
class SynthResult:
    corpus: Corpus
    features: dict[str, AudioFeatures]  # keyed by source id / audio ref

    @property
    def source_ids(self) -> tuple[str, ...]:
        return tuple(s.source_id for s in self.corpus.sources)


def synth_corpus(spec: SynthSpec) -> SynthResult:
    """Generate a fully labeled corpus and one feature matrix per turn."""
    rng = np.random.default_rng(spec.seed)
    prototypes = tuple(Prototype)
    sources: list[Source] = []
    features: dict[str, AudioFeatures] = {}

    for t in range(spec.n_turns):
        n_ius = int(rng.integers(spec.ius_per_turn[0], spec.ius_per_turn[1] + 1))
        speaker = int(rng.integers(spec.n_speakers))
        words: list[Word] = []
        spans: list[tuple[int, int]] = []
        for _ in range(n_ius):
            if words and rng.random() < spec.speaker_switch_prob:
                speaker = int(rng.integers(spec.n_speakers))
            n_words = int(rng.integers(spec.words_per_iu[0],
                                       spec.words_per_iu[1] + 1))
            proto = prototypes[int(rng.choice(3, p=spec.prototype_weights))]
            start = len(words)
            for j in range(n_words):
                i = start + j
                words.append(Word(
                    text=str(rng.choice(spec.lexicon)),
                    start_s=i * spec.word_duration_s,
                    end_s=(i + 1) * spec.word_duration_s,
                    speaker_id=f"spk{speaker}",
                    boundary=Boundary.B if j == 0 else Boundary.I,
                    prototype=proto,
                    emphasis=(Emphasis.EMPHASIZED
                              if rng.random() < spec.emphasis_weights[0]
                              else Emphasis.NONE),
                ))
            spans.append((start, start + n_words))
        source_id = f"synth-{spec.seed:03d}-{t:05d}"
        sources.append(Source(source_id, tuple(words), tuple(spans)))
        features[source_id] = _render_features(words, spans, spec, rng)

    speakers = tuple(f"spk{i}" for i in range(spec.n_speakers))
    corpus = Corpus(tuple(sources), speakers,
                    {"source": "synthetic", "seed": str(spec.seed)})
    return SynthResult(corpus, features)


def _render_features(words: Sequence[Word], spans: Sequence[tuple[int, int]],
                     spec: SynthSpec, rng: np.random.Generator) -> AudioFeatures:
    k = spec.frames_per_word
    data = rng.normal(0.0, spec.noise, size=(len(words) * k, 4))
    data[:, CH_ENERGY] += 0.5
    ramp = np.linspace(0.0, 1.0, k)
    for i, w in enumerate(words):
        sl = slice(i * k, (i + 1) * k)
        if w.boundary is Boundary.B:
            data[sl, CH_BOUNDARY] += 1.0
        if w.emphasis is Emphasis.EMPHASIZED:
            data[sl, CH_EMPHASIS] += ramp
    for a, b in spans:
        sl = slice((b - 1) * k, b * k)
        proto = words[a].prototype
        if proto is Prototype.REQUEST_FOR_RESPONSE:
            data[sl, CH_CONTOUR] += ramp
        elif proto is Prototype.CONCLUSION:
            data[sl, CH_CONTOUR] += ramp[::-1]
        else:
            data[sl, CH_CONTOUR] += 0.5
    return AudioFeatures(data.astype(np.float32), spec.frame_rate)


def rule_decode(features: AudioFeatures, n_words: int,
                frames_per_word: int) -> list[LabelCombination]:
    """Invert the channel-encoding rules directly (no model involved).

    Independent of the generator's bookkeeping: labels are read back
    from the feature values alone.  Used as the oracle that the
    synthesis and the trained models are checked against.
    """
    if features.n_frames != n_words * frames_per_word:
        raise ValueError(f"{features.n_frames} frames for {n_words} words of "
                         f"{frames_per_word} frames each")
    data = features.data
    k = frames_per_word
    boundaries = []
    emphases = []
    for i in range(n_words):
        sl = slice(i * k, (i + 1) * k)
        boundaries.append(Boundary.B if data[sl, CH_BOUNDARY].mean() > 0.5
                          else Boundary.I)
        emphases.append(Emphasis.EMPHASIZED if data[sl, CH_EMPHASIS].mean() > 0.25
                        else Emphasis.NONE)

    starts = [i for i, b in enumerate(boundaries) if b is Boundary.B]
    if not starts or starts[0] != 0:
        starts = [0] + [s for s in starts if s != 0]
    stops = starts[1:] + [n_words]
    prototypes: list[Prototype] = [Prototype.CONTINUATION] * n_words
    for a, b in zip(starts, stops):
        sl = slice((b - 1) * k, b * k)
        slope = float(data[sl, CH_CONTOUR][-1] - data[sl, CH_CONTOUR][0])
        if slope > 0.5:
            proto = Prototype.REQUEST_FOR_RESPONSE
        elif slope < -0.5:
            proto = Prototype.CONCLUSION
        else:
            proto = Prototype.CONTINUATION
        for i in range(a, b):
            prototypes[i] = proto
    return [LabelCombination(b, p, e)
            for b, p, e in zip(boundaries, prototypes, emphases)]
