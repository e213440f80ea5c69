"""
Shared domain types for word-level prosody annotation.

The atomic unit is the time-aligned :class:`Word`.  Words group into
intonation units (IUs), each carrying one prosodic prototype; IUs group
into model-input :class:`Turn` objects.  All types are immutable after
construction and safe to share across workers.

A word's prosodic annotation is the triple (boundary, prototype,
emphasis).  The three features are stored individually so that a corpus
may be partially annotated (e.g. boundary and prototype suggested from
punctuation, emphasis still pending manual review); the closed 12-way
:class:`LabelCombination` is derived once all three are present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Optional

#: Tolerance for equality checks on second-valued timestamps
#: (forced-alignment outputs are centisecond-scale).
TIME_EPS = 1e-4


class Boundary(str, Enum):
    """Position of a word relative to its intonation unit."""

    B = "b"  # IU-initial
    I = "i"  # IU-internal


class Prototype(str, Enum):
    """Para-syntactic modality of an intonation unit."""

    CONTINUATION = "cm"  # comma-like, non-final juncture
    CONCLUSION = "pd"  # period-like, final juncture
    REQUEST_FOR_RESPONSE = "qu"  # question-like


class Emphasis(str, Enum):
    """Binary word-level information-saliency marking (the model task)."""

    EMPHASIZED = "e"
    NONE = "n"


class EmphasisLevel(str, Enum):
    """Finer-grained emphasis annotation kept for data fidelity.

    ``PRIMARY``/``SECONDARY`` both binarize to :attr:`Emphasis.EMPHASIZED`;
    ``NONE`` (de-emphasis) binarizes to :attr:`Emphasis.NONE`.
    """

    PRIMARY = "primary"
    SECONDARY = "secondary"
    NONE = "none"

    def binarized(self) -> Emphasis:
        return Emphasis.NONE if self is EmphasisLevel.NONE else Emphasis.EMPHASIZED


@dataclass(frozen=True, order=True)
class LabelCombination:
    """The per-word (boundary, prototype, emphasis) triple.

    Exactly 2 x 3 x 2 = 12 distinct values exist; the codec's compact
    vocabulary enumerates them in the order of :meth:`all_combinations`.
    """

    boundary: Boundary
    prototype: Prototype
    emphasis: Emphasis

    @property
    def codes(self) -> tuple[str, str, str]:
        return (self.boundary.value, self.prototype.value, self.emphasis.value)

    @property
    def code(self) -> str:
        """Stable string form, e.g. ``"b-cm-e"`` (used in dumps and reports)."""
        return "-".join(self.codes)

    @classmethod
    def from_code(cls, code: str) -> "LabelCombination":
        try:
            b, p, e = code.split("-")
            return cls(Boundary(b), Prototype(p), Emphasis(e))
        except ValueError as exc:
            raise ValueError(f"not a label-combination code: {code!r}") from exc

    @classmethod
    def all_combinations(cls) -> tuple["LabelCombination", ...]:
        """The 12 combinations in fixed (boundary, prototype, emphasis) order."""
        return tuple(
            cls(b, p, e) for b in Boundary for p in Prototype for e in Emphasis
        )


@dataclass(frozen=True)
class Word:
    """A time-aligned token with speaker identity and prosodic labels.

    ``text`` must be normalized (non-empty, lowercase, no embedded
    whitespace) and ``end_s > start_s``.  Label fields default to None
    (unannotated); :attr:`combo` is available once all three are set.
    """

    text: str
    start_s: float
    end_s: float
    speaker_id: str
    boundary: Optional[Boundary] = None
    prototype: Optional[Prototype] = None
    emphasis: Optional[Emphasis] = None
    emphasis_level: Optional[EmphasisLevel] = None

    @property
    def combo(self) -> Optional[LabelCombination]:
        if self.boundary is None or self.prototype is None or self.emphasis is None:
            return None
        return LabelCombination(self.boundary, self.prototype, self.emphasis)

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def with_labels(
        self,
        boundary: Optional[Boundary] = None,
        prototype: Optional[Prototype] = None,
        emphasis: Optional[Emphasis] = None,
        emphasis_level: Optional[EmphasisLevel] = None,
    ) -> "Word":
        """Copy of this word with the given label fields replaced."""
        return Word(
            self.text, self.start_s, self.end_s, self.speaker_id,
            boundary=boundary, prototype=prototype,
            emphasis=emphasis, emphasis_level=emphasis_level,
        )


@dataclass(frozen=True)
class IntonationUnit:
    """A contiguous word span carrying one prosodic prototype.

    Construction enforces the structural invariants hard (first word B,
    rest I, one speaker, one prototype, strictly increasing times); use
    :func:`validate_corpus` to *report* violations instead of raising.
    """

    words: tuple[Word, ...]
    prototype: Prototype
    speaker_id: str

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("an intonation unit needs at least one word")
        for i, w in enumerate(self.words):
            want = Boundary.B if i == 0 else Boundary.I
            if w.boundary is not want:
                raise ValueError(f"word {i}: boundary {w.boundary} != {want}")
            if w.prototype is not self.prototype:
                raise ValueError(f"word {i}: prototype {w.prototype} != {self.prototype}")
            if w.speaker_id != self.speaker_id:
                raise ValueError(f"word {i}: speaker {w.speaker_id!r} != {self.speaker_id!r}")
            if i and w.start_s < self.words[i - 1].end_s - TIME_EPS:
                raise ValueError(f"word {i} overlaps its predecessor")

    @property
    def start_s(self) -> float:
        return self.words[0].start_s

    @property
    def end_s(self) -> float:
        return self.words[-1].end_s

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Turn:
    """One or more consecutive IUs packaged as a single model input.

    ``flags`` records constraint breaches from the turn compiler
    ("below_min_ius", "oversize"); an empty tuple means all turn
    constraints hold.
    """

    ius: tuple[IntonationUnit, ...]
    audio_ref: str
    duration_s: float
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.ius:
            raise ValueError("a turn needs at least one intonation unit")

    @property
    def words(self) -> tuple[Word, ...]:
        return tuple(w for iu in self.ius for w in iu.words)

    @property
    def start_s(self) -> float:
        return self.ius[0].start_s

    @property
    def end_s(self) -> float:
        return self.ius[-1].end_s

    @property
    def speaker_ids(self) -> tuple[str, ...]:
        """Distinct speakers in order of first appearance."""
        seen: dict[str, None] = {}
        for iu in self.ius:
            seen.setdefault(iu.speaker_id, None)
        return tuple(seen)

    @property
    def max_internal_pause_s(self) -> float:
        gaps = [
            self.ius[i + 1].start_s - self.ius[i].end_s
            for i in range(len(self.ius) - 1)
        ]
        return max(gaps, default=0.0)


@dataclass(frozen=True)
class Source:
    """All words of one audio source, in utterance order.

    ``iu_spans`` are half-open [start, stop) word-index ranges; when
    empty the spans are derived from per-word boundary flags.
    ``review`` lists span indices whose prototype could not be suggested
    automatically and awaits manual annotation.
    """

    source_id: str
    words: tuple[Word, ...]
    iu_spans: tuple[tuple[int, int], ...] = ()
    review: frozenset[int] = frozenset()

    def spans(self) -> tuple[tuple[int, int], ...]:
        """Explicit IU spans if present, else spans derived from boundary flags."""
        if self.iu_spans:
            return self.iu_spans
        return derive_spans(self.words)

    def ius(self) -> tuple[IntonationUnit, ...]:
        """Materialize the IUs of this source (raises if labels are incomplete)."""
        out = []
        for k, (a, b) in enumerate(self.spans()):
            ws = self.words[a:b]
            if k in self.review or ws[0].prototype is None:
                raise ValueError(
                    f"{self.source_id}: IU span {k} [{a},{b}) needs prototype review"
                )
            out.append(IntonationUnit(ws, ws[0].prototype, ws[0].speaker_id))
        return tuple(out)


@dataclass(frozen=True)
class Corpus:
    """A collection of sources plus speaker registry and provenance."""

    sources: tuple[Source, ...]
    speakers: tuple[str, ...]
    provenance: Mapping[str, str] = field(default_factory=dict)

    def words(self) -> Iterator[Word]:
        for src in self.sources:
            yield from src.words

    @property
    def n_words(self) -> int:
        return sum(len(s.words) for s in self.sources)

    def ius(self) -> Iterator[IntonationUnit]:
        for src in self.sources:
            yield from src.ius()


def derive_spans(words: tuple[Word, ...]) -> tuple[tuple[int, int], ...]:
    """Group a word sequence into IU spans on B boundary flags.

    A missing flag or a non-B first word still yields a span (starting at
    word 0) so that validation can point at it; hard structural checks
    live in :class:`IntonationUnit`.
    """
    if not words:
        return ()
    starts = [0]
    for i, w in enumerate(words[1:], start=1):
        if w.boundary is Boundary.B:
            starts.append(i)
    stops = starts[1:] + [len(words)]
    return tuple(zip(starts, stops))


# ---------------------------------------------------------------------------
# Corpus validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One invariant breach, located by source and word/IU index."""

    code: str
    message: str
    source_id: str
    word_index: Optional[int] = None
    iu_index: Optional[int] = None

    def __str__(self) -> str:
        where = self.source_id
        if self.iu_index is not None:
            where += f" iu={self.iu_index}"
        if self.word_index is not None:
            where += f" word={self.word_index}"
        return f"[{self.code}] {where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "corpus OK: no violations"
        return "\n".join(str(v) for v in self.violations)


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every domain invariant and report all breaches.

    Violations are report entries, never exceptions; an empty report is
    equivalent to a well-formed corpus.
    """
    out: list[Violation] = []
    registry = set(corpus.speakers)

    for src in corpus.sources:
        sid = src.source_id
        prev_start = -math.inf
        prev_end = -math.inf
        for i, w in enumerate(src.words):
            if w.end_s <= w.start_s + TIME_EPS:
                out.append(Violation("non-positive duration",
                                     f"end_s {w.end_s} <= start_s {w.start_s}", sid, i))
            if not w.text:
                out.append(Violation("empty text", "word text is empty", sid, i))
            elif w.text != w.text.lower():
                out.append(Violation("not lowercase", f"text {w.text!r}", sid, i))
            if any(c.isspace() for c in w.text):
                out.append(Violation("embedded whitespace", f"text {w.text!r}", sid, i))
            if w.speaker_id not in registry:
                out.append(Violation("unknown speaker",
                                     f"speaker {w.speaker_id!r} not in registry", sid, i))
            if w.start_s < prev_start - TIME_EPS:
                out.append(Violation("non-monotone times",
                                     f"start_s {w.start_s} < previous {prev_start}", sid, i))
            if w.start_s < prev_end - TIME_EPS:
                out.append(Violation("overlapping words",
                                     f"start_s {w.start_s} < previous end {prev_end}", sid, i))
            if w.emphasis_level is not None and w.emphasis is not None:
                if w.emphasis_level.binarized() is not w.emphasis:
                    out.append(Violation("emphasis detail mismatch",
                                         f"level {w.emphasis_level.value} vs "
                                         f"binary {w.emphasis.value}", sid, i))
            prev_start, prev_end = w.start_s, w.end_s

        spans = src.spans()
        covered = sum(b - a for a, b in spans)
        if spans and covered != len(src.words):
            out.append(Violation("span coverage",
                                 f"IU spans cover {covered} of {len(src.words)} words", sid))
        for k, (a, b) in enumerate(spans):
            if b <= a:
                out.append(Violation("empty IU", f"span [{a},{b})", sid, iu_index=k))
                continue
            ws = src.words[a:b]
            if ws[0].boundary is not Boundary.B:
                out.append(Violation("missing B at IU start",
                                     f"boundary {ws[0].boundary}", sid, a, k))
            protos = {w.prototype for w in ws}
            speakers = {w.speaker_id for w in ws}
            for j, w in enumerate(ws[1:], start=1):
                if w.boundary is Boundary.B:
                    out.append(Violation("boundary inside IU",
                                         "B flag on a non-initial word", sid, a + j, k))
            if len(protos) > 1:
                out.append(Violation("mixed prototypes",
                                     f"{sorted(p.value if p else 'none' for p in protos)}",
                                     sid, iu_index=k))
            if len(speakers) > 1:
                out.append(Violation("mixed speakers",
                                     f"{sorted(speakers)}", sid, iu_index=k))
            if k in src.review and ws[0].prototype is not None:
                # Review flag is stale once a prototype has been assigned.
                out.append(Violation("stale review flag",
                                     "span marked for review but prototype set",
                                     sid, iu_index=k))

    return ValidationReport(tuple(out))
