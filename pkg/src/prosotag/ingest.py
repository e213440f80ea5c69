"""
Corpus ingestion: transcript normalization, punctuation-proxy IU
segmentation, and assembly of a labeled corpus from time-aligned word
records.

The stages are pure functions over immutable inputs and compose as

    parse_transcript -> normalize_text -> proxy_segment -> ingest_alignment

Punctuation is the segmentation proxy: a maximal punctuation-free word
run becomes one proto-IU and the trailing mark suggests its prototype
("," continuation, "." conclusion, "?" request for response).  The
suggestions are exactly that; unlabeled runs are kept and flagged for
manual review rather than dropped, so audio alignment is preserved.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .core import (
    Boundary,
    Corpus,
    Emphasis,
    EmphasisLevel,
    Prototype,
    Source,
    Word,
)

#: Punctuation handled by the normalizer: kept ({, . ?}), rewritten
#: (-- -> , | ! -> . | ; -> , | : -> ,), or dropped with a warning.
KEPT_PUNCT = {",", ".", "?"}
REWRITE_PUNCT = {"--": ",", "!": ".", ";": ",", ":": ","}
PUNCT_CHARS = ",.?!;:"

#: Proto-IUs at or under this word count are flagged short (the range in
#: which punctuation proxies most often coincide with true IUs).
SHORT_IU_WORDS = 7

_INT_RE = re.compile(r"^\d{1,3}(,\d{3})*$|^\d+$")
_SPEAKER_RE = re.compile(r"^>>([^:]+):\s*(.*)$")


class IngestError(ValueError):
    """Unrecoverable ingestion failure (mismatched or disordered inputs)."""


# ---------------------------------------------------------------------------
# Expansion table
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpansionTable:
    """Case-insensitive chunk -> replacement-words mapping."""

    entries: dict[str, tuple[str, ...]]

    def lookup(self, chunk: str) -> Optional[tuple[str, ...]]:
        return self.entries.get(chunk.lower())

    @property
    def checksum(self) -> str:
        payload = "\n".join(f"{k}\t{' '.join(v)}"
                            for k, v in sorted(self.entries.items()))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_expansion_table(path: Optional[Union[str, Path]] = None) -> ExpansionTable:
    """Load a two-column TSV (pattern, replacement); None = bundled default."""
    if path is None:
        text = resources.files("prosotag").joinpath("data/expansions.tsv") \
            .read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    entries: dict[str, tuple[str, ...]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise IngestError(f"expansion table line {lineno}: expected "
                              f"2 tab-separated columns, got {len(parts)}")
        pattern, replacement = parts
        entries[pattern.strip().lower()] = tuple(replacement.strip().lower().split())
    return ExpansionTable(entries)


_ONES = ("zero one two three four five six seven eight nine ten eleven twelve "
         "thirteen fourteen fifteen sixteen seventeen eighteen nineteen").split()
_TENS = ("", "", "twenty", "thirty", "forty", "fifty",
         "sixty", "seventy", "eighty", "ninety")


def int_to_words(n: int) -> tuple[str, ...]:
    """Spell a non-negative integer up to 10**6 as lowercase words."""
    if n < 0 or n > 10 ** 6:
        raise ValueError(f"{n} outside supported range 0..10^6")
    if n == 10 ** 6:
        return ("one", "million")
    out: list[str] = []
    if n >= 1000:
        out += list(int_to_words(n // 1000)) + ["thousand"]
        n %= 1000
        if n == 0:
            return tuple(out)
    if n >= 100:
        out += [_ONES[n // 100], "hundred"]
        n %= 100
        if n == 0:
            return tuple(out)
    if n < 20:
        out.append(_ONES[n])
    else:
        tens, ones = divmod(n, 10)
        out.append(_TENS[tens] + ("-" + _ONES[ones] if ones else ""))
    return tuple(out)


# ---------------------------------------------------------------------------
# Transcript parsing and normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeakerSpan:
    speaker_id: str
    start: int  # character offsets into RawTranscript.text
    stop: int


@dataclass(frozen=True)
class RawTranscript:
    """Transcript text with original casing/punctuation and speaker spans."""

    text: str
    spans: tuple[SpeakerSpan, ...]


def parse_transcript(text: str, default_speaker: str = "spk0") -> RawTranscript:
    """Parse plain text with ``>>SPEAKER_ID:`` turn headers into spans."""
    pieces: list[str] = []
    spans: list[SpeakerSpan] = []
    speaker = default_speaker
    offset = 0

    def close(chunk: str) -> None:
        nonlocal offset
        if chunk.strip():
            pieces.append(chunk)
            spans.append(SpeakerSpan(speaker, offset, offset + len(chunk)))
            offset += len(chunk)

    buffer: list[str] = []
    for line in text.splitlines():
        m = _SPEAKER_RE.match(line.strip())
        if m:
            close("\n".join(buffer) + ("\n" if buffer else ""))
            buffer = []
            speaker = m.group(1).strip()
            if m.group(2):
                buffer.append(m.group(2))
        else:
            buffer.append(line)
    close("\n".join(buffer))
    return RawTranscript("".join(pieces), tuple(spans))


@dataclass(frozen=True)
class StreamEvent:
    """One normalized word or punctuation event."""

    kind: str  # "word" | "punct"
    value: str
    speaker_id: str


@dataclass
class Warnings:
    """Accumulated non-fatal normalization/segmentation notes."""

    messages: list[str] = field(default_factory=list)

    def add(self, msg: str) -> None:
        self.messages.append(msg)


def normalize_text(
    raw: RawTranscript,
    table: Optional[ExpansionTable] = None,
    warnings: Optional[Warnings] = None,
) -> list[StreamEvent]:
    """Lowercase, expand abbreviations/digits, and canonicalize punctuation.

    ``--`` becomes ``,`` and ``!`` becomes ``.``; colons/semicolons map
    to ``,`` (non-final junctures); punctuation outside {, . ?} is
    dropped with a warning.  Unexpandable tokens (e.g. digits with no
    rule) pass through verbatim with a warning.  Idempotent: normalized
    output re-normalizes to itself.
    """
    table = table or load_expansion_table()
    warnings = warnings if warnings is not None else Warnings()
    events: list[StreamEvent] = []
    for span in raw.spans:
        chunk_text = raw.text[span.start:span.stop]
        for chunk in chunk_text.split():
            events.extend(_normalize_chunk(chunk, span.speaker_id, table, warnings))
    return events


def _normalize_chunk(chunk: str, speaker: str, table: ExpansionTable,
                     warnings: Warnings) -> Iterator[StreamEvent]:
    chunk = chunk.lower()
    if chunk == "--":
        yield StreamEvent("punct", ",", speaker)
        return
    expanded = table.lookup(chunk)
    if expanded is not None:
        for w in expanded:
            yield StreamEvent("word", w, speaker)
        return

    # Split leading/trailing punctuation off the chunk; "--" glued to a
    # word ("said--") also counts as trailing punctuation.
    leading: list[str] = []
    trailing: list[str] = []
    while chunk and chunk[0] in PUNCT_CHARS:
        leading.append(chunk[0])
        chunk = chunk[1:]
    while chunk:
        if chunk.endswith("--"):
            trailing.insert(0, "--")
            chunk = chunk[:-2]
        elif chunk[-1] in PUNCT_CHARS:
            trailing.insert(0, chunk[-1])
            chunk = chunk[:-1]
        else:
            break

    for mark in leading:
        yield from _punct_event(mark, speaker, warnings)
    if chunk:
        yield from _expand_word(chunk, speaker, table, warnings)
    for mark in trailing:
        yield from _punct_event(mark, speaker, warnings)


def _expand_word(token: str, speaker: str, table: ExpansionTable,
                 warnings: Warnings) -> Iterator[StreamEvent]:
    """Expand a punctuation-free token, retrying after symbol stripping.

    Table entries see the token first ("dr." resolves before its dot
    would split off); integers spell out; leftover symbols drop and the
    cleaned token re-enters chunk normalization (it may expose fresh
    punctuation, as in '--"' -> '--').
    """
    expanded = table.lookup(token)
    if expanded is not None:
        for w in expanded:
            yield StreamEvent("word", w, speaker)
        return
    if _INT_RE.match(token):
        n = int(token.replace(",", ""))
        if n <= 10 ** 6:
            for w in int_to_words(n):
                yield StreamEvent("word", w, speaker)
        else:
            warnings.add(f"no expansion rule for number {token!r}; kept verbatim")
            yield StreamEvent("word", token, speaker)
        return
    word = _strip_symbols(token, speaker, warnings)
    if not word:
        return
    if word != token:  # strictly shorter: the mutual recursion terminates
        yield from _normalize_chunk(word, speaker, table, warnings)
    else:
        yield StreamEvent("word", word, speaker)


def _punct_event(mark: str, speaker: str, warnings: Warnings) -> Iterator[StreamEvent]:
    mark = REWRITE_PUNCT.get(mark, mark)
    if mark in KEPT_PUNCT:
        yield StreamEvent("punct", mark, speaker)
    else:
        warnings.add(f"dropped unsupported punctuation {mark!r}")


def _strip_symbols(chunk: str, speaker: str, warnings: Warnings) -> str:
    """Drop non-word symbols (quotes, parens, ...) that survive splitting.

    Word-internal apostrophes and hyphens are legitimate and kept.
    """
    kept = "".join(c for c in chunk if c.isalnum() or c in "'-")
    if kept != chunk:
        dropped = "".join(sorted(set(chunk) - set(kept)))
        warnings.add(f"dropped unsupported punctuation {dropped!r} in {chunk!r}")
    if kept and any(c.isdigit() for c in kept) and not kept.isdigit():
        warnings.add(f"no expansion rule for token {kept!r}; kept verbatim")
    return kept


# ---------------------------------------------------------------------------
# Proxy segmentation
# ---------------------------------------------------------------------------

PUNCT_PROTOTYPE = {
    ",": Prototype.CONTINUATION,
    ".": Prototype.CONCLUSION,
    "?": Prototype.REQUEST_FOR_RESPONSE,
}


@dataclass(frozen=True)
class ProtoIU:
    """A punctuation-delimited word run with its suggested prototype.

    ``suggested_prototype`` is None for runs closed without punctuation
    (end of stream or speaker change); those await manual labeling.
    """

    words: tuple[str, ...]
    suggested_prototype: Optional[Prototype]
    short_flag: bool
    speaker_id: str


def proxy_segment(
    events: Sequence[StreamEvent],
    warnings: Optional[Warnings] = None,
    short_words: int = SHORT_IU_WORDS,
) -> list[ProtoIU]:
    """One proto-IU per maximal punctuation-free word run.

    The trailing punctuation mark suggests the prototype; consecutive
    marks produce empty runs, which are skipped with a warning.  A
    speaker change closes the current run unlabeled (no punctuation
    evidence for its juncture).
    """
    warnings = warnings if warnings is not None else Warnings()
    out: list[ProtoIU] = []
    run: list[str] = []
    run_speaker: Optional[str] = None

    def close(prototype: Optional[Prototype]) -> None:
        nonlocal run, run_speaker
        if run:
            out.append(ProtoIU(tuple(run), prototype,
                               len(run) <= short_words, run_speaker or ""))
        elif prototype is not None:
            warnings.add("consecutive punctuation marks: empty run skipped")
        run = []
        run_speaker = None

    for ev in events:
        if ev.kind == "punct":
            close(PUNCT_PROTOTYPE[ev.value])
        else:
            if run and ev.speaker_id != run_speaker:
                close(None)
            if not run:
                run_speaker = ev.speaker_id
            run.append(ev.value)
    close(None)
    return out


# ---------------------------------------------------------------------------
# Alignment ingestion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentRecord:
    """One time-aligned word from a forced aligner."""

    word: str
    start_s: float
    end_s: float
    speaker_id: str


def read_alignment_jsonl(path: Union[str, Path]) -> list[AlignmentRecord]:
    """Line-delimited ``{word, start_s, end_s, speaker_id}`` records."""
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(AlignmentRecord(obj["word"], float(obj["start_s"]),
                                           float(obj["end_s"]), str(obj["speaker_id"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise IngestError(f"{path}:{lineno}: bad alignment record: {exc}") from None
    return records


def ingest_alignment(
    records: Sequence[AlignmentRecord],
    proto: Sequence[ProtoIU],
    source_id: str,
    annotator_id: str = "",
    table_checksum: str = "",
) -> Corpus:
    """Merge aligned records with proto-IU structure into a corpus.

    The record word sequence must equal the concatenated proto-IU words;
    any text or count divergence is a hard error naming the first
    offending index, as is a non-monotone timestamp.  Words get boundary
    flags from run starts and the runs' suggested prototypes; unlabeled
    runs become review-flagged IU spans.
    """
    proto_words = [(k, i, w) for k, p in enumerate(proto)
                   for i, w in enumerate(p.words)]
    if len(records) != len(proto_words):
        idx = min(len(records), len(proto_words))
        raise IngestError(f"{source_id}: word-count mismatch at index {idx}: "
                          f"{len(records)} aligned records vs "
                          f"{len(proto_words)} transcript words")
    words: list[Word] = []
    spans: list[tuple[int, int]] = []
    review: set[int] = set()
    prev_start = float("-inf")
    for idx, (rec, (k, i, text)) in enumerate(zip(records, proto_words)):
        if rec.word != text:
            raise IngestError(f"{source_id}: word mismatch at index {idx}: "
                              f"aligned {rec.word!r} vs transcript {text!r}")
        if rec.start_s < prev_start:
            raise IngestError(f"{source_id}: non-monotone timestamps at index {idx}: "
                              f"start_s {rec.start_s} < previous {prev_start}")
        if rec.end_s <= rec.start_s:
            raise IngestError(f"{source_id}: non-positive duration at index {idx}")
        prev_start = rec.start_s
        if i == 0:
            spans.append((idx, idx + len(proto[k].words)))
            if proto[k].suggested_prototype is None:
                review.add(k)
        words.append(Word(
            text, rec.start_s, rec.end_s, rec.speaker_id,
            boundary=Boundary.B if i == 0 else Boundary.I,
            prototype=proto[k].suggested_prototype,
        ))
    source = Source(source_id, tuple(words), tuple(spans), frozenset(review))
    speakers = tuple(sorted({w.speaker_id for w in words}))
    provenance = {"source": source_id, "annotator": annotator_id,
                  "expansion_table_sha256": table_checksum}
    return Corpus((source,), speakers, provenance)


# ---------------------------------------------------------------------------
# Annotation statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatsReport:
    """Counts and fractions of speakers, prototypes, and emphasis tags."""

    speaker_ius: dict[str, int]
    prototype_ius: dict[str, int]
    emphasis_words: dict[str, int]
    n_ius: int
    n_words: int

    def render(self) -> str:
        lines = ["(a) IUs per speaker"]
        for spk, n in self.speaker_ius.items():
            lines.append(f"  {spk:<24} {n:>8,} ({_pct(n, self.n_ius)})")
        lines.append(f"  {'Total':<24} {self.n_ius:>8,}")
        lines.append("(b) Prosodic prototypes")
        names = {"cm": "Continuation (comma)", "pd": "Conclusion (period)",
                 "qu": "Request for response (question mark)"}
        for code, n in self.prototype_ius.items():
            lines.append(f"  {names.get(code, code):<38} {n:>8,} ({_pct(n, self.n_ius)})")
        lines.append(f"  {'Total':<38} {self.n_ius:>8,}")
        lines.append("(c) Emphasis tags")
        for tag, n in self.emphasis_words.items():
            lines.append(f"  {tag:<24} {n:>8,} ({_pct(n, self.n_words)})")
        lines.append(f"  {'Total':<24} {self.n_words:>8,}")
        return "\n".join(lines)


def _pct(n: int, total: int) -> str:
    return f"{100.0 * n / total:.2f}%" if total else "n/a"


def annotation_stats(corpus: Corpus) -> StatsReport:
    """Tabulate prototype/emphasis/speaker counts over a labeled corpus.

    Prototypes and speakers are counted per IU, emphasis per word.
    Unlabeled words are an error listing their indices.
    """
    unlabeled = [
        f"{src.source_id}:{i}"
        for src in corpus.sources
        for i, w in enumerate(src.words)
        if w.boundary is None or w.prototype is None or w.emphasis is None
    ]
    if unlabeled:
        shown = ", ".join(unlabeled[:10]) + ("..." if len(unlabeled) > 10 else "")
        raise IngestError(f"{len(unlabeled)} unlabeled words: {shown}")

    speaker_ius: dict[str, int] = {}
    prototype_ius = {p.value: 0 for p in Prototype}
    n_ius = 0
    for src in corpus.sources:
        for a, b in src.spans():
            first = src.words[a]
            speaker_ius[first.speaker_id] = speaker_ius.get(first.speaker_id, 0) + 1
            prototype_ius[first.prototype.value] += 1
            n_ius += 1

    have_levels = any(w.emphasis_level is not None for w in corpus.words())
    if have_levels:
        emphasis_words = {lv.value: 0 for lv in EmphasisLevel}
        for w in corpus.words():
            key = (w.emphasis_level or
                   (EmphasisLevel.NONE if w.emphasis is Emphasis.NONE
                    else EmphasisLevel.PRIMARY)).value
            emphasis_words[key] += 1
    else:
        emphasis_words = {e.value: 0 for e in Emphasis}
        for w in corpus.words():
            emphasis_words[w.emphasis.value] += 1

    return StatsReport(dict(sorted(speaker_ius.items())), prototype_ius,
                       emphasis_words, n_ius, corpus.n_words)


# ---------------------------------------------------------------------------
# Corpus JSONL serialization
# ---------------------------------------------------------------------------

CORPUS_FORMAT_VERSION = 1


def word_to_record(word: Word, source_id: str, review: bool) -> dict:
    return {
        "source": source_id,
        "text": word.text,
        "start_s": word.start_s,
        "end_s": word.end_s,
        "speaker_id": word.speaker_id,
        "boundary": word.boundary.value if word.boundary else None,
        "prototype": word.prototype.value if word.prototype else None,
        "emphasis": word.emphasis.value if word.emphasis else None,
        "emphasis_level": word.emphasis_level.value if word.emphasis_level else None,
        "review": review,
    }


def write_corpus_jsonl(corpus: Corpus, path: Union[str, Path]) -> None:
    """One JSON object per word, plus a ``.manifest.json`` sidecar."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for src in corpus.sources:
            review_words = {i for k, (a, b) in enumerate(src.spans())
                            if k in src.review for i in range(a, b)}
            for i, w in enumerate(src.words):
                fh.write(json.dumps(word_to_record(w, src.source_id,
                                                   i in review_words),
                                    ensure_ascii=False, sort_keys=True) + "\n")
    manifest = {
        "format": "prosotag-corpus",
        "version": CORPUS_FORMAT_VERSION,
        "sources": [s.source_id for s in corpus.sources],
        "speakers": list(corpus.speakers),
        "provenance": dict(corpus.provenance),
    }
    path.with_suffix(path.suffix + ".manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_corpus_jsonl(path: Union[str, Path]) -> Corpus:
    path = Path(path)
    by_source: dict[str, list[tuple[Word, bool]]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            word = Word(
                obj["text"], float(obj["start_s"]), float(obj["end_s"]),
                str(obj["speaker_id"]),
                boundary=Boundary(obj["boundary"]) if obj.get("boundary") else None,
                prototype=Prototype(obj["prototype"]) if obj.get("prototype") else None,
                emphasis=Emphasis(obj["emphasis"]) if obj.get("emphasis") else None,
                emphasis_level=(EmphasisLevel(obj["emphasis_level"])
                                if obj.get("emphasis_level") else None),
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise IngestError(f"{path}:{lineno}: bad word record: {exc}") from None
        by_source.setdefault(str(obj["source"]), []).append(
            (word, bool(obj.get("review"))))

    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    provenance: dict[str, str] = {}
    speakers: Optional[list[str]] = None
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        provenance = dict(manifest.get("provenance", {}))
        speakers = list(manifest.get("speakers", []))

    sources = []
    for sid, rows in by_source.items():
        words = tuple(w for w, _ in rows)
        spans = derive_spans_with_review(words)
        review = frozenset(k for k, (a, b) in enumerate(spans)
                           if any(rows[i][1] for i in range(a, b)))
        sources.append(Source(sid, words, spans, review))
    if speakers is None:
        speakers = sorted({w.speaker_id for s in sources for w in s.words})
    return Corpus(tuple(sources), tuple(speakers), provenance)


def derive_spans_with_review(words: Sequence[Word]) -> tuple[tuple[int, int], ...]:
    """Spans from boundary flags; a word with no flag never opens one."""
    if not words:
        return ()
    starts = [0] + [i for i in range(1, len(words))
                    if words[i].boundary is Boundary.B]
    stops = starts[1:] + [len(words)]
    return tuple(zip(starts, stops))


def merge_corpora(corpora: Iterable[Corpus]) -> Corpus:
    """Union of sources/speakers; provenance keys joined source-wise."""
    sources: list[Source] = []
    speakers: set[str] = set()
    provenance: dict[str, str] = {}
    for c in corpora:
        sources.extend(c.sources)
        speakers.update(c.speakers)
        for k, v in c.provenance.items():
            if k in provenance and provenance[k] != v and v:
                provenance[k] = f"{provenance[k]};{v}"
            elif v:
                provenance[k] = v
    return Corpus(tuple(sources), tuple(sorted(speakers)), provenance)
