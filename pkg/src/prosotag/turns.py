"""
Turn compilation: greedy left-to-right packing of consecutive IUs into
model-input turns under duration, token, pause, and composition
constraints.

The scan extends the current turn while every constraint still holds
and closes it otherwise, which is deterministic and keeps most natural
turns short.  IUs are never split across turns and every IU lands in
exactly one turn; turns that cannot meet the minimum-IU count are
flagged rather than dropped, as are single IUs that exceed the duration
or token budget on their own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from .core import Corpus, IntonationUnit, Turn, Word

TokenCounter = Callable[[Sequence[Word]], int]


@dataclass(frozen=True)
class TurnParams:
    """Turn-compilation constraints.

    ``max_pause_s`` bounds internal inter-IU silence; ``min_ius`` is the
    composition floor (flagged when unreachable, e.g. singleton
    leftovers); ``max_dur_s``/``max_tokens`` are the model input budget.
    With ``strict_same_speaker_min`` the minimum-IU floor must be met by
    consecutive IUs of a single speaker.
    """

    max_pause_s: float = 1.0
    min_ius: int = 2
    max_dur_s: float = 30.0
    max_tokens: int = 448
    allow_multi_speaker: bool = True
    strict_same_speaker_min: bool = False

    def __post_init__(self) -> None:
        for name in ("max_pause_s", "min_ius", "max_dur_s", "max_tokens"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class CompileLog:
    warnings: list[str] = field(default_factory=list)


def compile_turns(
    corpus: Corpus,
    params: TurnParams = TurnParams(),
    token_counter: Optional[TokenCounter] = None,
    log: Optional[CompileLog] = None,
) -> list[Turn]:
    """Pack each source's IUs into maximal constraint-satisfying turns.

    ``token_counter`` must count encoded tokens for a candidate turn's
    words (labels and specials included, per the active codec scheme);
    None disables the token budget.
    """
    log = log if log is not None else CompileLog()
    turns: list[Turn] = []
    for source in corpus.sources:
        ius = source.ius()
        if not ius:
            continue
        group: list[IntonationUnit] = [ius[0]]
        for iu in ius[1:]:
            if _fits(group, iu, params, token_counter):
                group.append(iu)
            else:
                turns.append(_close(group, source.source_id, params,
                                    token_counter, log))
                group = [iu]
        turns.append(_close(group, source.source_id, params, token_counter, log))
    return turns


def _fits(group: list[IntonationUnit], iu: IntonationUnit, params: TurnParams,
          token_counter: Optional[TokenCounter]) -> bool:
    if iu.start_s - group[-1].end_s > params.max_pause_s:
        return False
    if not params.allow_multi_speaker and iu.speaker_id != group[0].speaker_id:
        return False
    if iu.end_s - group[0].start_s > params.max_dur_s:
        return False
    if token_counter is not None:
        words = [w for g in group for w in g.words] + list(iu.words)
        if token_counter(words) > params.max_tokens:
            return False
    return True


def _close(group: list[IntonationUnit], source_id: str, params: TurnParams,
           token_counter: Optional[TokenCounter], log: CompileLog) -> Turn:
    duration = group[-1].end_s - group[0].start_s
    flags: list[str] = []
    if params.strict_same_speaker_min:
        below_min = _same_speaker_run(group) < params.min_ius
    else:
        below_min = len(group) < params.min_ius
    if below_min:
        flags.append("below_min_ius")
    words = [w for g in group for w in g.words]
    oversize = duration > params.max_dur_s or (
        token_counter is not None and token_counter(words) > params.max_tokens)
    if oversize:
        # Only a lone IU can overflow: the scan never extends past a budget.
        flags.append("oversize")
        log.warnings.append(
            f"{source_id}: single IU at {group[0].start_s:.2f}s exceeds the "
            f"turn budget; emitted with an oversize flag")
    return Turn(tuple(group), source_id, duration, tuple(flags))


def _same_speaker_run(group: Sequence[IntonationUnit]) -> int:
    best = run = 1
    for prev, cur in zip(group, group[1:]):
        run = run + 1 if cur.speaker_id == prev.speaker_id else 1
        best = max(best, run)
    return best


def source_turns(corpus: Corpus) -> list[Turn]:
    """One turn per source, unchecked (for corpora generated as turns)."""
    out = []
    for src in corpus.sources:
        ius = src.ius()
        if ius:
            out.append(Turn(ius, src.source_id, ius[-1].end_s - ius[0].start_s))
    return out


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

DURATION_BINS_S = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


@dataclass(frozen=True)
class TurnStatsReport:
    n_turns: int
    speaker_counts: dict[int, int]  # speakers-per-turn -> turns
    duration_hist: dict[str, int]
    iu_count_hist: dict[int, int]
    flagged: dict[str, int]

    def render(self) -> str:
        lines = [f"turns: {self.n_turns}", "speakers per turn"]
        for k, n in sorted(self.speaker_counts.items()):
            lines.append(f"  {k}: {n} ({100.0 * n / self.n_turns:.1f}%)")
        lines.append("duration (s)")
        for label, n in self.duration_hist.items():
            lines.append(f"  {label:<8} {n}")
        lines.append("IUs per turn")
        for k, n in sorted(self.iu_count_hist.items()):
            lines.append(f"  {k}: {n}")
        if any(self.flagged.values()):
            lines.append("flags")
            for flag, n in sorted(self.flagged.items()):
                lines.append(f"  {flag}: {n}")
        return "\n".join(lines)


def turn_stats(turns: Sequence[Turn]) -> TurnStatsReport:
    """Speaker-count distribution plus duration and IU-count histograms."""
    if not turns:
        raise ValueError("no turns to summarize")
    speaker_counts: dict[int, int] = {}
    duration_hist = {f"<{b:g}": 0 for b in DURATION_BINS_S}
    duration_hist[f">={DURATION_BINS_S[-1]:g}"] = 0
    iu_hist: dict[int, int] = {}
    flagged: dict[str, int] = {}
    for t in turns:
        k = len(t.speaker_ids)
        speaker_counts[k] = speaker_counts.get(k, 0) + 1
        for b in DURATION_BINS_S:
            if t.duration_s < b:
                duration_hist[f"<{b:g}"] += 1
                break
        else:
            duration_hist[f">={DURATION_BINS_S[-1]:g}"] += 1
        iu_hist[len(t.ius)] = iu_hist.get(len(t.ius), 0) + 1
        for flag in t.flags:
            flagged[flag] = flagged.get(flag, 0) + 1
    return TurnStatsReport(len(turns), speaker_counts, duration_hist,
                           iu_hist, flagged)


# ---------------------------------------------------------------------------
# Turn manifest serialization
# ---------------------------------------------------------------------------

TURNS_FORMAT_VERSION = 1


def read_turn_manifest(path: Union[str, Path], corpus: Corpus) -> list[Turn]:
    """Rebuild turns from a manifest against the corpus it was written for."""
    ius: list[IntonationUnit] = []
    for src in corpus.sources:
        ius.extend(src.ius())
    turns = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        a, b = record["iu_range"]
        if not (0 <= a < b <= len(ius)):
            raise ValueError(f"{path}:{lineno}: IU range [{a},{b}) outside corpus "
                             f"({len(ius)} IUs)")
        group = tuple(ius[a:b])
        turns.append(Turn(group, record["source"],
                          group[-1].end_s - group[0].start_s,
                          tuple(record.get("flags", ()))))
    return turns


def write_turn_manifest(
    turns: Sequence[Turn],
    corpus: Corpus,
    params: TurnParams,
    path: Union[str, Path],
    token_counter: Optional[TokenCounter] = None,
) -> None:
    """JSONL of turns with IU index ranges, locators, and check results."""
    iu_offsets: dict[str, int] = {}
    offset = 0
    for src in corpus.sources:
        iu_offsets[src.source_id] = offset
        offset += len(src.spans())
    cursor: dict[str, int] = {sid: 0 for sid in iu_offsets}
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, t in enumerate(turns):
            local = cursor[t.audio_ref]
            cursor[t.audio_ref] = local + len(t.ius)
            n_tokens = token_counter(t.words) if token_counter else None
            record = {
                "turn_id": f"{t.audio_ref}/t{i:05d}",
                "source": t.audio_ref,
                "iu_range": [iu_offsets[t.audio_ref] + local,
                             iu_offsets[t.audio_ref] + local + len(t.ius)],
                "start_s": t.start_s,
                "end_s": t.end_s,
                "duration_s": t.duration_s,
                "n_words": len(t.words),
                "n_tokens": n_tokens,
                "speakers": list(t.speaker_ids),
                "flags": list(t.flags),
                "checks": {
                    "duration_ok": t.duration_s <= params.max_dur_s,
                    "tokens_ok": (n_tokens is None
                                  or n_tokens <= params.max_tokens),
                    "pause_ok": t.max_internal_pause_s <= params.max_pause_s,
                    "min_ius_ok": len(t.ius) >= params.min_ius,
                },
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
