"""
Agreement and classification metrics for word-level prosody predictions.

All tasks are scored from one input: the per-word (gold, predicted)
label pairs of each decoded turn.  Segmentation and emphasis are binary
word-level tasks; prototype recognition is evaluated per intonation
unit, over the well-identified IUs only (predicted boundaries match the
gold span exactly at both edges with no spurious boundary inside).

Cohen's kappa is chance-corrected agreement

    kappa = (p_o - p_e) / (1 - p_e)

with p_o the observed agreement and p_e the expected agreement from the
marginal products.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .core import Boundary, LabelCombination, Prototype

PROTOTYPE_CLASS_NAMES = {"qu": "Question", "pd": "Period", "cm": "Comma"}


class MetricsError(ValueError):
    """Empty or misaligned inputs to a metric."""


@dataclass(frozen=True)
class LabeledPair:
    """Gold and predicted label for one word of one turn."""

    gold: LabelCombination
    pred: LabelCombination
    index: int
    turn_initial: bool


@dataclass(frozen=True)
class ScoreSet:
    """The score block reported per task."""

    kappa: float
    recall: float
    precision: float
    f1: float
    accuracy: float
    n: int


@dataclass(frozen=True)
class PrototypeReport:
    """Per-IU prototype scores over the well-identified IUs."""

    kappa: float
    accuracy: float
    per_class: dict[str, ScoreSet]
    coverage: float
    first_last_agreement: float
    n_ius: int
    n_well_identified: int


@dataclass(frozen=True)
class MetricsReport:
    segmentation: ScoreSet
    segmentation_wos: ScoreSet
    emphasis: ScoreSet
    prototype: PrototypeReport


# ---------------------------------------------------------------------------
# Core scores
# ---------------------------------------------------------------------------


def cohens_kappa(gold: Sequence, pred: Sequence) -> float:
    """Chance-corrected agreement between two equal-length category lists.

    Returns 1.0 in the degenerate single-category case (p_e = 1 forces
    p_o = 1: both lists are constant on the same category).
    """
    if len(gold) != len(pred):
        raise MetricsError(f"length mismatch: {len(gold)} vs {len(pred)}")
    if not gold:
        raise MetricsError("empty category lists")
    n = len(gold)
    p_o = sum(g == p for g, p in zip(gold, pred)) / n
    gold_counts = Counter(gold)
    pred_counts = Counter(pred)
    p_e = sum(gold_counts[k] * pred_counts.get(k, 0) for k in gold_counts) / (n * n)
    if p_e >= 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def binary_scores(gold: Sequence, pred: Sequence, positive) -> ScoreSet:
    """Kappa plus P/R/F1 (for the positive class) and accuracy."""
    if len(gold) != len(pred):
        raise MetricsError(f"length mismatch: {len(gold)} vs {len(pred)}")
    if not gold:
        raise MetricsError("empty inputs")
    tp = sum(g == positive and p == positive for g, p in zip(gold, pred))
    fp = sum(g != positive and p == positive for g, p in zip(gold, pred))
    fn = sum(g == positive and p != positive for g, p in zip(gold, pred))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    accuracy = sum(g == p for g, p in zip(gold, pred)) / len(gold)
    return ScoreSet(cohens_kappa(gold, pred), recall, precision, f1,
                    accuracy, len(gold))


# ---------------------------------------------------------------------------
# Task metrics
# ---------------------------------------------------------------------------


def segmentation_metrics(pairs: Sequence[LabeledPair],
                         include_first: bool = True) -> ScoreSet:
    """Binary IU-boundary scores over {B, I}.

    ``include_first=False`` is the "wos" variant: each turn's first word
    is dropped before scoring, since a turn start is a predetermined
    boundary and that prediction carries no information.
    """
    kept = pairs if include_first else [p for p in pairs if not p.turn_initial]
    if not kept:
        raise MetricsError("no pairs left to score")
    gold = [p.gold.boundary.value for p in kept]
    pred = [p.pred.boundary.value for p in kept]
    return binary_scores(gold, pred, Boundary.B.value)


def emphasis_metrics(pairs: Sequence[LabeledPair]) -> ScoreSet:
    """Binary word-level emphasis scores over {emphasized, none}."""
    if not pairs:
        raise MetricsError("no pairs to score")
    gold = [p.gold.emphasis.value for p in pairs]
    pred = [p.pred.emphasis.value for p in pairs]
    return binary_scores(gold, pred, "e")


def _split_turns(pairs: Sequence[LabeledPair]) -> list[list[LabeledPair]]:
    turns: list[list[LabeledPair]] = []
    for p in pairs:
        if p.turn_initial or not turns:
            turns.append([])
        turns[-1].append(p)
    return turns


def prototype_eval(pairs: Sequence[LabeledPair]) -> PrototypeReport:
    """Per-IU prototype scores over the well-identified IUs.

    Gold IU spans are derived from gold boundary flags within each turn.
    An IU is well-identified when the predicted boundaries reproduce its
    span exactly: B at its first word, B at the next IU's first word
    (the turn end closes the last IU by construction), and no predicted
    B inside.  The IU's predicted prototype is read from its first and
    last words; on disagreement the last word wins, the terminal contour
    carrying the juncture cue.  The first/last agreement rate is
    reported alongside.
    """
    n_ius = 0
    gold_labels: list[str] = []
    pred_labels: list[str] = []
    agree = 0
    for turn in _split_turns(pairs):
        starts = [i for i, p in enumerate(turn)
                  if p.gold.boundary is Boundary.B]
        if not starts or starts[0] != 0:
            raise MetricsError("turn does not start with a gold B boundary")
        spans = list(zip(starts, starts[1:] + [len(turn)]))
        n_ius += len(spans)
        for a, b in spans:
            if turn[a].pred.boundary is not Boundary.B:
                continue
            if b < len(turn) and turn[b].pred.boundary is not Boundary.B:
                continue
            if any(turn[i].pred.boundary is Boundary.B for i in range(a + 1, b)):
                continue
            first = turn[a].pred.prototype.value
            last = turn[b - 1].pred.prototype.value
            agree += first == last
            gold_labels.append(turn[a].gold.prototype.value)
            pred_labels.append(last if first != last else first)
    if not gold_labels:
        raise MetricsError("no well-identified IU to evaluate")

    per_class = {}
    for code in (p.value for p in Prototype):
        g = [x if x == code else "rest" for x in gold_labels]
        p = [x if x == code else "rest" for x in pred_labels]
        per_class[code] = binary_scores(g, p, code)
    n_eval = len(gold_labels)
    return PrototypeReport(
        kappa=cohens_kappa(gold_labels, pred_labels),
        accuracy=sum(g == p for g, p in zip(gold_labels, pred_labels)) / n_eval,
        per_class=per_class,
        coverage=n_eval / n_ius,
        first_last_agreement=agree / n_eval,
        n_ius=n_ius,
        n_well_identified=n_eval,
    )


def evaluate_predictions(pairs: Sequence[LabeledPair]) -> MetricsReport:
    """All task scores from one flat list of labeled pairs."""
    return MetricsReport(
        segmentation=segmentation_metrics(pairs, include_first=True),
        segmentation_wos=segmentation_metrics(pairs, include_first=False),
        emphasis=emphasis_metrics(pairs),
        prototype=prototype_eval(pairs),
    )


# ---------------------------------------------------------------------------
# Prediction dump input
# ---------------------------------------------------------------------------


def read_predictions(path: Union[str, Path]) -> list[LabeledPair]:
    """Read a decode-harness prediction dump (JSONL, one object per turn)."""
    pairs: list[LabeledPair] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            for row in obj["pairs"]:
                pairs.append(LabeledPair(
                    gold=LabelCombination.from_code(row["gold"]),
                    pred=LabelCombination.from_code(row["pred"]),
                    index=int(row["i"]),
                    turn_initial=int(row["i"]) == 0,
                ))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise MetricsError(f"{path}:{lineno}: bad prediction record: {exc}") \
                from None
    return pairs


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

_METRIC_ROWS = (
    ("Cohen's Kappa", "kappa"),
    ("Recall", "recall"),
    ("Precision", "precision"),
    ("F1-score", "f1"),
    ("Accuracy", "accuracy"),
)


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]],
                 title: str = "") -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows])
              for i in range(len(header))]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.3f}"


def metric_task_table(report: MetricsReport) -> tuple[list[str], list[list[str]]]:
    """Metric x task layout: score rows against the segmentation,
    emphasis, and per-prototype-class columns."""
    header = ["Metric", "Segmentation", "Emphasis"] + \
        [PROTOTYPE_CLASS_NAMES[c] for c in ("qu", "pd", "cm")]
    rows = []
    for label, attr in _METRIC_ROWS:
        row = [label,
               _fmt(getattr(report.segmentation, attr)),
               _fmt(getattr(report.emphasis, attr))]
        for code in ("qu", "pd", "cm"):
            row.append(_fmt(getattr(report.prototype.per_class[code], attr)))
        rows.append(row)
    return header, rows


def kappa_dataset_table(entries: Sequence[tuple[str, str, MetricsReport]],
                        ) -> tuple[list[str], list[list[str]]]:
    """Dataset x model kappa layout (segmentation, wos, emphasis)."""
    header = ["Dataset", "Model", "Segmentation", "Segmentation (wos)", "Emphasis"]
    rows = [[dataset, model,
             _fmt(r.segmentation.kappa),
             _fmt(r.segmentation_wos.kappa),
             _fmt(r.emphasis.kappa)]
            for dataset, model, r in entries]
    return header, rows


def subset_table(entries: Sequence[tuple[str, int, int, MetricsReport]],
                 ) -> tuple[list[str], list[list[str]]]:
    """Speaker-subset layout with turn/speaker counts and task kappas."""
    header = ["Test Set", "#Turns", "#Speakers", "Segmentation",
              "Segmentation (wos)", "Emphasis", "Prototype"]
    rows = [[name, str(n_turns), str(n_speakers),
             _fmt(r.segmentation.kappa), _fmt(r.segmentation_wos.kappa),
             _fmt(r.emphasis.kappa), _fmt(r.prototype.kappa)]
            for name, n_turns, n_speakers, r in entries]
    return header, rows


def model_comparison_table(entries: Sequence[tuple[str, MetricsReport]],
                           ) -> tuple[list[str], list[list[str]]]:
    """Model-size / task-variant kappa layout."""
    header = ["Model", "Segmentation", "Segmentation (wos)", "Emphasis", "Prototype"]
    rows = [[name,
             _fmt(r.segmentation.kappa), _fmt(r.segmentation_wos.kappa),
             _fmt(r.emphasis.kappa), _fmt(r.prototype.kappa)]
            for name, r in entries]
    return header, rows


def write_csv(header: Sequence[str], rows: Sequence[Sequence[str]],
              path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def report_to_dict(report: MetricsReport) -> dict:
    d = asdict(report)
    d["prototype"]["per_class"] = {
        k: asdict(v) if not isinstance(v, dict) else v
        for k, v in report.prototype.per_class.items()
    }
    return d


def render_report(
    report: MetricsReport,
    out_dir: Union[str, Path],
    name: str = "metrics",
    provenance: Optional[dict] = None,
) -> dict[str, Path]:
    """Write the metric-x-task table as CSV and aligned text, plus a
    machine-readable JSON with all scores and provenance."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows = metric_task_table(report)
    paths = {
        "csv": out_dir / f"{name}.csv",
        "txt": out_dir / f"{name}.txt",
        "json": out_dir / f"{name}.json",
    }
    write_csv(header, rows, paths["csv"])
    extra = format_table(
        ["Coverage", "First/last agreement", "Segmentation (wos) kappa"],
        [[_fmt(report.prototype.coverage),
          _fmt(report.prototype.first_last_agreement),
          _fmt(report.segmentation_wos.kappa)]],
    )
    paths["txt"].write_text(format_table(header, rows, title="Scores by task")
                            + "\n" + extra, encoding="utf-8")
    payload = {"scores": report_to_dict(report), "provenance": provenance or {}}
    paths["json"].write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return paths
