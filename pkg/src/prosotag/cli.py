"""
Command-line pipeline: ingestion -> turn compilation -> encoding ->
training/decoding -> evaluation -> pitch analysis.

Every subcommand reads the declared outputs of earlier stages, writes
its module's output format, and drops a run manifest (config hash,
input checksums, format versions) next to its outputs.  A YAML config
file can predefine any option; command-line flags override it.  Outputs
are deterministic given config + seed, manifest timestamps excepted.

Exit codes: 0 success, 1 input/validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import yaml

from . import __version__
from .codec import (
    Scheme,
    build_vocabulary,
    encode_turn,
    sequence_token_counter,
    space_for,
)
from .core import Corpus, Prototype, validate_corpus
from .harness.decode import (
    DecodeError,
    constrained_decode,
    simplify_labels,
    write_predictions,
)
from .harness.model import oracle_for_words, read_features, write_features
from .harness.synth import SynthSpec, synth_corpus
from .harness.toy import ToyConfig, ToyModel, train_toy
from .ingest import (
    IngestError,
    ProtoIU,
    StreamEvent,
    Warnings,
    annotation_stats,
    ingest_alignment,
    load_expansion_table,
    merge_corpora,
    normalize_text,
    parse_transcript,
    proxy_segment,
    read_alignment_jsonl,
    read_corpus_jsonl,
    write_corpus_jsonl,
)
from .metrics import (
    MetricsError,
    MetricsReport,
    emphasis_metrics,
    prototype_eval,
    read_predictions,
    render_report,
    segmentation_metrics,
)
from .pitch import (
    PitchError,
    aggregate_curves,
    group_curves,
    iu_curve,
    read_pitch_file,
    speaker_medians,
    write_curves_csv,
)
from .turns import (
    TurnParams,
    compile_turns,
    read_turn_manifest,
    source_turns,
    turn_stats,
    write_turn_manifest,
)

FORMAT_VERSIONS = {
    "corpus": 1,
    "events": 1,
    "proto-ius": 1,
    "turn-manifest": 1,
    "vocabulary": 1,
    "encoded-sequences": 1,
    "features": 1,
    "predictions": 1,
    "metrics-report": 1,
    "pitch-curves": 1,
}

INPUT_ERRORS = (IngestError, MetricsError, PitchError, DecodeError,
                ValueError, KeyError, FileNotFoundError, NotADirectoryError)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Config and manifests
# ---------------------------------------------------------------------------


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    obj = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise IngestError(f"{path}: config must be a mapping")
    return obj


def _cfg(args: argparse.Namespace, key: str, default=None):
    """Flag value if set, else config-file value, else default."""
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return args.config_data.get(key, default)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                        inputs: Iterable[Path]) -> None:
    settings = {k: v for k, v in vars(args).items()
                if k not in ("func", "config_data") and v is not None}
    payload = {
        "command": command,
        "settings": {k: str(v) for k, v in sorted(settings.items())},
        "config_sha256": hashlib.sha256(
            json.dumps(settings, sort_keys=True, default=str).encode()).hexdigest(),
        "inputs": {str(p): _sha256(p) for p in sorted(set(inputs))
                   if p.is_file()},
        "versions": {"prosotag": __version__, **FORMAT_VERSIONS},
        "created_unix": int(time.time()),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"run_{command.replace('-', '_')}.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _print_warnings(warnings: Warnings) -> None:
    for msg in warnings.messages:
        print(f"warning: {msg}", file=sys.stderr)


def _load_corpus(args: argparse.Namespace) -> Corpus:
    path = _cfg(args, "corpus")
    if not path:
        raise IngestError("no corpus given (flag --corpus or config key 'corpus')")
    return read_corpus_jsonl(path)


def _turns_for(args: argparse.Namespace, corpus: Corpus):
    manifest = _cfg(args, "turns")
    if manifest:
        return read_turn_manifest(manifest, corpus)
    return source_turns(corpus)


def _turn_params(args: argparse.Namespace) -> TurnParams:
    section = args.config_data.get("turn_params", {})

    def pick(key, default):
        value = getattr(args, key, None)
        return value if value is not None else section.get(key, default)

    return TurnParams(
        max_pause_s=float(pick("max_pause_s", 1.0)),
        min_ius=int(pick("min_ius", 2)),
        max_dur_s=float(pick("max_dur_s", 30.0)),
        max_tokens=int(pick("max_tokens", 448)),
        allow_multi_speaker=bool(pick("allow_multi_speaker", True)),
        strict_same_speaker_min=bool(pick("strict_same_speaker_min", False)),
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_normalize(args: argparse.Namespace) -> int:
    table = load_expansion_table(_cfg(args, "table"))
    raw = parse_transcript(Path(args.transcript).read_text(encoding="utf-8"))
    warnings = Warnings()
    events = normalize_text(raw, table, warnings)
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps({"kind": ev.kind, "value": ev.value,
                                 "speaker_id": ev.speaker_id},
                                ensure_ascii=False, sort_keys=True) + "\n")
    _print_warnings(warnings)
    _write_run_manifest(out.parent, "normalize", args, [Path(args.transcript)])
    print(f"wrote {len(events)} events to {out}")
    return 0


def _read_events(path: Path) -> list[StreamEvent]:
    events = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            events.append(StreamEvent(obj["kind"], obj["value"], obj["speaker_id"]))
    return events


def cmd_segment(args: argparse.Namespace) -> int:
    events = _read_events(Path(args.events))
    warnings = Warnings()
    proto = proxy_segment(events, warnings)
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for p in proto:
            fh.write(json.dumps({
                "words": list(p.words),
                "suggested_prototype": (p.suggested_prototype.value
                                        if p.suggested_prototype else None),
                "short_flag": p.short_flag,
                "speaker_id": p.speaker_id,
            }, ensure_ascii=False, sort_keys=True) + "\n")
    _print_warnings(warnings)
    _write_run_manifest(out.parent, "segment", args, [Path(args.events)])
    n_short = sum(p.short_flag for p in proto)
    print(f"wrote {len(proto)} proto-IUs ({n_short} short) to {out}")
    return 0


def _read_proto(path: Path) -> list[ProtoIU]:
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            proto = obj["suggested_prototype"]
            out.append(ProtoIU(tuple(obj["words"]),
                               Prototype(proto) if proto else None,
                               bool(obj["short_flag"]),
                               obj.get("speaker_id", "")))
    return out


def cmd_ingest(args: argparse.Namespace) -> int:
    alignment_paths = [Path(p) for p in args.alignments]
    proto_paths = [Path(p) for p in args.proto]
    if len(alignment_paths) != len(proto_paths):
        raise IngestError(f"{len(alignment_paths)} alignment files vs "
                          f"{len(proto_paths)} proto-IU files")
    table = load_expansion_table(_cfg(args, "table"))
    corpora = []
    for apath, ppath in zip(sorted(alignment_paths), sorted(proto_paths)):
        records = read_alignment_jsonl(apath)
        proto = _read_proto(ppath)
        corpora.append(ingest_alignment(records, proto, apath.stem,
                                        annotator_id=args.annotator or "",
                                        table_checksum=table.checksum))
    corpus = merge_corpora(corpora)
    report = validate_corpus(corpus)
    if not report.ok:
        print(report, file=sys.stderr)
    out = Path(args.out)
    write_corpus_jsonl(corpus, out)
    _write_run_manifest(out.parent, "ingest", args,
                        alignment_paths + proto_paths)
    print(f"wrote corpus of {corpus.n_words} words, "
          f"{sum(len(s.spans()) for s in corpus.sources)} IUs to {out}")
    return 0


def cmd_compile_turns(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    params = _turn_params(args)
    scheme = Scheme(_cfg(args, "scheme", "compact"))
    counter = sequence_token_counter(scheme)
    turns = compile_turns(corpus, params, counter)
    out = Path(args.out)
    write_turn_manifest(turns, corpus, params, out, counter)
    _write_run_manifest(out.parent, "compile-turns", args, [Path(_cfg(args, "corpus"))])
    flagged = sum(1 for t in turns if t.flags)
    print(f"wrote {len(turns)} turns ({flagged} flagged) to {out}")
    return 0


def cmd_sweep_turns(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    scheme = Scheme(_cfg(args, "scheme", "compact"))
    counter = sequence_token_counter(scheme)
    pauses = [float(x) for x in args.max_pause.split(",")]
    min_ius = [int(x) for x in args.min_ius.split(",")]
    multi = [x.strip().lower() in ("true", "1", "yes")
             for x in args.allow_multi_speaker.split(",")]
    rows = []
    for pause in pauses:
        for mi in min_ius:
            for ms in multi:
                params = TurnParams(max_pause_s=pause, min_ius=mi,
                                    allow_multi_speaker=ms)
                turns = compile_turns(corpus, params, counter)
                stats = turn_stats(turns)
                single = stats.speaker_counts.get(1, 0)
                rows.append([f"{pause:g}", str(mi), str(ms).lower(),
                             str(stats.n_turns),
                             f"{100.0 * single / stats.n_turns:.1f}%",
                             str(sum(stats.flagged.values())),
                             f"{sum(t.duration_s for t in turns) / len(turns):.2f}"])
    header = ["max_pause_s", "min_ius", "multi_speaker", "turns",
              "single_speaker", "flagged", "mean_dur_s"]
    from .metrics import format_table, write_csv
    text = format_table(header, rows, title="Turn-compilation sweep")
    print(text, end="")
    if args.out:
        write_csv(header, rows, args.out)
        _write_run_manifest(Path(args.out).parent, "sweep-turns", args,
                            [Path(_cfg(args, "corpus"))])
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    scheme = Scheme(_cfg(args, "scheme", "compact"))
    space = space_for(_cfg(args, "task"))
    turns = _turns_for(args, corpus)
    base = sorted({w.text for w in corpus.words()})
    vocab = build_vocabulary(base, scheme, space)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab.save(out_dir / "vocab.json")
    with (out_dir / "encoded.jsonl").open("w", encoding="utf-8") as fh:
        for i, turn in enumerate(turns):
            seq = encode_turn(turn, scheme, space=space)
            fh.write(json.dumps({
                "turn_id": f"{turn.audio_ref}/t{i:05d}",
                "token_ids": vocab.ids(seq.tokens),
                "n_tokens": seq.token_count,
            }, sort_keys=True) + "\n")
    _write_run_manifest(out_dir, "encode", args, [Path(_cfg(args, "corpus"))])
    print(f"encoded {len(turns)} turns with a {vocab.size}-token "
          f"{scheme.value} vocabulary into {out_dir}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    section = args.config_data.get("synth", {})

    def pick(key, default):
        value = getattr(args, key, None)
        return value if value is not None else section.get(key, default)

    spec = SynthSpec(
        n_turns=int(pick("n_turns", 100)),
        seed=int(_cfg(args, "seed", 0)),
        prototype_weights=tuple(section.get("prototype_weights",
                                            (0.55, 0.40, 0.05))),
        emphasis_weights=tuple(section.get("emphasis_weights", (0.40, 0.60))),
    )
    result = synth_corpus(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_corpus_jsonl(result.corpus, out_dir / "corpus.jsonl")
    write_features(result.features, out_dir / "features")
    _write_run_manifest(out_dir, "synth", args, [])
    print(f"wrote {spec.n_turns} synthetic turns (seed {spec.seed}) to {out_dir}")
    return 0


def cmd_train_toy(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    features = read_features(Path(args.features))
    scheme = Scheme(_cfg(args, "scheme", "compact"))
    task = _cfg(args, "task")
    if task:
        corpus = simplify_labels(corpus, task)
    section = args.config_data.get("toy", {})
    kwargs = {}
    for field in ("d_model", "n_heads", "enc_layers", "dec_layers", "ffn_dim",
                  "max_epochs", "patience", "batch_tokens"):
        value = getattr(args, field, None)
        if value is None:
            value = section.get(field)
        if value is not None:
            kwargs[field] = int(value)
    for field in ("lr", "eval_fraction", "dropout"):
        value = getattr(args, field, None)
        if value is None:
            value = section.get(field)
        if value is not None:
            kwargs[field] = float(value)
    if args.label_loss_only or section.get("label_loss_only"):
        kwargs["label_loss_only"] = True
    kwargs["seed"] = int(_cfg(args, "seed", 0))
    config = ToyConfig(**kwargs)
    model, log = train_toy(config, corpus, features, scheme, task)
    out_dir = Path(args.out_dir)
    model.save(out_dir)
    (out_dir / "train_log.json").write_text(
        json.dumps({"train_loss": log.train_loss, "eval_loss": log.eval_loss,
                    "best_epoch": log.best_epoch,
                    "stopped_epoch": log.stopped_epoch},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_manifest(out_dir, "train-toy", args, [Path(_cfg(args, "corpus"))])
    print(f"trained {config.max_epochs}-epoch budget, stopped at epoch "
          f"{log.stopped_epoch} (best {log.best_epoch}, "
          f"eval loss {log.best_eval:.4f}); checkpoint in {out_dir}")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    scheme = Scheme(_cfg(args, "scheme", "compact"))
    task = _cfg(args, "task")
    space = space_for(task)
    if task:
        corpus = simplify_labels(corpus, task)
        # Simplex corpora carry one feature only, so IU/turn structure is
        # not materializable; decode each source's word sequence as-is.
        units = [(src.source_id, src.words) for src in corpus.sources]
    else:
        units = [(f"{t.audio_ref}/t{i:05d}", t.words)
                 for i, t in enumerate(_turns_for(args, corpus))]
    features = read_features(Path(args.features)) if args.features else {}
    model_arg = _cfg(args, "model", "oracle")

    if model_arg == "oracle":
        def run(unit):
            unit_id, words = unit
            oracle = oracle_for_words(words, scheme, space)
            return constrained_decode(oracle, None, [w.text for w in words],
                                      scheme, space)
    else:
        toy = ToyModel.load(model_arg)
        if toy.scheme is not scheme:
            raise DecodeError(f"checkpoint was trained with scheme "
                              f"{toy.scheme.value}, requested {scheme.value}")

        def run(unit):
            unit_id, words = unit
            source_id = unit_id.rsplit("/", 1)[0] if task is None else unit_id
            feats = features.get(source_id)
            if feats is None:
                raise DecodeError(f"no features for source {source_id!r}")
            return constrained_decode(toy, feats, [w.text for w in words],
                                      scheme, space)

    preds = _pmap(run, units, int(args.jobs))
    out = Path(args.out)
    if task:
        _write_simplex_predictions(units, preds, task, out)
    else:
        entries = [(unit_id, _WordsView(words), p)
                   for (unit_id, words), p in zip(units, preds)]
        write_predictions(entries, out)
    inputs = [Path(_cfg(args, "corpus"))]
    _write_run_manifest(out.parent, "decode", args, inputs)
    print(f"decoded {len(units)} turns ({scheme.value}, "
          f"{task or 'full'} labels) to {out}")
    return 0


class _WordsView:
    """Duck-typed stand-in exposing only the words a dump writer needs."""

    def __init__(self, words):
        self.words = words


def _write_simplex_predictions(units, preds, task: str, out: Path) -> None:
    """Single-task dumps carry bare value codes instead of combo codes."""
    with out.open("w", encoding="utf-8") as fh:
        for (unit_id, words), pred in zip(units, preds):
            rows = []
            for j, (w, p) in enumerate(zip(words, pred)):
                gold = getattr(w, task)
                if gold is None:
                    raise ValueError(f"{unit_id} word {j}: no gold {task} label")
                rows.append({"i": j, "gold": gold.value, "pred": p})
            fh.write(json.dumps({"turn_id": unit_id, "task": task,
                                 "pairs": rows},
                                ensure_ascii=False, sort_keys=True) + "\n")


def cmd_evaluate(args: argparse.Namespace) -> int:
    path = Path(args.predictions)
    first_line = ""
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                first_line = line
                break
    task = json.loads(first_line).get("task") if first_line else None
    out_dir = Path(args.out_dir)
    if task:
        report_paths = _evaluate_simplex(path, task, out_dir)
    else:
        pairs = read_predictions(path)
        seg = segmentation_metrics(pairs, include_first=not args.wos)
        report = MetricsReport(
            segmentation=seg,
            segmentation_wos=segmentation_metrics(pairs, include_first=False),
            emphasis=emphasis_metrics(pairs),
            prototype=prototype_eval(pairs),
        )
        provenance = {"predictions": str(path), "wos": bool(args.wos),
                      "predictions_sha256": _sha256(path)}
        report_paths = render_report(report, out_dir, provenance=provenance)
        print(f"segmentation kappa {report.segmentation.kappa:.3f} "
              f"(wos {report.segmentation_wos.kappa:.3f}), "
              f"emphasis {report.emphasis.kappa:.3f}, "
              f"prototype {report.prototype.kappa:.3f} "
              f"@ coverage {report.prototype.coverage:.3f}")
    _write_run_manifest(out_dir, "evaluate", args, [path])
    print(f"reports in {out_dir}: " + ", ".join(
        p.name for p in report_paths.values()))
    return 0


def _evaluate_simplex(path: Path, task: str, out_dir: Path) -> dict[str, Path]:
    from .metrics import binary_scores, cohens_kappa, format_table, write_csv
    gold, pred = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            for row in obj["pairs"]:
                gold.append(row["gold"])
                pred.append(row["pred"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if task in ("boundary", "emphasis"):
        positive = "b" if task == "boundary" else "e"
        scores = binary_scores(gold, pred, positive)
        header = ["Metric", task.capitalize()]
        rows = [["Cohen's Kappa", f"{scores.kappa:.3f}"],
                ["Recall", f"{scores.recall:.3f}"],
                ["Precision", f"{scores.precision:.3f}"],
                ["F1-score", f"{scores.f1:.3f}"],
                ["Accuracy", f"{scores.accuracy:.3f}"]]
        payload = {"task": task, "scores": asdict(scores)}
    else:
        kappa = cohens_kappa(gold, pred)
        acc = sum(g == p for g, p in zip(gold, pred)) / len(gold)
        header = ["Metric", "Prototype (word-level)"]
        rows = [["Cohen's Kappa", f"{kappa:.3f}"], ["Accuracy", f"{acc:.3f}"]]
        payload = {"task": task, "scores": {"kappa": kappa, "accuracy": acc}}
    paths = {"csv": out_dir / "metrics.csv", "txt": out_dir / "metrics.txt",
             "json": out_dir / "metrics.json"}
    write_csv(header, rows, paths["csv"])
    paths["txt"].write_text(format_table(header, rows,
                                         title=f"Single task: {task}"),
                            encoding="utf-8")
    paths["json"].write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    print(format_table(header, rows), end="")
    return paths


def cmd_pitch_curves(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    group_by = tuple(g.strip().replace("-", "_")
                     for g in args.group_by.split(",") if g.strip())
    sources = {s.source_id: s for s in corpus.sources}
    paths = [Path(p) for p in args.pitch]

    def load(path: Path):
        return read_pitch_file(path, source_id=path.stem)

    raw_tracks = _pmap(load, paths, int(args.jobs))
    speaker_tracks = []
    ius_with_tracks = []
    for track in raw_tracks:
        src = sources.get(track.source_id)
        if src is None:
            raise PitchError(f"pitch file {track.source_id!r} matches no "
                             f"corpus source")
        for iu in src.ius():
            sel = (track.times >= iu.start_s - 1e-9) & \
                  (track.times <= iu.end_s + 1e-9)
            speaker_tracks.append(
                type(track)(track.times[sel], track.f0[sel],
                            track.source_id, iu.speaker_id))
            ius_with_tracks.append((iu, track))
    medians = speaker_medians(speaker_tracks)
    ius, curves = [], []
    for iu, track in ius_with_tracks:
        ius.append(iu)
        curves.append(iu_curve(iu, track, medians[iu.speaker_id],
                               n=int(args.points)))
    groups = group_curves(ius, curves, group_by)
    warnings: list[str] = []
    aggregates = aggregate_curves(groups, warnings)
    for msg in warnings:
        print(f"warning: {msg}", file=sys.stderr)
    out = Path(args.out)
    write_curves_csv(aggregates, out)
    _write_run_manifest(out.parent, "pitch-curves", args,
                        paths + [Path(_cfg(args, "corpus"))])
    for key in sorted(aggregates):
        print(f"group {key}: n={aggregates[key].count}")
    print(f"wrote {len(aggregates)} group curves to {out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args)
    if args.turns:
        turns = read_turn_manifest(args.turns, corpus)
        text = turn_stats(turns).render()
    else:
        text = annotation_stats(corpus).render()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        _write_run_manifest(Path(args.out).parent, "stats", args,
                            [Path(_cfg(args, "corpus"))])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prosotag",
                     description="Word-level prosody tagging pipeline.")
    parser.add_argument("--version", action="store_true",
                        help="print package and output-format versions")
    sub = parser.add_subparsers(dest="command")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="YAML config file (flags override)")
        p.add_argument("--seed", type=int, help="RNG seed (default 0)")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for per-file/turn stages")
        return p

    p = add("normalize", cmd_normalize, "normalize a transcript into a "
            "word/punctuation event stream")
    p.add_argument("--transcript", required=True)
    p.add_argument("--table", help="expansion table TSV (default: bundled)")
    p.add_argument("--out", required=True)

    p = add("segment", cmd_segment, "group events into proto-IUs by punctuation")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)

    p = add("ingest", cmd_ingest, "merge aligned words with proto-IUs into a corpus")
    p.add_argument("--alignments", nargs="+", required=True,
                   help="JSONL alignment files, one per audio source")
    p.add_argument("--proto", nargs="+", required=True,
                   help="proto-IU files pairing with --alignments by sort order")
    p.add_argument("--annotator", help="annotator id for provenance")
    p.add_argument("--table", help="expansion table TSV used upstream")
    p.add_argument("--out", required=True)

    p = add("compile-turns", cmd_compile_turns, "pack IUs into model-ready turns")
    p.add_argument("--corpus")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--max-pause", dest="max_pause_s", type=float)
    p.add_argument("--min-ius", dest="min_ius", type=int)
    p.add_argument("--max-dur", dest="max_dur_s", type=float)
    p.add_argument("--max-tokens", dest="max_tokens", type=int)
    p.add_argument("--allow-multi-speaker", dest="allow_multi_speaker",
                   type=lambda x: x.lower() in ("true", "1", "yes"))
    p.add_argument("--out", required=True)

    p = add("sweep-turns", cmd_sweep_turns,
            "grid-sweep turn parameters and tabulate the outcomes")
    p.add_argument("--corpus")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--max-pause", default="0.5,1.0,2.0",
                   help="comma-separated pause bounds")
    p.add_argument("--min-ius", default="1,2", help="comma-separated IU floors")
    p.add_argument("--allow-multi-speaker", default="true",
                   help="comma-separated booleans")
    p.add_argument("--out", help="optional CSV output")

    p = add("encode", cmd_encode, "encode turns into token-id sequences")
    p.add_argument("--corpus")
    p.add_argument("--turns", help="turn manifest (default: one turn per source)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--task", choices=["boundary", "prototype", "emphasis"])
    p.add_argument("--out-dir", required=True)

    p = add("synth", cmd_synth, "generate a synthetic labeled corpus + features")
    p.add_argument("--n-turns", dest="n_turns", type=int)
    p.add_argument("--out-dir", required=True)

    p = add("train-toy", cmd_train_toy, "train the toy encoder-decoder")
    p.add_argument("--corpus")
    p.add_argument("--features", required=True)
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--task", choices=["boundary", "prototype", "emphasis"])
    p.add_argument("--lr", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-tokens", dest="batch_tokens", type=int)
    p.add_argument("--label-loss-only", action="store_true", default=False)
    p.add_argument("--out-dir", required=True)

    p = add("decode", cmd_decode, "constrained label-only decoding")
    p.add_argument("--corpus")
    p.add_argument("--turns", help="turn manifest (default: one turn per source)")
    p.add_argument("--model", help="'oracle' or a checkpoint directory")
    p.add_argument("--features", help="features directory (required for "
                   "checkpoint models)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--task", choices=["boundary", "prototype", "emphasis"])
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, "score a prediction dump")
    p.add_argument("--predictions", required=True)
    p.add_argument("--wos", action="store_true", default=False,
                   help="score segmentation without each turn's first word")
    p.add_argument("--out-dir", required=True)

    p = add("pitch-curves", cmd_pitch_curves,
            "median/time-normalized pitch curves per IU group")
    p.add_argument("--corpus")
    p.add_argument("--pitch", nargs="+", required=True,
                   help="two-column pitch files, one per audio source")
    p.add_argument("--group-by", default="prototype,emphasis-half")
    p.add_argument("--points", default=100)
    p.add_argument("--out", required=True)

    p = add("stats", cmd_stats, "annotation or turn statistics")
    p.add_argument("--corpus")
    p.add_argument("--turns", help="turn manifest: report turn statistics instead")
    p.add_argument("--out")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(f"prosotag {__version__}")
        for name, version in sorted(FORMAT_VERSIONS.items()):
            print(f"format {name}: v{version}")
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 1
    try:
        args.config_data = _load_config(getattr(args, "config", None))
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        import traceback
        traceback.print_exc()
        print(f"internal error [{args.command}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
