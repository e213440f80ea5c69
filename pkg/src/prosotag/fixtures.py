"""
Published reference scores from the full-scale WHISPER fine-tuning
experiments on the "This American Life" (TAL) and Interviews corpora.

These numbers require the original audio, gold annotation, and GPU-scale
fine-tuning, none of which ship here; they are documentation fixtures
for the report renderers, NOT reproduction targets.  Desk-scale runs of
this package validate the pipeline on synthetic corpora instead.

Scores are Cohen's kappa unless a metric name says otherwise.  Layouts
mirror the published comparison tables; the renderer snapshot tests pin
them.
"""

from __future__ import annotations

from .metrics import format_table

#: Metric x task scores on TAL (compact labels, main split) for the two
#: headline model sizes.  Columns: Segmentation, Emphasis, Question,
#: Period, Comma (prototype classes are one-vs-rest).
TAL_METRICS_BY_TASK = {
    "Large-V2": {
        "Cohen's Kappa": (0.932, 0.588, 0.664, 0.453, 0.442),
        "Recall": (0.958, 0.713, 0.594, 0.644, 0.789),
        "Precision": (0.941, 0.700, 0.784, 0.724, 0.708),
        "F1-score": (0.949, 0.700, 0.676, 0.682, 0.746),
        "Accuracy": (0.974, 0.831, 0.978, 0.733, 0.722),
    },
    "Small": {
        "Cohen's Kappa": (0.914, 0.552, 0.497, 0.443, 0.419),
        "Recall": (0.938, 0.738, 0.391, 0.626, 0.797),
        "Precision": (0.936, 0.639, 0.735, 0.726, 0.672),
        "F1-score": (0.937, 0.685, 0.510, 0.672, 0.741),
        "Accuracy": (0.968, 0.808, 0.971, 0.729, 0.711),
    },
}

#: Kappa by dataset and model: segmentation, segmentation (wos), emphasis.
CROSS_DATASET_KAPPA = (
    ("TAL", "Small", 0.914, 0.895, 0.552),
    ("Interviews", "Small", 0.680, 0.593, 0.456),
    ("Interviews", "Large-V2", 0.711, 0.629, 0.519),
)

#: Show host vs. other speakers (Small model): name, #turns, #speakers,
#: then segmentation, segmentation (wos), emphasis, prototype kappas.
SPEAKER_SUBSETS = (
    ("All", 192, 50, 0.914, 0.895, 0.552, 0.447),
    ("Ira Glass", 47, 1, 0.915, 0.895, 0.574, 0.419),
    ("Others", 145, 49, 0.914, 0.895, 0.547, 0.451),
)

#: Impact of model size on the triple task: segmentation, segmentation
#: (wos), emphasis, prototype kappas on TAL.
MODEL_SIZE_KAPPA = (
    ("Tiny", 0.776, 0.718, 0.469, 0.205),
    ("Base", 0.815, 0.771, 0.524, 0.228),
    ("Small", 0.914, 0.895, 0.552, 0.447),
    ("Medium", 0.929, 0.914, 0.551, 0.462),
    ("Large-V2", 0.933, 0.918, 0.588, 0.484),
)

#: Single-task fine-tuning vs. the best triple-task run, full train set
#: and an 8% subset: IU detect, IU (wos), emphasis, prototype kappas.
SINGLE_VS_TRIPLE = {
    "Full Train Set": (
        ("Small", 0.941, 0.928, 0.561, 0.471),
        ("Large-V2", 0.931, 0.916, 0.563, 0.506),
        ("Best Multi-Label", 0.946, 0.934, 0.588, 0.503),
    ),
    "8% Train Set": (
        ("Small", 0.850, 0.817, 0.428, 0.183),
        ("Large-V2", 0.887, 0.864, 0.489, 0.325),
        ("Best Multi-Label", 0.915, 0.896, 0.504, 0.274),
    ),
}


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def reference_tables() -> dict[str, str]:
    """Render every fixture in its published layout (snapshot-tested)."""
    out: dict[str, str] = {}

    for model, metrics in TAL_METRICS_BY_TASK.items():
        header = ["Metric", "Segmentation", "Emphasis", "Question", "Period", "Comma"]
        rows = [[name, *map(_fmt, values)] for name, values in metrics.items()]
        out[f"tal_by_task_{model.lower()}"] = format_table(
            header, rows, title=f"TAL scores by task, compact labels ({model})")

    header = ["Dataset", "Model", "Segmentation", "Segmentation (wos)", "Emphasis"]
    rows = [[d, m, *map(_fmt, scores)] for d, m, *scores in CROSS_DATASET_KAPPA]
    out["cross_dataset"] = format_table(header, rows,
                                        title="Kappa across datasets")

    header = ["Test Set", "#Turns", "#Speakers", "Segmentation",
              "Segmentation (wos)", "Emphasis", "Prototype"]
    rows = [[name, str(nt), str(ns), *map(_fmt, scores)]
            for name, nt, ns, *scores in SPEAKER_SUBSETS]
    out["speaker_subsets"] = format_table(header, rows,
                                          title="Host vs. other speakers (Small)")

    header = ["Model", "Segmentation", "Segmentation (wos)", "Emphasis", "Prototype"]
    rows = [[name, *map(_fmt, scores)] for name, *scores in MODEL_SIZE_KAPPA]
    out["model_size"] = format_table(header, rows,
                                     title="Impact of model size (triple task)")

    for split, entries in SINGLE_VS_TRIPLE.items():
        header = ["Model", "IU Detect", "IU (wos)", "Emphasis", "Prototype"]
        rows = [[name, *map(_fmt, scores)] for name, *scores in entries]
        key = "single_vs_triple_" + ("full" if "Full" in split else "8pct")
        out[key] = format_table(header, rows,
                                title=f"Single tasks vs. triple task ({split})")

    return out
