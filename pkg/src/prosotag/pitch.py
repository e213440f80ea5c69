"""
Pitch-course analysis: median-normalized, time-normalized log-pitch
curves per intonation unit, aggregated by prototype and by where in the
unit emphasis falls.

Normalization is two-fold: log-f0 is taken relative to the speaker's
median log-f0 over all their voiced samples (so curves are comparable
across speakers and invariant to constant pitch offsets), and each IU's
curve is resampled to a fixed number of points over its duration (so
curves are comparable across IU lengths).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import Emphasis, IntonationUnit

#: Defaults for curve extraction; none of these is canonical, all are
#: parameters of the corresponding functions.
CURVE_POINTS = 100
MAX_UNVOICED_GAP_S = 0.25
MIN_VOICED_COVERAGE = 0.30


class PitchError(ValueError):
    """No usable voiced samples for the requested computation."""


@dataclass(frozen=True)
class PitchTrack:
    """f0 samples for one audio source; 0 Hz marks unvoiced frames."""

    times: np.ndarray  # seconds, strictly increasing
    f0: np.ndarray  # Hz, 0 where unvoiced
    source_id: str = ""
    speaker_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.times.shape != self.f0.shape or self.times.ndim != 1:
            raise ValueError("times and f0 must be equal-length vectors")
        if len(self.times) > 1 and not (np.diff(self.times) > 0).all():
            raise ValueError("sample times must be strictly increasing")
        if (self.f0 < 0).any():
            raise ValueError("f0 must be >= 0 (0 = unvoiced)")

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0


def read_pitch_file(path: Union[str, Path], source_id: str = "",
                    speaker_id: Optional[str] = None) -> PitchTrack:
    """Two-column text: time_s and f0_hz per line (0 = unvoiced)."""
    times, f0 = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(),
                                  start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PitchError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
        times.append(float(parts[0]))
        f0.append(float(parts[1]))
    return PitchTrack(np.asarray(times), np.asarray(f0),
                      source_id or Path(path).stem, speaker_id)


def speaker_median_logpitch(tracks: Iterable[PitchTrack]) -> float:
    """Median of log(f0) over all voiced samples of one speaker's tracks."""
    voiced = np.concatenate([t.f0[t.voiced] for t in tracks]) \
        if tracks else np.array([])
    voiced = voiced[voiced > 0] if voiced.size else voiced
    if voiced.size == 0:
        raise PitchError("no voiced samples for this speaker")
    return float(np.median(np.log(voiced)))


def speaker_medians(tracks: Sequence[PitchTrack]) -> dict[str, float]:
    by_speaker: dict[str, list[PitchTrack]] = {}
    for t in tracks:
        if t.speaker_id is None:
            raise PitchError(f"track {t.source_id!r} has no speaker")
        by_speaker.setdefault(t.speaker_id, []).append(t)
    return {spk: speaker_median_logpitch(ts) for spk, ts in by_speaker.items()}


@dataclass(frozen=True)
class NormalizedCurve:
    """Fixed-length median-relative log-pitch curve for one IU."""

    values: np.ndarray
    coverage: float  # fraction of sample points backed by voiced data
    low_coverage: bool  # flagged curves are excluded from aggregation


def iu_curve(
    iu: IntonationUnit,
    track: PitchTrack,
    median_logpitch: float,
    n: int = CURVE_POINTS,
    max_gap_s: float = MAX_UNVOICED_GAP_S,
    min_coverage: float = MIN_VOICED_COVERAGE,
) -> NormalizedCurve:
    """Median-relative log pitch resampled to n points over the IU.

    Unvoiced gaps shorter than ``max_gap_s`` are bridged by linear
    interpolation.  Points inside longer gaps, or outside the voiced
    extent, still receive (finite) interpolated/held values but do not
    count as covered; a curve under ``min_coverage`` is flagged for
    exclusion.
    """
    sel = (track.times >= iu.start_s - 1e-9) & (track.times <= iu.end_s + 1e-9)
    times = track.times[sel]
    f0 = track.f0[sel]
    voiced = f0 > 0
    grid = np.linspace(iu.start_s, iu.end_s, n)
    if not voiced.any():
        return NormalizedCurve(np.zeros(n), 0.0, True)

    vt = times[voiced]
    vlog = np.log(f0[voiced]) - median_logpitch
    values = np.interp(grid, vt, vlog)

    covered = np.zeros(n, dtype=bool)
    inside = (grid >= vt[0]) & (grid <= vt[-1])
    if len(vt) == 1:
        covered = np.isclose(grid, vt[0])
    else:
        seg = np.clip(np.searchsorted(vt, grid, side="right") - 1, 0, len(vt) - 2)
        gap = vt[seg + 1] - vt[seg]
        covered = inside & (gap <= max_gap_s)
    coverage = float(covered.mean())
    return NormalizedCurve(values, coverage, coverage < min_coverage)


def emphasis_half(iu: IntonationUnit) -> str:
    """Locate the first emphasized word relative to the IU midpoint.

    Returns "first_half", "second_half", or "none".
    """
    for w in iu.words:
        if w.emphasis is Emphasis.EMPHASIZED:
            word_mid = (w.start_s + w.end_s) / 2.0
            iu_mid = (iu.start_s + iu.end_s) / 2.0
            return "first_half" if word_mid < iu_mid else "second_half"
    return "none"


GroupKey = tuple[str, str]  # (prototype code or "*", emphasis-half code or "*")


@dataclass(frozen=True)
class AggregateCurve:
    mean: np.ndarray
    count: int


def group_curves(
    ius: Sequence[IntonationUnit],
    curves: Sequence[NormalizedCurve],
    group_by: Sequence[str] = ("prototype", "emphasis_half"),
) -> dict[GroupKey, list[NormalizedCurve]]:
    """Bucket usable curves by prototype and/or emphasis position.

    Ungrouped dimensions collapse to "*".
    """
    groups: dict[GroupKey, list[NormalizedCurve]] = {}
    for iu, curve in zip(ius, curves):
        if curve.low_coverage:
            continue
        proto = iu.prototype.value if "prototype" in group_by else "*"
        half = emphasis_half(iu) if "emphasis_half" in group_by else "*"
        groups.setdefault((proto, half), []).append(curve)
    return groups


def aggregate_curves(
    groups: Mapping[GroupKey, Sequence[NormalizedCurve]],
    warnings: Optional[list[str]] = None,
) -> dict[GroupKey, AggregateCurve]:
    """Pointwise mean curve and member count per group.

    Empty groups are omitted with a warning, not errors; counts are
    reported so readers can judge the support behind each mean.
    """
    out: dict[GroupKey, AggregateCurve] = {}
    for key, curves in groups.items():
        if not curves:
            if warnings is not None:
                warnings.append(f"group {key}: empty, omitted")
            continue
        stack = np.stack([c.values for c in curves])
        out[key] = AggregateCurve(stack.mean(axis=0), len(curves))
    return out


def write_curves_csv(aggregates: Mapping[GroupKey, AggregateCurve],
                     path: Union[str, Path]) -> None:
    """CSV: prototype, emphasis_half, count, then the n curve values."""
    keys = sorted(aggregates)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        n = len(next(iter(aggregates.values())).mean) if aggregates else 0
        header = ["prototype", "emphasis_half", "count"] + \
            [f"p{i:03d}" for i in range(n)]
        fh.write(",".join(header) + "\n")
        for key in keys:
            agg = aggregates[key]
            row = [key[0], key[1], str(agg.count)] + \
                [f"{v:.6f}" for v in agg.mean]
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# Convenience f0 estimation
# ---------------------------------------------------------------------------


def estimate_f0(
    signal: np.ndarray,
    sample_rate: float,
    frame_s: float = 0.04,
    hop_s: float = 0.01,
    fmin: float = 60.0,
    fmax: float = 400.0,
    voicing_threshold: float = 0.5,
) -> PitchTrack:
    """Basic autocorrelation f0 estimator over a mono signal.

    A convenience only: no octave-error correction, no smoothing, poor
    behavior on noisy or creaky speech.  Use a real pitch tracker and
    the two-column ingest format for serious work.
    """
    frame = int(frame_s * sample_rate)
    hop = int(hop_s * sample_rate)
    lag_min = max(2, int(sample_rate / fmax))
    lag_max = min(frame - 1, int(math.ceil(sample_rate / fmin)))
    times, f0 = [], []
    for start in range(0, len(signal) - frame + 1, hop):
        window = signal[start:start + frame].astype(np.float64)
        window = window - window.mean()
        energy = float(np.dot(window, window))
        t = (start + frame / 2.0) / sample_rate
        times.append(t)
        if energy < 1e-12:
            f0.append(0.0)
            continue
        ac = np.correlate(window, window, mode="full")[frame - 1:]
        ac = ac / ac[0]
        lag = lag_min + int(np.argmax(ac[lag_min:lag_max + 1]))
        f0.append(sample_rate / lag if ac[lag] >= voicing_threshold else 0.0)
    return PitchTrack(np.asarray(times), np.asarray(f0))
