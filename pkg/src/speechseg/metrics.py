"""Frame-level VAD metrics and word-error-rate scoring.

VAD scoring rasterizes segments onto a frame grid (frame i speech iff its
center lies in a speech segment) and reports per-condition true positive
rates plus the false positive rate over non-speech frames. WER uses a
minimum-edit-distance alignment with unit insertion/deletion/substitution
costs; cost ties are broken toward fewer substitutions, then fewer
insertions, by minimizing the triple (errors, subs, ins) lexicographically.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import FrameDecisionTrack
from .errors import (
    DegenerateLabels,
    EmptyReference,
    InvalidConfig,
    LengthMismatch,
    SegmentOutOfBounds,
    ZeroTotal,
)
from .segments import Segment

CONDITIONS = (
    "clean_speech",
    "speech_with_noise",
    "speech_with_music",
    "no_speech",
)
SPEECH_CONDITIONS = CONDITIONS[:3]

VAD_FRAME_PERIOD_S = 0.010


# -----------------------------------------------------------------------------
# Rasterization
# -----------------------------------------------------------------------------

def _frame_total(duration_s: float, period_s: float) -> int:
    # ceil(duration/period), robust to duration being a rounded multiple
    return int(np.ceil(duration_s / period_s - 1e-9))


def rasterize(
    segments: list[Segment],
    frame_period_s: float,
    stream_duration_s: float,
) -> FrameDecisionTrack:
    """Frame i is 1 iff its center (i+0.5)*period lies in a segment."""
    if frame_period_s <= 0 or stream_duration_s < 0:
        raise InvalidConfig("period must be positive, duration nonnegative")
    n = _frame_total(stream_duration_s, frame_period_s)
    decisions = np.zeros(n, dtype=np.int8)
    centers = (np.arange(n) + 0.5) * frame_period_s
    for seg in segments:
        if seg.start_s < -1e-9 or seg.end_s > stream_duration_s + 1e-9:
            raise SegmentOutOfBounds(
                f"[{seg.start_s}, {seg.end_s}) outside stream of "
                f"{stream_duration_s}s"
            )
        decisions[(centers >= seg.start_s) & (centers < seg.end_s)] = 1
    return FrameDecisionTrack(decisions, frame_period_s)


def condition_frames(
    condition_segments: list[Segment],
    frame_period_s: float,
    stream_duration_s: float,
) -> list[str]:
    """Per-frame condition labels from labeled segments; gaps are no_speech."""
    n = _frame_total(stream_duration_s, frame_period_s)
    out = ["no_speech"] * n
    centers = (np.arange(n) + 0.5) * frame_period_s
    for seg in condition_segments:
        if seg.label not in CONDITIONS:
            raise InvalidConfig(f"unknown condition {seg.label!r}")
        for i in np.nonzero((centers >= seg.start_s) & (centers < seg.end_s))[0]:
            out[i] = seg.label
    return out


# -----------------------------------------------------------------------------
# ROC
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class RocCurve:
    """Operating points swept over descending thresholds; anchored at (0,0)."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        for arr in (self.fpr, self.tpr):
            if ((arr < 0) | (arr > 1)).any():
                raise InvalidConfig("rates must lie in [0, 1]")
            if (np.diff(arr) < 0).any():
                raise InvalidConfig("curve must be non-decreasing")


def roc_curve(scores: list[tuple[float, int]]) -> RocCurve:
    """Exact ROC: one operating point per distinct score, positive iff
    score >= threshold, plus the (0,0) anchor at threshold +inf."""
    values = np.asarray([s for s, _ in scores], dtype=np.float64)
    labels = np.asarray([int(bool(y)) for _, y in scores], dtype=np.int64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ROC needs at least one of each class")

    order = np.argsort(-values, kind="stable")
    values = values[order]
    labels = labels[order]
    tp = np.cumsum(labels)
    fp = np.cumsum(1 - labels)
    # last index of each run of equal scores = counts at "threshold = value"
    last = np.nonzero(np.concatenate([values[1:] != values[:-1], [True]]))[0]
    fpr = np.concatenate([[0.0], fp[last] / n_neg])
    tpr = np.concatenate([[0.0], tp[last] / n_pos])
    thresholds = np.concatenate([[np.inf], values[last]])
    return RocCurve(fpr, tpr, thresholds)


def tpr_at_fpr(curve: RocCurve, target: float = 0.315) -> float:
    """TPR linearly interpolated between curve points straddling target."""
    if not 0 <= target <= 1:
        raise InvalidConfig("target FPR must lie in [0, 1]")
    # collapse duplicate fpr values to their best tpr before interpolating
    fpr, tpr = curve.fpr, curve.tpr
    keep = np.concatenate([fpr[1:] != fpr[:-1], [True]])
    return float(np.interp(target, fpr[keep], tpr[keep]))


# -----------------------------------------------------------------------------
# Frame VAD evaluation
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class VadEvalReport:
    tpr_by_condition: dict
    tpr_all: float | None
    fpr: float | None
    frames_by_condition: dict

    def summary(self) -> dict:
        def f(x):
            return None if x is None else round(x, 6)

        return {
            "tpr_clean": f(self.tpr_by_condition.get("clean_speech")),
            "tpr_noise": f(self.tpr_by_condition.get("speech_with_noise")),
            "tpr_music": f(self.tpr_by_condition.get("speech_with_music")),
            "tpr_all": f(self.tpr_all),
            "fpr": f(self.fpr),
        }


def frame_vad_eval(
    hyp: FrameDecisionTrack, conditions: list[str]
) -> VadEvalReport:
    """Per-condition TPR over speech frames; FPR over no_speech frames."""
    if len(hyp) != len(conditions):
        raise LengthMismatch(
            f"{len(hyp)} hypothesis frames vs {len(conditions)} labels"
        )
    for c in conditions:
        if c not in CONDITIONS:
            raise InvalidConfig(f"unknown condition {c!r}")

    cond = np.asarray(conditions)
    dec = hyp.decisions
    tpr_by = {}
    counts = {}
    for c in SPEECH_CONDITIONS:
        mask = cond == c
        counts[c] = int(mask.sum())
        tpr_by[c] = float(dec[mask].mean()) if counts[c] else None

    speech_mask = cond != "no_speech"
    n_speech = int(speech_mask.sum())
    tpr_all = float(dec[speech_mask].mean()) if n_speech else None

    neg_mask = cond == "no_speech"
    counts["no_speech"] = int(neg_mask.sum())
    fpr = float(dec[neg_mask].mean()) if counts["no_speech"] else None
    return VadEvalReport(tpr_by, tpr_all, fpr, counts)


# -----------------------------------------------------------------------------
# WER
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class WerReport:
    tot: int
    insertions: int
    deletions: int
    substitutions: int

    @property
    def errors(self) -> int:
        return self.insertions + self.deletions + self.substitutions

    @property
    def wer_percent(self) -> float:
        return wer_from_counts(
            self.tot, self.insertions, self.deletions, self.substitutions
        )


# counts packed into one int64 so numpy minimization is lexicographic over
# (errors, substitutions, insertions); fields must stay below _PACK
_PACK = 1 << 21
_DEL = _PACK * _PACK
_INS = _PACK * _PACK + 1
_SUB = _PACK * _PACK + _PACK


def align_wer(ref: list[str], hyp: list[str]) -> WerReport:
    """Minimum-edit alignment; ties prefer fewer SUB, then fewer INS."""
    if len(ref) == 0:
        raise EmptyReference("reference transcript has no words")
    # keeps every intermediate packed cost below 2^63
    if len(ref) + len(hyp) > (1 << 20):
        raise InvalidConfig("transcript too long to align")

    hyp_arr = np.asarray(hyp, dtype=object)
    row = np.arange(len(hyp) + 1, dtype=np.int64) * _INS
    for i in range(1, len(ref) + 1):
        sub_step = np.where(hyp_arr == ref[i - 1], 0, _SUB)
        best = np.empty_like(row)
        best[0] = i * _DEL
        best[1:] = np.minimum(row[1:] + _DEL, row[:-1] + sub_step)
        # fold in insertions along the row with a running prefix minimum
        j = np.arange(len(hyp) + 1, dtype=np.int64)
        row = np.minimum.accumulate(best - j * _INS) + j * _INS
    packed = int(row[-1])
    errors, rest = divmod(packed, _PACK * _PACK)
    subs, ins = divmod(rest, _PACK)
    return WerReport(len(ref), ins, errors - subs - ins, subs)


def wer_from_counts(tot: int, ins: int, dels: int, subs: int) -> float:
    if tot <= 0:
        raise ZeroTotal("reference word count must be positive")
    return (ins + dels + subs) / tot * 100.0


_TOKEN = re.compile(r"[^\W_]+(?:['’-][^\W_]+)*")


def normalize_text(line: str) -> list[str]:
    """Lowercase, keep intra-word apostrophes/hyphens, drop other
    punctuation, collapse whitespace."""
    return _TOKEN.findall(line.lower())


# -----------------------------------------------------------------------------
# Transcript and condition-label files
# -----------------------------------------------------------------------------

def read_transcripts(path: str | Path, normalize: bool = True) -> dict:
    """`file-id<TAB>words...` per line -> {file-id: word list}."""
    out: dict[str, list[str]] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        file_id, _, text = line.partition("\t")
        if not file_id.strip():
            raise InvalidConfig(f"{path}:{lineno}: missing file id")
        words = normalize_text(text) if normalize else text.split()
        out.setdefault(file_id.strip(), []).extend(words)
    return out


def score_transcripts(
    ref: dict, hyp: dict
) -> tuple[WerReport, dict[str, WerReport]]:
    """Align per file id, then pool counts over all reference files."""
    per_file = {}
    tot = ins = dels = subs = 0
    for file_id in sorted(ref):
        report = align_wer(ref[file_id], hyp.get(file_id, []))
        per_file[file_id] = report
        tot += report.tot
        ins += report.insertions
        dels += report.deletions
        subs += report.substitutions
    if tot == 0:
        raise EmptyReference("no reference words to score")
    return WerReport(tot, ins, dels, subs), per_file


def read_condition_labels(path: str | Path) -> list[Segment]:
    """TSV `start<TAB>end<TAB>condition` rows, validated and sorted."""
    out = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise InvalidConfig(f"{path}:{lineno}: expected 3 fields")
        if parts[2] not in CONDITIONS:
            raise InvalidConfig(f"{path}:{lineno}: bad condition {parts[2]!r}")
        out.append(Segment(float(parts[0]), float(parts[1]), parts[2]))
    return sorted(out, key=lambda s: (s.start_s, s.end_s))
