"""Baseline VAD path: frame decisions, median filter, segments, merging.

The frame classifier is an adaptive-energy stand-in for the GMM VAD used
by the original system (which is out of scope here). It keeps the parts
that matter for pipeline comparisons: 30 ms frame decisions, a 4-level
aggressiveness knob, 5-frame median filtering, and 500 ms gap merging.

Noise floor model: running minimum of frame log-energy that drops
instantly on quieter frames and rises linearly at 0.05 dB per frame
otherwise. A frame is speech when its energy exceeds the floor by a
margin of {6, 9, 12, 15} dB for aggressiveness 0 to 3.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AudioTooShort, InvalidConfig, UnsortedInput
from .frontend import AudioBuffer
from .segments import Segment, check_sorted

FRAME_PERIOD_S = 0.030
FLOOR_INIT_DB = -100.0
FLOOR_RISE_DB_PER_FRAME = 0.05
MARGINS_DB = (6.0, 9.0, 12.0, 15.0)
ENERGY_FLOOR = 1e-10


@dataclass
class FrameDecisionTrack:
    decisions: np.ndarray
    frame_period_s: float = FRAME_PERIOD_S
    scores: np.ndarray | None = None
    start_time_s: float = 0.0

    def __post_init__(self):
        self.decisions = np.asarray(self.decisions, dtype=np.int8)
        if self.frame_period_s <= 0:
            raise InvalidConfig("frame_period_s must be positive")
        if not np.isin(self.decisions, (0, 1)).all():
            raise InvalidConfig("decisions must be 0 or 1")
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=np.float64)
            if self.scores.shape != self.decisions.shape:
                raise InvalidConfig("scores must align with decisions")

    def __len__(self):
        return len(self.decisions)


def energy_vad_frames(
    audio: AudioBuffer, aggressiveness: int = 0
) -> FrameDecisionTrack:
    """Adaptive-energy speech/non-speech decision per 30 ms frame.

    Mode 0 uses the smallest margin and therefore returns the most speech.
    """
    if aggressiveness not in (0, 1, 2, 3):
        raise InvalidConfig(
            f"aggressiveness must be 0..3, got {aggressiveness}"
        )
    frame_len = round(FRAME_PERIOD_S * audio.sample_rate)
    n = len(audio.samples) // frame_len
    if n < 1:
        raise AudioTooShort(
            f"need at least one {FRAME_PERIOD_S * 1000:.0f} ms frame"
        )

    frames = audio.samples[: n * frame_len].reshape(n, frame_len)
    energy_db = 10.0 * np.log10(np.mean(frames * frames, axis=1) + ENERGY_FLOOR)

    margin = MARGINS_DB[aggressiveness]
    decisions = np.zeros(n, dtype=np.int8)
    floor = FLOOR_INIT_DB
    for i, e in enumerate(energy_db):
        floor = min(e, floor + FLOOR_RISE_DB_PER_FRAME)
        decisions[i] = 1 if e > floor + margin else 0

    # score: margin headroom squashed onto [0, 1]
    scores = np.clip((energy_db - (FLOOR_INIT_DB + margin)) / 100.0, 0.0, 1.0)
    return FrameDecisionTrack(decisions, FRAME_PERIOD_S, scores)


def median_filter(track: FrameDecisionTrack, width: int = 5) -> FrameDecisionTrack:
    """Windowed median; edge windows shrink to stay odd and centered."""
    if width < 1 or width % 2 == 0:
        raise InvalidConfig("median width must be odd and positive")
    x = track.decisions
    n = len(x)
    out = np.empty_like(x)
    prefix = np.concatenate([[0], np.cumsum(x, dtype=np.int64)])
    for i in range(n):
        k = min(width // 2, i, n - 1 - i)  # shrunken half-width at edges
        ones = prefix[i + k + 1] - prefix[i - k]
        out[i] = 1 if 2 * ones > 2 * k + 1 else 0
    return FrameDecisionTrack(out, track.frame_period_s, track.scores,
                              track.start_time_s)


def decisions_to_segments(
    track: FrameDecisionTrack, label: str = "speech"
) -> list[Segment]:
    """Maximal runs of 1-frames as [start, end) segments on the frame grid."""
    x = np.concatenate([[0], track.decisions, [0]])
    starts = np.nonzero(np.diff(x) == 1)[0]
    ends = np.nonzero(np.diff(x) == -1)[0]
    p = track.frame_period_s
    t0 = track.start_time_s
    return [
        Segment(t0 + a * p, t0 + b * p, label) for a, b in zip(starts, ends)
    ]


def merge_segments(
    segments: list[Segment], max_gap_s: float = 0.5
) -> list[Segment]:
    """Close gaps of at most max_gap_s between same-label neighbors.

    Chains collapse transitively. Merging is per label: each segment joins
    the previous segment of its own label when the gap between them is
    small enough, independently of other labels in between.
    """
    check_sorted(segments)
    if max_gap_s < 0:
        raise InvalidConfig("max_gap_s must be nonnegative")
    out: list[Segment] = []
    last_by_label: dict[str, int] = {}
    for seg in segments:
        at = last_by_label.get(seg.label)
        if at is not None and seg.start_s - out[at].end_s <= max_gap_s:
            prev = out[at]
            out[at] = Segment(
                prev.start_s, max(prev.end_s, seg.end_s), prev.label,
                prev.score,
            )
        else:
            last_by_label[seg.label] = len(out)
            out.append(seg)
    return out
