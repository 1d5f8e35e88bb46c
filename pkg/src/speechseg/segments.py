"""Time-labeled segments and their on-disk formats.

A segment is a half-open interval [start_s, end_s) with a label (a class
name such as "speech" or a speaker id such as "spk0") and an optional score.
Two text formats are supported:

* TSV: ``start<TAB>end<TAB>label`` with 3-decimal fixed-point times.
* RTTM: ``SPEAKER <file-id> 1 <start> <dur> <NA> <NA> <label> <NA> <NA>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .errors import UnsortedInput


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    label: str
    score: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError("segment bounds must be finite")
        if self.end_s <= self.start_s:
            raise ValueError(
                f"segment end {self.end_s} must exceed start {self.start_s}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def check_sorted(segments: list[Segment]) -> None:
    """Raise UnsortedInput unless starts are non-decreasing and same-label
    segments do not overlap."""
    last_end: dict[str, float] = {}
    prev_start = -math.inf
    for seg in segments:
        if seg.start_s < prev_start:
            raise UnsortedInput(
                f"segment at {seg.start_s:.3f} starts before predecessor"
            )
        prev_start = seg.start_s
        if seg.label in last_end and seg.start_s < last_end[seg.label]:
            raise UnsortedInput(
                f"segments with label {seg.label!r} overlap at {seg.start_s:.3f}"
            )
        last_end[seg.label] = max(last_end.get(seg.label, -math.inf), seg.end_s)


def write_tsv(segments: list[Segment], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for seg in segments:
            f.write(f"{seg.start_s:.3f}\t{seg.end_s:.3f}\t{seg.label}\n")


def read_tsv(path: str | Path) -> list[Segment]:
    segments = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
            segments.append(Segment(float(parts[0]), float(parts[1]), parts[2]))
    return segments


def write_rttm(segments: list[Segment], file_id: str, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for seg in segments:
            f.write(
                f"SPEAKER {file_id} 1 {seg.start_s:.3f} {seg.duration_s:.3f} "
                f"<NA> <NA> {seg.label} <NA> <NA>\n"
            )


def read_rttm(path: str | Path) -> list[tuple[str, Segment]]:
    """Read RTTM SPEAKER lines as (file_id, Segment) pairs."""
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            if not parts or parts[0] != "SPEAKER":
                continue
            start = float(parts[3])
            dur = float(parts[4])
            out.append((parts[1], Segment(start, start + dur, parts[7])))
    return out
