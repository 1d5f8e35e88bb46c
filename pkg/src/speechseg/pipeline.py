"""End-to-end speech segmentation.

Three strategies assemble the same building blocks in different orders:

- baseline: adaptive-energy VAD per 30 ms frame, median filter, gap merge;
  embeddings are computed only inside the resulting segments and clustered
  to attach speaker labels.
- xvector_filt: embed every sliding window, drop windows whose speech
  probability falls below the threshold, cluster the survivors, then turn
  stride-adjacent same-cluster runs into segments.
- xvector_seg_filt: embed and cluster every window, form segments from the
  runs, then reject segments whose noise proportion is too high.

Output segments are sorted, non-overlapping per label, and labeled spkN,
where N is the clustering id of the run (dense before any filtering).
Every extracted window gets one decision-log record; records of windows
that were dropped before clustering carry cluster -1.

Windows whose samples are all exactly zero carry no evidence and are
skipped outright, so digital silence never reaches the classifier and an
all-zero stream yields an empty segment list under every strategy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import (
    decisions_to_segments,
    energy_vad_frames,
    median_filter,
    merge_segments,
)
from .classifier import CalibratedLinearModel, load_model
from .errors import EmptyInput, InvalidConfig, StreamTooShort
from .frontend import AudioBuffer, FeatureMatrix, apply_cmvn, compute_mfcc, read_wav
from .segments import Segment, check_sorted
from .xvector import (
    ExtractionConfig,
    XVector,
    XVectorNet,
    extract_sequence,
    load_weights,
)

STRATEGIES = ("baseline", "xvector_filt", "xvector_seg_filt")


@dataclass(frozen=True)
class PipelineConfig:
    strategy: str
    model_path: str | None = None
    net_path: str | None = None
    vad_probability_threshold: float = 0.5
    noise_proportion_threshold: float = 0.5   # rho
    cluster_distance_threshold: float = 0.35  # delta, cosine
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    baseline_aggressiveness: int = 0
    median_width: int = 5
    merge_gap_s: float = 0.5

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidConfig(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )
        if not 0.0 <= self.vad_probability_threshold <= 1.0:
            raise InvalidConfig("vad_probability_threshold must lie in [0, 1]")
        if not 0.0 <= self.noise_proportion_threshold <= 1.0:
            raise InvalidConfig("noise_proportion_threshold must lie in [0, 1]")
        if self.cluster_distance_threshold < 0.0:
            raise InvalidConfig("cluster_distance_threshold must be >= 0")
        if self.baseline_aggressiveness not in (0, 1, 2, 3):
            raise InvalidConfig("baseline_aggressiveness must be 0..3")
        if self.median_width < 1 or self.median_width % 2 == 0:
            raise InvalidConfig("median_width must be odd and positive")
        if self.merge_gap_s < 0.0:
            raise InvalidConfig("merge_gap_s must be nonnegative")


@dataclass(frozen=True)
class ClusteredSequence:
    """Per-window (x-vector, cluster id, speech probability) triples."""

    entries: tuple

    def __post_init__(self):
        ids = [cid for _, cid, _ in self.entries]
        if ids and sorted(set(ids)) != list(range(max(ids) + 1)):
            raise InvalidConfig("cluster ids must be dense integers from 0")
        for _, _, prob in self.entries:
            if not 0.0 <= prob <= 1.0:
                raise InvalidConfig("probabilities must lie in [0, 1]")

    def __len__(self):
        return len(self.entries)

    @property
    def cluster_ids(self) -> list[int]:
        return [cid for _, cid, _ in self.entries]


@dataclass(frozen=True)
class DecisionRecord:
    start_s: float
    end_s: float
    probability: float
    label: str
    cluster: int  # -1 when the window never reached clustering


@dataclass(frozen=True)
class PipelineResult:
    segments: tuple
    xvectors: tuple
    decisions: tuple


def cluster_ahc(
    vectors: list[XVector],
    distance_threshold: float,
    probabilities: list[float] | None = None,
    center: bool = False,
) -> ClusteredSequence:
    """Average-linkage agglomerative clustering under cosine distance.

    Merging stops once the closest pair of clusters is farther apart than
    the threshold; ties break toward the lowest pair index. Ids are dense
    from 0 in order of first appearance. Probabilities default to 1.0 when
    the caller has none.

    center subtracts the mean embedding before measuring distances (the
    vectors themselves are returned untouched). Raw embeddings of very
    different content can sit within a few degrees of each other, so the
    pipeline clusters on centered directions; centering needs at least 3
    vectors to be meaningful and is skipped below that.
    """
    n = len(vectors)
    if n == 0:
        raise EmptyInput("clustering needs at least one vector")
    if probabilities is None:
        probabilities = [1.0] * n
    if len(probabilities) != n:
        raise InvalidConfig("need one probability per vector")

    x = np.stack([v.values for v in vectors]).astype(np.float64)
    if center and n >= 3:
        x = x - x.mean(axis=0)
    norms = np.linalg.norm(x, axis=1)
    unit = x / np.where(norms > 0, norms, 1.0)[:, None]
    dist = np.clip(1.0 - unit @ unit.T, 0.0, 2.0)
    np.fill_diagonal(dist, np.inf)

    sizes = np.ones(n)
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    while len(members) > 1:
        flat = int(np.argmin(dist))
        i, j = divmod(flat, n)  # row-major scan lands on lowest (i, j)
        if dist[i, j] > distance_threshold:
            break
        merged = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (
            sizes[i] + sizes[j]
        )
        dist[i, :] = merged
        dist[:, i] = merged
        dist[i, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        sizes[i] += sizes[j]
        members[i].extend(members.pop(j))

    id_of = {}
    for cid, group in enumerate(sorted(members.values(), key=min)):
        for t in group:
            id_of[t] = cid
    entries = tuple(
        (vectors[t], id_of[t], float(probabilities[t])) for t in range(n)
    )
    return ClusteredSequence(entries)


def filter_xvectors(
    vectors: list[XVector],
    model: CalibratedLinearModel,
    p_threshold: float,
) -> tuple[list[XVector], list[XVector]]:
    """Split into (kept, dropped) by speech probability >= threshold."""
    kept, dropped = [], []
    for v in vectors:
        if model.probability(v.values) >= p_threshold:
            kept.append(v)
        else:
            dropped.append(v)
    return kept, dropped


def filter_segments(
    clustered: ClusteredSequence,
    segments: list[Segment],
    noise_proportion_threshold: float,
    p_threshold: float = 0.5,
) -> list[Segment]:
    """Drop segments whose attributed windows are mostly noise.

    A window belongs to the first segment containing its center. A segment
    is rejected iff its noise fraction strictly exceeds the threshold;
    segments with no attributed window are rejected too.
    """
    totals = [0] * len(segments)
    noise = [0] * len(segments)
    for vec, _, prob in clustered.entries:
        center = (vec.window_start_s + vec.window_end_s) / 2.0
        for k, seg in enumerate(segments):
            if seg.start_s <= center < seg.end_s:
                totals[k] += 1
                if prob < p_threshold:
                    noise[k] += 1
                break
    return [
        seg
        for k, seg in enumerate(segments)
        if totals[k] > 0 and noise[k] / totals[k] <= noise_proportion_threshold
    ]


def run_pipeline(
    audio: str | Path | AudioBuffer,
    cfg: PipelineConfig,
    model: CalibratedLinearModel | None = None,
    net: XVectorNet | None = None,
) -> PipelineResult:
    """Segment one stream under the configured strategy.

    model and net are loaded from the config paths unless already-loaded
    objects are passed in. No speech found is an empty result, not an
    error.
    """
    if isinstance(audio, (str, Path)):
        audio = read_wav(audio)
    if net is None:
        if cfg.net_path is None:
            raise InvalidConfig("strategy requires x-vector weights (net_path)")
        net = load_weights(cfg.net_path)
    if model is None and cfg.model_path is not None:
        model = load_model(cfg.model_path)
    if cfg.strategy != "baseline" and model is None:
        raise InvalidConfig(
            f"strategy {cfg.strategy} requires a classifier model"
        )

    if cfg.strategy == "baseline":
        segments, vectors, decisions = _run_baseline(audio, cfg, model, net)
    else:
        segments, vectors, decisions = _run_xvector(audio, cfg, model, net)

    segments = sorted(segments, key=lambda s: (s.start_s, s.end_s, s.label))
    check_sorted(segments)
    return PipelineResult(tuple(segments), tuple(vectors), tuple(decisions))


def _features(audio: AudioBuffer):
    return apply_cmvn(compute_mfcc(audio))


def _silent_window(audio: AudioBuffer, vec: XVector) -> bool:
    a = int(round(vec.window_start_s * audio.sample_rate))
    b = int(round(vec.window_end_s * audio.sample_rate))
    return not np.any(audio.samples[a:b])


def _probability(model, vec) -> float:
    return model.probability(vec.values) if model is not None else 1.0


def _run_xvector(audio, cfg, model, net):
    try:
        feats = _features(audio)
        vectors = extract_sequence(net, feats, cfg.extraction)
    except StreamTooShort:
        return [], [], []
    vectors = [v for v in vectors if not _silent_window(audio, v)]
    if not vectors:
        return [], [], []

    probs = [_probability(model, v) for v in vectors]
    p_cut = cfg.vad_probability_threshold

    if cfg.strategy == "xvector_filt":
        kept_idx = [i for i, p in enumerate(probs) if p >= p_cut]
        decisions = []
        if kept_idx:
            # The kept set is single-class by construction, so recording-level
            # centering would only amplify residual noise; cluster raw vectors.
            clustered = cluster_ahc(
                [vectors[i] for i in kept_idx],
                cfg.cluster_distance_threshold,
                [probs[i] for i in kept_idx],
            )
            cluster_of = dict(zip(kept_idx, clustered.cluster_ids))
        else:
            cluster_of = {}
        for i, v in enumerate(vectors):
            cid = cluster_of.get(i, -1)
            label = "speech" if probs[i] >= p_cut else "noise"
            decisions.append(
                DecisionRecord(
                    v.window_start_s, v.window_end_s, probs[i], label, cid
                )
            )
        runs = _runs_to_segments(
            [vectors[i] for i in kept_idx],
            [cluster_of[i] for i in kept_idx],
            cfg.extraction.stride_s,
        )
        segments = merge_segments(runs, cfg.merge_gap_s)
        return segments, vectors, decisions

    # xvector_seg_filt: cluster everything, reject noisy segments after
    clustered = cluster_ahc(
        vectors, cfg.cluster_distance_threshold, probs, center=True
    )
    ids = clustered.cluster_ids
    decisions = [
        DecisionRecord(
            v.window_start_s,
            v.window_end_s,
            probs[i],
            "speech" if probs[i] >= p_cut else "noise",
            ids[i],
        )
        for i, v in enumerate(vectors)
    ]
    runs = _runs_to_segments(vectors, ids, cfg.extraction.stride_s)
    kept = filter_segments(
        clustered, runs, cfg.noise_proportion_threshold, p_cut
    )
    segments = merge_segments(kept, cfg.merge_gap_s)
    return segments, vectors, decisions


def _runs_to_segments(vectors, cluster_ids, stride_s):
    """Stride-adjacent windows sharing a cluster become one segment."""
    segments = []
    run_start = run_end = None
    run_id = None
    prev_start = None
    for v, cid in zip(vectors, cluster_ids):
        adjacent = (
            prev_start is not None
            and abs(v.window_start_s - prev_start - stride_s) < 1e-9
        )
        if run_id == cid and adjacent:
            run_end = max(run_end, v.window_end_s)
        else:
            if run_id is not None:
                segments.append(Segment(run_start, run_end, f"spk{run_id}"))
            run_start, run_end, run_id = v.window_start_s, v.window_end_s, cid
        prev_start = v.window_start_s
    if run_id is not None:
        segments.append(Segment(run_start, run_end, f"spk{run_id}"))
    return segments


def _run_baseline(audio, cfg, model, net):
    track = energy_vad_frames(audio, cfg.baseline_aggressiveness)
    track = median_filter(track, cfg.median_width)
    vad_segments = merge_segments(
        decisions_to_segments(track), cfg.merge_gap_s
    )
    if not vad_segments:
        return [], [], []

    feats = _features(audio)
    shift = feats.frame_shift_s
    vectors = []
    owner = []  # index into vad_segments per vector
    for k, seg in enumerate(vad_segments):
        a = int(round(seg.start_s / shift))
        b = min(int(round(seg.end_s / shift)), feats.num_frames)
        if b <= a:
            continue
        piece = FeatureMatrix(feats.rows[a:b], shift, start_time_s=a * shift)
        try:
            got = extract_sequence(net, piece, cfg.extraction)
        except StreamTooShort:
            continue
        for v in got:
            if not _silent_window(audio, v):
                vectors.append(v)
                owner.append(k)

    p_cut = cfg.vad_probability_threshold
    if vectors:
        probs = [_probability(model, v) for v in vectors]
        clustered = cluster_ahc(
            vectors, cfg.cluster_distance_threshold, probs, center=True
        )
        ids = clustered.cluster_ids
    else:
        probs, ids = [], []

    decisions = [
        DecisionRecord(
            v.window_start_s,
            v.window_end_s,
            probs[i],
            "speech" if probs[i] >= p_cut else "noise",
            ids[i],
        )
        for i, v in enumerate(vectors)
    ]

    # majority cluster labels each VAD segment; ties pick the lowest id,
    # and segments too short to embed get fresh ids after the real ones
    votes: dict[int, dict[int, int]] = {}
    for i, k in enumerate(owner):
        votes.setdefault(k, {}).setdefault(ids[i], 0)
        votes[k][ids[i]] += 1
    next_fresh = (max(ids) + 1) if ids else 0
    segments = []
    for k, seg in enumerate(vad_segments):
        if k in votes:
            best = max(votes[k].items(), key=lambda it: (it[1], -it[0]))[0]
        else:
            best = next_fresh
            next_fresh += 1
        segments.append(Segment(seg.start_s, seg.end_s, f"spk{best}"))
    return segments, vectors, decisions


def write_decision_log(decisions, path: str | Path) -> None:
    """One line per window: `start end probability label cluster`."""
    with open(path, "w", encoding="utf-8") as f:
        for d in decisions:
            f.write(
                f"{d.start_s:.3f} {d.end_s:.3f} {d.probability:.6f} "
                f"{d.label} {d.cluster}\n"
            )
