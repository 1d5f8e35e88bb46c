"""Audio decoding and MFCC feature extraction.

The front-end produces 30-dimensional MFCCs (C0 included) from mono PCM
audio, followed by sliding-window cepstral mean and variance normalization.
Conventions, shared with the reference DSP chain used in tests:

* framing: frame i covers samples [i*shift, i*shift + frame_len),
  T = floor((len - frame_len) / shift) + 1;
* pre-emphasis applied to the whole signal, y[n] = x[n] - coef*x[n-1],
  y[0] = x[0]*(1 - coef);
* power spectrum from a zero-padded FFT of the windowed frame
  (nfft = next power of two >= frame length), no normalization;
* mel filterbank: triangular filters in the Hz domain with centers evenly
  spaced on the HTK mel scale (2595*log10(1 + f/700)) between 20 Hz and
  the Nyquist frequency;
* log energies floored at 1e-10 before the natural log;
* orthonormal DCT-II truncated to num_ceps coefficients.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AudioTooShort,
    BadMagic,
    ChannelMismatch,
    EmptyFeatures,
    InvalidConfig,
    TruncatedFile,
    UnsupportedEncoding,
)

LOG_ENERGY_FLOOR = 1e-10

_WINDOWS = ("hamming", "hann", "rectangular")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples in [-1, 1] with their sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(
            self, "samples", np.asarray(self.samples, dtype=np.float64)
        )
        if self.sample_rate <= 0:
            raise InvalidConfig(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.ndim != 1:
            raise InvalidConfig("AudioBuffer samples must be one-dimensional")
        if self.samples.size and not np.isfinite(self.samples).all():
            raise InvalidConfig("AudioBuffer samples must be finite")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class MfccConfig:
    frame_length_ms: float = 25.0
    frame_shift_ms: float = 10.0
    num_mel_bins: int = 40
    num_ceps: int = 30
    pre_emphasis: float = 0.97
    window: str = "hamming"
    dither: float = 0.0
    low_freq_hz: float = 20.0

    def validate(self, sample_rate: int) -> None:
        if self.num_ceps > self.num_mel_bins:
            raise InvalidConfig(
                f"num_ceps {self.num_ceps} exceeds num_mel_bins {self.num_mel_bins}"
            )
        if self.frame_shift_ms > self.frame_length_ms:
            raise InvalidConfig("frame_shift_ms must not exceed frame_length_ms")
        if self.frame_length_ms <= 0 or self.frame_shift_ms <= 0:
            raise InvalidConfig("frame length and shift must be positive")
        if self.num_mel_bins < 2 or self.num_ceps < 1:
            raise InvalidConfig("need at least 2 mel bins and 1 cepstral coefficient")
        if self.window not in _WINDOWS:
            raise InvalidConfig(f"unknown window {self.window!r}, expected {_WINDOWS}")
        if not 0.0 <= self.pre_emphasis < 1.0:
            raise InvalidConfig("pre_emphasis must lie in [0, 1)")
        if self.low_freq_hz < 0 or self.low_freq_hz >= sample_rate / 2:
            raise InvalidConfig("low_freq_hz must lie in [0, Nyquist)")


@dataclass
class FeatureMatrix:
    """T x D feature rows with the time grid they were computed on."""

    rows: np.ndarray
    frame_shift_s: float
    start_time_s: float = 0.0

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise InvalidConfig("feature rows must be a 2-d matrix")
        if self.frame_shift_s <= 0:
            raise InvalidConfig("frame_shift_s must be positive")

    @property
    def num_frames(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def span_s(self) -> float:
        """Seconds of signal the matrix stands for (one shift per frame)."""
        return self.num_frames * self.frame_shift_s

    def frame_time(self, i: int) -> float:
        return self.start_time_s + i * self.frame_shift_s


# -----------------------------------------------------------------------------
# WAV container
# -----------------------------------------------------------------------------

def read_wav(path: str | Path, downmix: bool = False) -> AudioBuffer:
    """Decode a RIFF/WAVE file holding PCM16 or IEEE float samples.

    Multi-channel files are averaged to mono only when ``downmix`` is set;
    otherwise they are rejected with ChannelMismatch.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise UnsupportedEncoding(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise TruncatedFile(f"{path}: fmt chunk truncated")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise TruncatedFile(
                    f"{path}: data chunk declares {chunk_size} bytes, "
                    f"only {len(body)} present"
                )
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise TruncatedFile(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if audio_format == 1 and bits == 16:
        values = np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        values = np.frombuffer(data, dtype="<f4").astype(np.float64)
    elif audio_format == 3 and bits == 64:
        values = np.frombuffer(data, dtype="<f8").astype(np.float64)
    else:
        raise UnsupportedEncoding(
            f"{path}: format tag {audio_format} with {bits} bits is not "
            "PCM16 or IEEE float"
        )

    if channels < 1:
        raise UnsupportedEncoding(f"{path}: zero channels")
    if values.size % channels:
        raise TruncatedFile(f"{path}: sample data not a whole number of frames")
    if channels > 1:
        if not downmix:
            raise ChannelMismatch(
                f"{path}: {channels} channels; pass downmix=True to average"
            )
        values = values.reshape(-1, channels).mean(axis=1)

    return AudioBuffer(np.clip(values, -1.0, 1.0), sample_rate)


def write_wav(
    audio: AudioBuffer, path: str | Path, encoding: str = "pcm16"
) -> None:
    """Write mono audio as PCM16 (default) or float32 WAV."""
    if encoding == "pcm16":
        fmt_tag, bits = 1, 16
        pcm = np.clip(np.round(audio.samples * 32768.0), -32768, 32767)
        payload = pcm.astype("<i2").tobytes()
    elif encoding == "float32":
        fmt_tag, bits = 3, 32
        payload = audio.samples.astype("<f4").tobytes()
    else:
        raise InvalidConfig(f"unknown encoding {encoding!r}")

    byte_rate = audio.sample_rate * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        fmt_tag,
        1,
        audio.sample_rate,
        byte_rate,
        bits // 8,
        bits,
        b"data",
        len(payload),
    )
    Path(path).write_bytes(header + payload)


# -----------------------------------------------------------------------------
# MFCC
# -----------------------------------------------------------------------------

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    num_bins: int, nfft: int, sample_rate: int, low_hz: float, high_hz: float
) -> np.ndarray:
    """Triangular mel filters evaluated at the nfft/2+1 FFT bin frequencies."""
    mel_points = np.linspace(hz_to_mel(low_hz), hz_to_mel(high_hz), num_bins + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(nfft // 2 + 1) * (sample_rate / nfft)

    fbank = np.zeros((num_bins, nfft // 2 + 1))
    for m in range(num_bins):
        left, center, right = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        fbank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fbank


def dct_matrix(num_ceps: int, num_bins: int) -> np.ndarray:
    """Orthonormal DCT-II, first num_ceps rows."""
    n = np.arange(num_bins)
    k = np.arange(num_ceps)[:, None]
    mat = np.cos(np.pi * k * (2 * n + 1) / (2 * num_bins)) * np.sqrt(2.0 / num_bins)
    mat[0] /= np.sqrt(2.0)
    return mat


def frame_count(num_samples: int, frame_len: int, shift: int) -> int:
    if num_samples < frame_len:
        return 0
    return (num_samples - frame_len) // shift + 1


def _window(kind: str, length: int) -> np.ndarray:
    n = np.arange(length)
    if kind == "hamming":
        return 0.54 - 0.46 * np.cos(2 * np.pi * n / (length - 1))
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * n / (length - 1))
    return np.ones(length)


def compute_mfcc(audio: AudioBuffer, cfg: MfccConfig = MfccConfig()) -> FeatureMatrix:
    """MFCC rows for every frame of ``audio``.

    Deterministic when cfg.dither == 0 (the default); dither noise, when
    requested, uses a fixed-seed generator so repeated runs still agree.
    """
    cfg.validate(audio.sample_rate)
    frame_len = round(cfg.frame_length_ms * audio.sample_rate / 1000.0)
    shift = round(cfg.frame_shift_ms * audio.sample_rate / 1000.0)
    if len(audio.samples) < frame_len:
        raise AudioTooShort(
            f"{len(audio.samples)} samples < one frame of {frame_len}"
        )

    signal = audio.samples
    if cfg.dither > 0:
        rng = np.random.default_rng(0)
        signal = signal + cfg.dither * rng.standard_normal(len(signal))
    if cfg.pre_emphasis > 0:
        signal = np.concatenate(
            ([signal[0] * (1.0 - cfg.pre_emphasis)],
             signal[1:] - cfg.pre_emphasis * signal[:-1])
        )

    T = frame_count(len(signal), frame_len, shift)
    idx = np.arange(frame_len)[None, :] + shift * np.arange(T)[:, None]
    frames = signal[idx] * _window(cfg.window, frame_len)[None, :]

    nfft = 1
    while nfft < frame_len:
        nfft *= 2
    spectrum = np.abs(np.fft.rfft(frames, n=nfft, axis=1)) ** 2

    fbank = mel_filterbank(
        cfg.num_mel_bins, nfft, audio.sample_rate, cfg.low_freq_hz,
        audio.sample_rate / 2.0,
    )
    log_energies = np.log(np.maximum(spectrum @ fbank.T, LOG_ENERGY_FLOOR))
    ceps = log_energies @ dct_matrix(cfg.num_ceps, cfg.num_mel_bins).T

    return FeatureMatrix(ceps, cfg.frame_shift_ms / 1000.0)


def apply_cmvn(feats: FeatureMatrix, window_frames: int = 301) -> FeatureMatrix:
    """Sliding-window mean/variance normalization, per dimension.

    The window is centered on each frame; near the edges it slides rather
    than shrinks, so it keeps its full span whenever T >= window_frames and
    truncates to the whole matrix otherwise (hence T <= window_frames
    reduces to global CMVN). Dimensions with (near-)zero variance inside
    the window are only mean-subtracted; columns that are globally constant
    come out as exact zeros.
    """
    if window_frames < 1 or window_frames % 2 == 0:
        raise InvalidConfig("window_frames must be a positive odd integer")
    if feats.num_frames < 1:
        raise EmptyFeatures("cannot normalize an empty feature matrix")

    x = feats.rows
    T, D = x.shape
    half = window_frames // 2

    if T <= window_frames:
        mean = np.broadcast_to(x.mean(axis=0), x.shape)
        std = np.broadcast_to(x.std(axis=0), x.shape)
    else:
        # prefix sums over globally centered data give O(T*D) windowed
        # moments; centering keeps the E[z^2]-E[z]^2 cancellation small
        center = x.mean(axis=0)
        z = x - center
        zeros = np.zeros((1, D))
        s1 = np.concatenate([zeros, np.cumsum(z, axis=0)])
        s2 = np.concatenate([zeros, np.cumsum(z * z, axis=0)])
        lo = np.maximum(0, np.minimum(np.arange(T) - half, T - window_frames))
        hi = lo + window_frames
        mz = (s1[hi] - s1[lo]) / window_frames
        var = np.maximum((s2[hi] - s2[lo]) / window_frames - mz * mz, 0.0)
        mean = mz + center

        # windows whose variance sits near the rounding floor get an exact
        # two-pass recompute; cancellation there can fake a nonzero std
        guard = np.maximum(1e-5 * (z * z).mean(axis=0), 1e-20)
        for t in np.nonzero((var < guard).any(axis=1))[0]:
            chunk = x[lo[t] : hi[t]]
            mean[t] = chunk.mean(axis=0)
            var[t] = chunk.var(axis=0)
        std = np.sqrt(var)

    out = x - mean
    live = std > 1e-10
    out = np.where(live, out / np.where(live, std, 1.0), out)
    constant = x.max(axis=0) == x.min(axis=0)
    out[:, constant] = 0.0

    return FeatureMatrix(out, feats.frame_shift_s, feats.start_time_s)


# -----------------------------------------------------------------------------
# FEAT binary format: magic "FEAT", u32 T, u32 D, f64 frame_shift_s,
# then T*D little-endian f32.
# -----------------------------------------------------------------------------

FEAT_MAGIC = b"FEAT"


def write_features(feats: FeatureMatrix, path: str | Path) -> None:
    with open(path, "wb") as f:
        f.write(FEAT_MAGIC)
        f.write(struct.pack("<IId", feats.num_frames, feats.dim, feats.frame_shift_s))
        f.write(feats.rows.astype("<f4").tobytes())


def read_features(path: str | Path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if raw[:4] != FEAT_MAGIC:
        raise BadMagic(f"{path}: expected FEAT magic")
    t, d, shift = struct.unpack_from("<IId", raw, 4)
    body = raw[20:]
    expected = t * d * 4
    if len(body) < expected:
        raise TruncatedFile(f"{path}: expected {expected} payload bytes")
    rows = np.frombuffer(body[:expected], dtype="<f4").reshape(t, d)
    return FeatureMatrix(rows.astype(np.float64), shift)
