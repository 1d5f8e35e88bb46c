"""Seeded synthetic audio fixtures.

The speech proxy is band-shaped noise with syllable-rate amplitude
modulation: spectrally broad like speech and nothing like a steady tone,
so a classifier trained on proxy-vs-tone embeddings separates them
easily. None of these signals contain actual speech.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidConfig
from .frontend import AudioBuffer

DEFAULT_SAMPLE_RATE = 16000

# rough spectral peaks of voiced speech, (center hz, bandwidth hz)
_FORMANTS = ((500.0, 180.0), (1500.0, 300.0), (2500.0, 450.0))


def _check(duration_s: float, sample_rate: int) -> int:
    if duration_s <= 0:
        raise InvalidConfig(f"duration must be positive, got {duration_s}")
    if sample_rate <= 0:
        raise InvalidConfig(f"sample_rate must be positive, got {sample_rate}")
    return int(round(duration_s * sample_rate))


def make_silence(
    duration_s: float, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> AudioBuffer:
    n = _check(duration_s, sample_rate)
    return AudioBuffer(np.zeros(n), sample_rate)


def make_tone(
    duration_s: float,
    freq_hz: float = 1000.0,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    amplitude: float = 0.3,
) -> AudioBuffer:
    n = _check(duration_s, sample_rate)
    if not 0 < amplitude <= 1:
        raise InvalidConfig("amplitude must lie in (0, 1]")
    if not 0 < freq_hz < sample_rate / 2:
        raise InvalidConfig("freq_hz must lie in (0, Nyquist)")
    t = np.arange(n) / sample_rate
    return AudioBuffer(amplitude * np.sin(2.0 * np.pi * freq_hz * t), sample_rate)


def make_noise(
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
    amplitude: float = 0.1,
) -> AudioBuffer:
    n = _check(duration_s, sample_rate)
    if not 0 < amplitude <= 1:
        raise InvalidConfig("amplitude must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x *= amplitude / max(np.abs(x).max(), 1e-12)
    return AudioBuffer(x, sample_rate)


def make_speech_proxy(
    duration_s: float,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
    amplitude: float = 0.3,
) -> AudioBuffer:
    """Modulated formant-shaped noise standing in for speech."""
    n = _check(duration_s, sample_rate)
    if not 0 < amplitude <= 1:
        raise InvalidConfig("amplitude must lie in (0, 1]")
    rng = np.random.default_rng(seed)

    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    shape = np.zeros_like(freqs)
    for center, width in _FORMANTS:
        shape += np.exp(-0.5 * ((freqs - center) / width) ** 2)
    shape *= 1.0 / (1.0 + np.exp((freqs - 4000.0) / 400.0))  # rolloff
    x = np.fft.irfft(spectrum * shape, n)

    # syllable-rate energy contour, rate jittered per seed
    rate_hz = rng.uniform(3.0, 7.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    t = np.arange(n) / sample_rate
    envelope = 0.35 + 0.65 * (0.5 + 0.5 * np.sin(2.0 * np.pi * rate_hz * t + phase))
    x *= envelope
    x *= amplitude / max(np.abs(x).max(), 1e-12)
    return AudioBuffer(x, sample_rate)


def make_speech_then_tone(
    speech_s: float = 4.0,
    tone_s: float = 6.0,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    seed: int = 0,
) -> AudioBuffer:
    """Speech proxy in [0, speech_s) followed by a steady tone."""
    head = make_speech_proxy(speech_s, sample_rate, seed=seed)
    tail = make_tone(tone_s, sample_rate=sample_rate)
    return AudioBuffer(
        np.concatenate([head.samples, tail.samples]), sample_rate
    )
