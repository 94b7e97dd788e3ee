"""Mono audio buffers and WAV file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DataError


@dataclass
class AudioClip:
    """A mono sample buffer with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {self.samples.shape}")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        self.sample_rate = int(self.sample_rate)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


# Full-scale divisors for integer PCM encodings.
_PCM_SCALE = {
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def load_wav(path: str | Path) -> AudioClip:
    """Read a RIFF/WAVE file as a normalized mono clip.

    Integer PCM data is scaled to [-1, 1] by the full-scale value of its
    width; float data is taken as is. Multi-channel audio is averaged down
    to mono. The native sample rate is kept.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")
    except Exception as exc:
        raise DataError(f"{path}: not a readable WAV file ({exc})")
    if data.size == 0:
        raise DataError(f"{path}: zero-length audio")
    if data.dtype in _PCM_SCALE:
        samples = data.astype(np.float64) / _PCM_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        samples = data.astype(np.float64)
    else:
        raise DataError(f"{path}: unsupported sample encoding {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples=samples, sample_rate=int(rate))


def save_wav(path: str | Path, clip: AudioClip) -> None:
    """Write a clip as a 32-bit float WAV file."""
    wavfile.write(Path(path), clip.sample_rate, clip.samples.astype(np.float32))
