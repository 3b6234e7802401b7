"""Range and range-Doppler processing of multi-chirp captures.

Velocity sign convention: positive velocity means the target recedes (range
grows by v * tPri per chirp). Under the exp(-j k R) beat convention that puts
the per-chirp phase ramp at exp(-j (4 pi v tPri / lambda0) nc) with
lambda0 = c / f0, and an inverse DFT over the chirp index lands it on the
positive velocity bin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .waveform import C, DerivedWaveform


@dataclass(frozen=True)
class FrameStack:
    """Consecutive chirps from a static pose: rows = chirps, cols = k bins."""

    frames: np.ndarray    # (Nc, Nk) complex
    t_pri: float          # pulse repetition interval (s)
    waveform: DerivedWaveform
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        f = np.asarray(self.frames)
        if f.ndim != 2:
            raise ValueError("frames must be a 2-D (chirps x Nk) array")
        if f.shape[0] < 1:
            raise ValueError("need at least one chirp")
        if f.shape[1] != self.waveform.Nk:
            raise ValueError(f"{f.shape[1]} columns but waveform Nk={self.waveform.Nk}")
        if self.t_pri <= 0:
            raise ValueError("t_pri must be positive")
        object.__setattr__(self, "frames", f)

    @property
    def num_chirps(self) -> int:
        return self.frames.shape[0]

    @property
    def lambda0(self) -> float:
        return C / self.waveform.params.f0


def range_fft(stack: FrameStack, nfft: int | None = None,
              hann: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Per-chirp range profiles.

    Returns (profiles (Nc x nfft), range axis in m). The transform is
    nfft * ifft so a target at range R peaks at bin R / (delta_z * Nk / nfft)
    and Parseval holds as sum |X|^2 / nfft = sum |frames|^2.
    """
    nk = stack.waveform.Nk
    s = stack.frames
    if hann:
        s = s * np.hanning(nk)[None, :]
    n = nfft if nfft is not None else nk
    if n < nk:
        raise ValueError(f"nfft={n} is smaller than Nk={nk}")
    X = n * np.fft.ifft(s, n=n, axis=1)
    raxis = np.arange(n) * (stack.waveform.range_resolution * nk / n)
    return X, raxis


def range_doppler(stack: FrameStack, nfft_range: int | None = None,
                  hann: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Range-Doppler magnitude map.

    Returns (map (rangeBins x velocityBins), range axis m, velocity axis m/s).
    The velocity axis is zero-centered: bin m maps to
    m * lambda0 / (2 * tPri * Nc).
    """
    if stack.num_chirps < 2:
        raise ValueError("range-Doppler needs at least two chirps")
    X, raxis = range_fft(stack, nfft=nfft_range, hann=hann)
    nc = stack.num_chirps
    if hann:
        X = X * np.hanning(nc)[:, None]
    Y = nc * np.fft.ifft(X, axis=0)
    Y = np.fft.fftshift(Y, axes=0)
    spacing = stack.lambda0 / (2.0 * stack.t_pri * nc)
    vaxis = (np.arange(nc) - nc // 2) * spacing
    return np.abs(Y).T, raxis, vaxis
