"""FMCW chirp parameters, wavenumber sampling, and resolution/sampling bounds."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

C = 299_792_458.0  # speed of light (m/s); all internal units are SI

_JSON_KEYS = ("f0_Hz", "K_Hz_per_s", "Nk", "fS_Hz", "fC_Hz")


@dataclass(frozen=True)
class WaveformParams:
    """Chirp description as configured on the radar front end.

    The sampled span is what matters downstream: bandwidth is K*Nk/fS, not
    K*T_chirp, because only Nk ADC samples ever reach the processing chain.
    """

    f0: float  # chirp start frequency (Hz)
    K: float   # chirp slope (Hz/s)
    Nk: int    # ADC samples per chirp
    fS: float  # ADC sampling rate (Hz)
    fC: float  # carrier (center) frequency (Hz)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f0) and self.f0 > 0):
            raise ValueError(f"f0 must be a positive finite frequency, got {self.f0!r}")
        if not (math.isfinite(self.K) and self.K > 0):
            raise ValueError(f"K must be a positive finite slope, got {self.K!r}")
        if not (isinstance(self.Nk, int) and self.Nk >= 2):
            raise ValueError(f"Nk must be an integer >= 2, got {self.Nk!r}")
        if not (math.isfinite(self.fS) and self.fS > 0):
            raise ValueError(f"fS must be a positive finite rate, got {self.fS!r}")
        if not (math.isfinite(self.fC) and self.fC >= self.f0):
            raise ValueError(f"fC must be finite and >= f0, got {self.fC!r}")

    def to_dict(self) -> dict:
        return {
            "f0_Hz": self.f0,
            "K_Hz_per_s": self.K,
            "Nk": self.Nk,
            "fS_Hz": self.fS,
            "fC_Hz": self.fC,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveformParams":
        missing = [k for k in _JSON_KEYS if k not in d]
        if missing:
            raise ValueError(f"waveform JSON missing keys: {missing}")
        return cls(
            f0=float(d["f0_Hz"]),
            K=float(d["K_Hz_per_s"]),
            Nk=int(d["Nk"]),
            fS=float(d["fS_Hz"]),
            fC=float(d["fC_Hz"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WaveformParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedWaveform:
    """Quantities derived from WaveformParams; everything the imaging chain needs."""

    params: WaveformParams
    bandwidth: float         # B = K*Nk/fS (Hz), sampled span
    k0: float                # start wavenumber 2*pi*f0/c (rad/m)
    dk: float                # wavenumber step 2*pi*K/(c*fS) (rad/m)
    lambda_c: float          # carrier wavelength c/fC (m)
    range_resolution: float  # c/(2B) (m)
    max_range: float         # Nk * range_resolution (m)

    @property
    def Nk(self) -> int:
        return self.params.Nk


def derive_waveform(p: WaveformParams) -> DerivedWaveform:
    """Compute the derived sampling quantities for a chirp. Pure function."""
    bandwidth = p.K * p.Nk / p.fS
    dk = 2.0 * math.pi * p.K / (C * p.fS)
    if dk <= 0.0 or not math.isfinite(dk):
        raise ValueError(f"degenerate wavenumber step dk={dk!r} (check K and fS)")
    rres = C / (2.0 * bandwidth)
    return DerivedWaveform(
        params=p,
        bandwidth=bandwidth,
        k0=2.0 * math.pi * p.f0 / C,
        dk=dk,
        lambda_c=C / p.fC,
        range_resolution=rres,
        max_range=p.Nk * rres,
    )


def wavenumber_axis(d: DerivedWaveform) -> np.ndarray:
    """k_n = k0 + dk*n for n = 0..Nk-1, strictly increasing."""
    return d.k0 + d.dk * np.arange(d.Nk, dtype=np.float64)


def resolution(d: DerivedWaveform, Dx: float, Dy: float, Z0: float) -> tuple[float, float, float]:
    """Cross-range and down-range resolution for an aperture of extent Dx x Dy
    at standoff Z0: (lambda_c*Z0/(2*Dx), lambda_c*Z0/(2*Dy), c/(2*B))."""
    for name, val in (("Dx", Dx), ("Dy", Dy), ("Z0", Z0)):
        if not (math.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be positive and finite, got {val!r}")
    return (
        d.lambda_c * Z0 / (2.0 * Dx),
        d.lambda_c * Z0 / (2.0 * Dy),
        d.range_resolution,
    )


def sampling_bounds(v_max: float, lambda_c: float, r_max: float) -> tuple[float, float]:
    """(minimum PRF to keep Doppler unambiguous, maximum frequency step for
    unambiguous range): (4*v_max/lambda_c, c/(2*r_max))."""
    for name, val in (("v_max", v_max), ("lambda_c", lambda_c), ("r_max", r_max)):
        if not (math.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be positive and finite, got {val!r}")
    return 4.0 * v_max / lambda_c, C / (2.0 * r_max)
