"""Image and signal quality metrics plus point-spread-function analysis.

The dynamic range L for PSNR and SSIM is the reference image's maximum;
magnitude images start at zero, so max and range usually coincide. SSIM is
the global single-window form: one mean, variance, and covariance per image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_HALF_POWER = 10.0 ** (-3.0 / 20.0)   # amplitude at the -3 dB point


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(x, reference) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf.

    Asymmetric by design: the peak is taken from the reference, so swapping
    arguments changes the result unless both maxima agree.
    """
    a, b = _pair(x, reference)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    peak = float(b.max())
    return 10.0 * math.log10(peak * peak / mse)


def ssim(x, reference, k1: float = 0.01, k2: float = 0.03) -> float:
    """Global structural similarity in [-1, 1]; ssim(x, x) == 1 exactly.

    A reference with a nonpositive maximum falls back to unit dynamic range
    so the stabilizing constants stay positive.
    """
    a, b = _pair(x, reference)
    peak = float(b.max())
    if peak <= 0.0:
        peak = 1.0
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    mu_a = float(a.mean())
    mu_b = float(b.mean())
    var_a = float(a.var())
    var_b = float(b.var())
    cov = float(((a - mu_a) * (b - mu_b)).mean())
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def nrmse(x, reference) -> float:
    """Root-mean-square error normalized by the reference dynamic range."""
    a, b = _pair(x, reference)
    span = float(b.max() - b.min())
    if span == 0.0:
        raise ValueError("reference has zero dynamic range")
    return float(np.sqrt(np.mean((a - b) ** 2))) / span


def efficiency_score(accuracy: float, time_seconds: float) -> float:
    """Accuracy-per-time figure of merit: 20 log10(accuracy / time)."""
    if not 0.0 < accuracy <= 1.0:
        raise ValueError(f"accuracy must lie in (0, 1], got {accuracy}")
    if time_seconds <= 0.0:
        raise ValueError(f"time must be positive, got {time_seconds}")
    return 20.0 * math.log10(accuracy / time_seconds)


@dataclass(frozen=True)
class PsfReport:
    """Mainlobe and sidelobe summary of a focused point response.

    One -3 dB width per non-singleton axis; pslr_db is the worst (largest)
    peak sidelobe level across those axes, or None when every profile falls
    off monotonically.
    """

    width_3db_m: tuple[float, ...]
    pslr_db: float | None
    peak_location_m: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(w <= 0 for w in self.width_3db_m):
            raise ValueError("mainlobe widths must be positive")
        if self.pslr_db is not None and self.pslr_db > 0:
            raise ValueError("peak sidelobe ratio cannot exceed 0 dB")


def _crossing(profile: np.ndarray, axis: np.ndarray, peak: int, thr: float,
              step: int) -> float:
    """Axis location where the profile first drops below thr, linearly
    interpolated between samples; step is -1 (left) or +1 (right)."""
    i = peak
    while 0 <= i + step < len(profile):
        j = i + step
        if profile[j] < thr:
            t = (thr - profile[i]) / (profile[j] - profile[i])
            return float(axis[i] + t * (axis[j] - axis[i]))
        i = j
    raise ValueError("mainlobe is not contained within the axis span")


def _axis_pslr(profile: np.ndarray, peak: int) -> float | None:
    """Largest local maximum outside the mainlobe, in dB relative to the
    peak. The mainlobe ends at the first local minimum on each side."""
    def first_min(step: int) -> int | None:
        i = peak
        while 0 <= i + step < len(profile):
            if profile[i + step] >= profile[i]:
                return i
            i += step
        return None

    best = None
    for step in (-1, 1):
        bound = first_min(step)
        if bound is None:
            continue
        i = bound + step
        while 0 <= i < len(profile):
            lo = profile[i - 1] if i - 1 >= 0 else -np.inf
            hi = profile[i + 1] if i + 1 < len(profile) else -np.inf
            if profile[i] >= lo and profile[i] >= hi and profile[i] > 0:
                if best is None or profile[i] > best:
                    best = profile[i]
            i += step
    if best is None:
        return None
    return 20.0 * math.log10(best / profile[peak])


def psf_report(img, axes=None) -> PsfReport:
    """Measure the point response in an image.

    Accepts an object with .values/.axes attributes or a bare array plus an
    axes sequence. Widths come from 1-D cuts through the global peak.
    """
    if axes is None:
        values = np.asarray(img.values, dtype=np.float64)
        axes = img.axes
    else:
        values = np.asarray(img, dtype=np.float64)
    axes = tuple(np.asarray(a, dtype=np.float64) for a in axes)
    if values.ndim != len(axes):
        raise ValueError("one axis per image dimension required")
    if values.max() == values.min():
        raise ValueError("flat image has no point response")

    peak_idx = np.unravel_index(int(np.argmax(values)), values.shape)
    peak_val = float(values[peak_idx])
    thr = peak_val * _HALF_POWER

    widths = []
    pslrs = []
    for dim, ax in enumerate(axes):
        if values.shape[dim] == 1:
            continue
        cut = [slice(None) if d == dim else peak_idx[d] for d in range(values.ndim)]
        profile = values[tuple(cut)]
        p = int(peak_idx[dim])
        left = _crossing(profile, ax, p, thr, -1)
        right = _crossing(profile, ax, p, thr, +1)
        widths.append(abs(right - left))
        axis_pslr = _axis_pslr(profile, p)
        if axis_pslr is not None:
            pslrs.append(axis_pslr)

    if not widths:
        raise ValueError("image has no non-singleton axis to profile")
    location = tuple(float(ax[i]) for ax, i in zip(axes, peak_idx))
    return PsfReport(width_3db_m=tuple(widths),
                     pslr_db=max(pslrs) if pslrs else None,
                     peak_location_m=location)


def metrics_report(x, reference, time_s: float = 0.0) -> dict:
    """The standard fidelity bundle serialized by the CLI and server."""
    return {
        "psnr_db": psnr(x, reference),
        "ssim": ssim(x, reference),
        "nrmse": nrmse(x, reference),
        "time_s": float(time_s),
    }
