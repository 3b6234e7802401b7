"""Target scenes: ideal point scatterers from lists, rasters, or random draws."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("x_m", "y_m", "z_m", "refl_re", "refl_im")


@dataclass(frozen=True)
class PointScatterer:
    position: tuple[float, float, float]
    reflectivity: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if len(self.position) != 3 or not all(math.isfinite(v) for v in self.position):
            raise ValueError(f"scatterer position must be finite (x, y, z), got {self.position!r}")
        if not (math.isfinite(self.reflectivity.real) and math.isfinite(self.reflectivity.imag)):
            raise ValueError("scatterer reflectivity must be finite")


@dataclass(frozen=True)
class Scene:
    scatterers: tuple[PointScatterer, ...]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "scatterers", tuple(self.scatterers))

    def __len__(self) -> int:
        return len(self.scatterers)

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.scatterers], dtype=np.float64)

    def reflectivities(self) -> np.ndarray:
        return np.array([s.reflectivity for s in self.scatterers], dtype=np.complex128)

    def translated(self, delta: tuple[float, float, float]) -> "Scene":
        return Scene(
            scatterers=tuple(
                PointScatterer(
                    position=(s.position[0] + delta[0],
                              s.position[1] + delta[1],
                              s.position[2] + delta[2]),
                    reflectivity=s.reflectivity)
                for s in self.scatterers),
            label=self.label)


def from_raster(grid: np.ndarray, origin: tuple[float, float, float],
                pixel_pitch: float, reflect_scale: float = 1.0,
                downsample: int = 1) -> Scene:
    """One scatterer per retained nonzero pixel of a 2-D real raster.

    Rows map to y, columns to x; positions are origin + pitch * (index in the
    downsampled grid). Default reflect_scale=1 (raster units are reflectivity).
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise ValueError("raster grid must be a nonempty 2-D array")
    if pixel_pitch <= 0:
        raise ValueError("pixel_pitch must be positive")
    if downsample < 1:
        raise ValueError("downsample must be >= 1")
    g = g[::downsample, ::downsample]
    rows, cols = np.nonzero(g)
    if len(rows) == 0:
        raise ValueError("raster contains no nonzero pixels; scene would be empty")
    scatterers = tuple(
        PointScatterer(
            position=(origin[0] + pixel_pitch * float(c),
                      origin[1] + pixel_pitch * float(r),
                      origin[2]),
            reflectivity=complex(g[r, c] * reflect_scale))
        for r, c in zip(rows, cols))
    return Scene(scatterers=scatterers, label="raster")


def random_points(n: int, bounds, amp: str = "unit", seed: int = 0) -> Scene:
    """n scatterers uniform in bounds = ((x0,x1),(y0,y1),(z0,z1)).

    amp="unit" gives reflectivity 1; amp="complex-normal" draws CN(0,1).
    Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    b = [(float(lo), float(hi)) for lo, hi in bounds]
    if len(b) != 3:
        raise ValueError("bounds must give (lo, hi) for x, y, z")
    for lo, hi in b:
        if hi < lo:
            raise ValueError(f"empty bounds: [{lo}, {hi}]")
    if amp not in ("unit", "complex-normal"):
        raise ValueError(f"unknown reflectivity law {amp!r}")
    rng = np.random.default_rng(seed)
    pos = np.column_stack([rng.uniform(lo, hi, n) for lo, hi in b])
    if amp == "complex-normal":
        refl = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    else:
        refl = np.ones(n, dtype=np.complex128)
    return Scene(
        scatterers=tuple(PointScatterer(position=tuple(p), reflectivity=complex(a))
                         for p, a in zip(pos, refl)),
        label=f"random-{n}")


def save_csv(scene: Scene, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for s in scene.scatterers:
            w.writerow([repr(float(v)) for v in s.position]
                       + [repr(float(s.reflectivity.real)), repr(float(s.reflectivity.imag))])


def load_csv(path: str | Path) -> Scene:
    scatterers = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected header {','.join(CSV_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise ValueError(f"{path}: line {lineno}: expected 5 columns, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as e:
                raise ValueError(f"{path}: line {lineno}: {e}") from None
            scatterers.append(PointScatterer(
                position=(vals[0], vals[1], vals[2]),
                reflectivity=complex(vals[3], vals[4])))
    if not scatterers:
        raise ValueError(f"{path}: no scatterers found")
    return Scene(scatterers=tuple(scatterers), label=str(path))


def letters_scene() -> Scene:
    """The packaged 21-point demo scene (letter shapes in the y-z plane)."""
    ref = resources.files("nearsar").joinpath("data/letters_scene.csv")
    with resources.as_file(ref) as p:
        sc = load_csv(p)
    return Scene(scatterers=sc.scatterers, label="letters-21")
