"""MIMO arrays, scan patterns, and synthetic-aperture pose synthesis.

Coordinate conventions used throughout the toolkit:

* planar scans live in the x-y plane at z = Z0 + dz, with targets typically
  near z = 0 (standoff Z0 > 0) or, equivalently, the array at z = 0 and
  targets downrange; the math does not care which side as long as the caller
  is consistent
* pattern positions are centered on the scan origin: (i - (N-1)/2) * step
* pose ordering is row-major with y fastest (theta-major, y fastest for
  cylindrical); this ordering is part of the file-format contract
* circular/cylindrical scans put the antenna at (R0 cos(theta), y,
  R0 sin(theta)); theta_i = -theta_max/2 + (i + 0.5) * theta_max / Ntheta,
  so a full circle with Ntheta=4 samples {-3pi/4, -pi/4, pi/4, 3pi/4}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PLANAR_MODES = ("linear", "rectilinear", "irregular")
ANGULAR_MODES = ("circular", "cylindrical")
MODES = PLANAR_MODES + ANGULAR_MODES


@dataclass(frozen=True)
class AntennaArray:
    """Tx/Rx element layout on the platform plane.

    Element coordinates are (x, y) offsets in meters relative to the platform
    position. use_epc=True collapses each Tx/Rx pair to its midpoint virtual
    element (the equivalent-phase-center approximation).
    """

    tx: tuple[tuple[float, float], ...]
    rx: tuple[tuple[float, float], ...]
    z_array: float = 0.0   # configured default standoff, used by CLI/server configs
    use_epc: bool = False

    def __post_init__(self) -> None:
        if len(self.tx) < 1 or len(self.rx) < 1:
            raise ValueError("array needs at least one Tx and one Rx element")
        for name, elems in (("tx", self.tx), ("rx", self.rx)):
            for e in elems:
                if len(e) != 2 or not all(math.isfinite(v) for v in e):
                    raise ValueError(f"{name} element positions must be finite (x, y) pairs")

    @classmethod
    def monostatic(cls) -> "AntennaArray":
        """Single collocated Tx/Rx at the platform origin."""
        return cls(tx=((0.0, 0.0),), rx=((0.0, 0.0),))


@dataclass(frozen=True)
class ScanPattern:
    """Ordered platform displacements.

    poses is an (n, 3) float64 array. For planar modes the columns are
    (x', y', dz); for angular modes (theta, y', dz) with dz fixed at 0.
    """

    mode: str
    poses: np.ndarray
    spec: dict = field(default_factory=dict)
    seed: int | None = None
    radius: float | None = None  # ring radius for angular modes

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown scan mode {self.mode!r}, expected one of {MODES}")
        p = np.asarray(self.poses, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ValueError("poses must be a nonempty (n, 3) array")
        object.__setattr__(self, "poses", p)
        if self.mode in ANGULAR_MODES and (self.radius is None or self.radius <= 0):
            raise ValueError("angular modes require a positive ring radius")

    def __len__(self) -> int:
        return self.poses.shape[0]


@dataclass(frozen=True)
class AperturePose:
    """One synthetic-aperture sample: physical Tx/Rx plus the virtual midpoint."""

    tx: tuple[float, float, float]
    rx: tuple[float, float, float]
    virtual: tuple[float, float, float]
    dx: float  # rx.x - tx.x
    dy: float  # rx.y - tx.y
    dz: float  # plane offset of this pose relative to the reference plane


def _centered(n: int, step: float) -> np.ndarray:
    # (i - (n-1)/2) * step; bit-identical between gen_pattern and gen_irregular
    return (np.arange(n, dtype=np.float64) - (n - 1) / 2.0) * step


def gen_pattern(
    mode: str,
    *,
    dx: float | None = None,
    dy: float | None = None,
    nx: int = 1,
    ny: int = 1,
    theta_max: float | None = None,
    n_theta: int = 1,
    radius: float | None = None,
) -> ScanPattern:
    """Generate a regular scan pattern.

    linear: ny poses along y (step dy). rectilinear: nx*ny raster.
    circular: n_theta angles spanning theta_max centered on zero, ring radius
    required. cylindrical: n_theta * ny grid.
    """
    if mode == "linear":
        if ny < 1 or (ny > 1 and (dy is None or dy <= 0)):
            raise ValueError("linear mode needs ny >= 1 and a positive dy step")
        ys = _centered(ny, dy if dy else 1.0)
        poses = np.column_stack([np.zeros(ny), ys, np.zeros(ny)])
        spec = {"dy_m": dy, "ny": ny}
    elif mode == "rectilinear":
        if nx < 1 or ny < 1:
            raise ValueError("rectilinear mode needs nx, ny >= 1")
        if (nx > 1 and (dx is None or dx <= 0)) or (ny > 1 and (dy is None or dy <= 0)):
            raise ValueError("rectilinear mode needs positive dx, dy steps")
        xs = _centered(nx, dx if dx else 1.0)
        ys = _centered(ny, dy if dy else 1.0)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")  # row-major, y fastest
        poses = np.column_stack([gx.ravel(), gy.ravel(), np.zeros(nx * ny)])
        spec = {"dx_m": dx, "dy_m": dy, "nx": nx, "ny": ny}
    elif mode in ("circular", "cylindrical"):
        if theta_max is None or theta_max <= 0 or n_theta < 1:
            raise ValueError(f"{mode} mode needs positive theta_max and n_theta >= 1")
        if radius is None or radius <= 0:
            raise ValueError(f"{mode} mode needs a positive ring radius")
        thetas = -theta_max / 2.0 + (np.arange(n_theta) + 0.5) * theta_max / n_theta
        if mode == "circular":
            poses = np.column_stack([thetas, np.zeros(n_theta), np.zeros(n_theta)])
            spec = {"theta_max_rad": theta_max, "n_theta": n_theta, "radius_m": radius}
        else:
            if ny < 1 or (ny > 1 and (dy is None or dy <= 0)):
                raise ValueError("cylindrical mode needs ny >= 1 and a positive dy step")
            ys = _centered(ny, dy if dy else 1.0)
            gt, gy = np.meshgrid(thetas, ys, indexing="ij")  # theta-major, y fastest
            poses = np.column_stack([gt.ravel(), gy.ravel(), np.zeros(n_theta * ny)])
            spec = {"theta_max_rad": theta_max, "n_theta": n_theta, "dy_m": dy,
                    "ny": ny, "radius_m": radius}
    else:
        raise ValueError(f"unknown scan mode {mode!r}")
    return ScanPattern(mode=mode, poses=poses, spec=spec, radius=radius)


def _smooth_walk(rng: np.random.Generator, count: int, extent: float,
                 symmetric: bool) -> np.ndarray:
    """Gaussian random walk, moving-average smoothed, affinely rescaled.

    symmetric=True maps [min, max] onto [-extent, extent] (dz tracks);
    symmetric=False maps span onto extent centered on zero (x tracks).
    """
    steps = rng.standard_normal(count)
    walk = np.cumsum(steps)
    w = max(3, count // 32)
    kernel = np.ones(w) / w
    padded = np.concatenate([np.full(w // 2, walk[0]), walk, np.full(w - 1 - w // 2, walk[-1])])
    smooth = np.convolve(padded, kernel, mode="valid")
    lo, hi = smooth.min(), smooth.max()
    if extent == 0.0 or hi == lo:
        return np.zeros(count)
    unit = (smooth - lo) / (hi - lo)  # [0, 1]
    if symmetric:
        return (2.0 * unit - 1.0) * extent
    return (unit - 0.5) * extent


def gen_irregular(extent_x: float, extent_y: float, dz_max: float,
                  count: int, seed: int) -> ScanPattern:
    """Semi-smooth random track: exact centered y grid spanning extent_y, with
    x and dz following smoothed random walks rescaled to extent_x / +-dz_max.
    Deterministic for a fixed seed."""
    if count < 2:
        raise ValueError("irregular pattern needs count >= 2")
    if dz_max < 0:
        raise ValueError("dz_max must be >= 0")
    rng = np.random.default_rng(seed)
    ys = _centered(count, extent_y / (count - 1) if count > 1 else 1.0)
    xs = _smooth_walk(rng, count, extent_x, symmetric=False)
    dzs = _smooth_walk(rng, count, dz_max, symmetric=True)
    poses = np.column_stack([xs, ys, dzs])
    spec = {"extent_x_m": extent_x, "extent_y_m": extent_y,
            "dz_max_m": dz_max, "count": count}
    return ScanPattern(mode="irregular", poses=poses, spec=spec, seed=seed)


def synthesize_aperture(array: AntennaArray, pattern: ScanPattern,
                        Z0: float) -> list[AperturePose]:
    """Expand a scan pattern into per-sample Tx/Rx/virtual poses.

    Planar modes: element (x, y) offsets add to the platform position on the
    plane z = Z0 + dz. Angular modes: offsets are applied in the local frame
    (tangential, y) at ring radius R0, so a (0, 0) element sits exactly at
    (R0 cos t, y, R0 sin t). With use_epc, each Tx/Rx pair contributes one
    monostatic pose at the pair midpoint.
    """
    out: list[AperturePose] = []
    angular = pattern.mode in ANGULAR_MODES
    r0 = pattern.radius if angular else None

    for row in pattern.poses:
        if angular:
            theta, ypos, dz = float(row[0]), float(row[1]), float(row[2])
            base = np.array([r0 * math.cos(theta), ypos, r0 * math.sin(theta)])
            that = np.array([-math.sin(theta), 0.0, math.cos(theta)])
            yhat = np.array([0.0, 1.0, 0.0])
        else:
            xpos, ypos, dz = float(row[0]), float(row[1]), float(row[2])
            base = np.array([xpos, ypos, Z0 + dz])
            that = np.array([1.0, 0.0, 0.0])
            yhat = np.array([0.0, 1.0, 0.0])

        for ex_t, ey_t in array.tx:
            t = base + ex_t * that + ey_t * yhat
            for ex_r, ey_r in array.rx:
                r = base + ex_r * that + ey_r * yhat
                if array.use_epc:
                    v = (t + r) / 2.0
                    out.append(AperturePose(
                        tx=tuple(v), rx=tuple(v), virtual=tuple(v),
                        dx=0.0, dy=0.0, dz=dz))
                else:
                    v = (t + r) / 2.0
                    out.append(AperturePose(
                        tx=tuple(t), rx=tuple(r), virtual=tuple(v),
                        dx=float(r[0] - t[0]), dy=float(r[1] - t[1]), dz=dz))
    return out


def poses_to_arrays(poses: list[AperturePose]) -> dict[str, np.ndarray]:
    """Stack a pose list into contiguous arrays for vectorized kernels."""
    n = len(poses)
    tx = np.empty((n, 3)); rx = np.empty((n, 3)); virt = np.empty((n, 3))
    dx = np.empty(n); dy = np.empty(n); dz = np.empty(n)
    for i, p in enumerate(poses):
        tx[i] = p.tx; rx[i] = p.rx; virt[i] = p.virtual
        dx[i] = p.dx; dy[i] = p.dy; dz[i] = p.dz
    return {"tx": tx, "rx": rx, "virtual": virt, "dx": dx, "dy": dy, "dz": dz}


def arrays_to_poses(virt: np.ndarray, dz: np.ndarray | None = None) -> list[AperturePose]:
    """Monostatic poses from an (n, 3) array of virtual positions."""
    if dz is None:
        dz = np.zeros(len(virt))
    return [AperturePose(tx=tuple(v), rx=tuple(v), virtual=tuple(v),
                         dx=0.0, dy=0.0, dz=float(d))
            for v, d in zip(np.asarray(virt, float), dz)]
