"""Beat-signal simulation, noise, and multistatic/multi-planar phase compensation.

Sign convention: every simulated sample is exp(-j * k * R_total) with
R_total the exact Tx-to-target-to-Rx path. Reconstruction kernels that were
derived in the opposite convention conjugate internally; the convention tag
travels with every BeatCube so files are self-describing.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import AperturePose, poses_to_arrays
from .scene import Scene
from .waveform import DerivedWaveform, wavenumber_axis

CONVENTION = "exp(-j k R)"

# pose rows per work block; fixed so the reduction order (and therefore the
# bit pattern of the result) never depends on the thread count
_BLOCK = 256


@dataclass(frozen=True)
class BeatCube:
    """Complex beat samples, one row per aperture pose, one column per k bin."""

    samples: np.ndarray           # (num_poses, Nk) complex
    poses: tuple[AperturePose, ...]
    waveform: DerivedWaveform
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ValueError("samples must be a 2-D (poses x Nk) array")
        if s.shape[0] != len(self.poses):
            raise ValueError(f"{s.shape[0]} sample rows but {len(self.poses)} poses")
        if s.shape[1] != self.waveform.Nk:
            raise ValueError(f"{s.shape[1]} columns but waveform Nk={self.waveform.Nk}")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "poses", tuple(self.poses))
        m = dict(self.meta)
        m.setdefault("convention", CONVENTION)
        object.__setattr__(self, "meta", m)

    @property
    def num_poses(self) -> int:
        return self.samples.shape[0]


def _block_rows(tx: np.ndarray, rx: np.ndarray, kaxis: np.ndarray,
                positions: np.ndarray, refl: np.ndarray, pathloss: bool) -> np.ndarray:
    out = np.zeros((tx.shape[0], kaxis.size), dtype=np.complex128)
    for pos, alpha in zip(positions, refl):
        rt = np.linalg.norm(tx - pos, axis=1)
        rr = np.linalg.norm(rx - pos, axis=1)
        if np.any(rt == 0.0) or np.any(rr == 0.0):
            raise ValueError(f"scatterer at {tuple(pos)} coincides with an antenna (R = 0)")
        phase = np.exp(-1j * np.outer(rt + rr, kaxis))
        if pathloss:
            out += (alpha / (rt * rr))[:, None] * phase
        else:
            out += alpha * phase
    return out


def beat_signal(scene: Scene, poses: list[AperturePose] | tuple[AperturePose, ...],
                waveform: DerivedWaveform, pathloss: bool = False,
                threads: int = 1) -> BeatCube:
    """Simulate the beat cube for a scene over an aperture.

    samples[s, n] = sum_i alpha_i * A * exp(-j k_n (R_T + R_R)) with exact
    Euclidean path lengths and A = 1/(R_T R_R) when pathloss is on, else 1.
    Work is split over fixed pose blocks, so any thread count produces the
    same bits.
    """
    if len(scene) == 0:
        raise ValueError("scene is empty")
    if len(poses) == 0:
        raise ValueError("aperture has no poses")
    arrs = poses_to_arrays(list(poses))
    kaxis = wavenumber_axis(waveform)
    positions = scene.positions()
    refl = scene.reflectivities()

    blocks = [(i, min(i + _BLOCK, len(poses))) for i in range(0, len(poses), _BLOCK)]
    samples = np.empty((len(poses), waveform.Nk), dtype=np.complex128)

    def run(span):
        lo, hi = span
        return lo, _block_rows(arrs["tx"][lo:hi], arrs["rx"][lo:hi],
                               kaxis, positions, refl, pathloss)

    if threads <= 1 or len(blocks) == 1:
        results = map(run, blocks)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        try:
            results = list(pool.map(run, blocks))
        finally:
            pool.shutdown()
    for lo, rows in results:
        samples[lo:lo + rows.shape[0]] = rows

    return BeatCube(samples=samples, poses=tuple(poses), waveform=waveform,
                    meta={"pathloss": bool(pathloss), "convention": CONVENTION})


def add_awgn(cube: BeatCube, snr_db: float | None, seed: int = 0) -> BeatCube:
    """Add complex white Gaussian noise at the requested cube-level SNR.

    snr_db None or +inf returns the cube unchanged. Deterministic per seed.
    """
    if snr_db is None or math.isinf(snr_db):
        return cube
    p_sig = float(np.mean(np.abs(cube.samples) ** 2))
    sigma2 = p_sig / (10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    shape = cube.samples.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * math.sqrt(sigma2 / 2.0)
    meta = dict(cube.meta)
    meta["snr_db"] = float(snr_db)
    return replace(cube, samples=cube.samples + noise, meta=meta)


def mult_to_mono(cube: BeatCube, z_ref: float) -> BeatCube:
    """Collapse bistatic pairs to their midpoint virtual elements.

    Each row is multiplied by exp(+j k_n (dx^2 + dy^2)/(4 z_ref)), the
    quadratic phase a midpoint monostatic element would be missing; poses are
    replaced by the virtual monostatic ones (dz is kept, this is not the
    multi-planar step).
    """
    if z_ref <= 0:
        raise ValueError(f"z_ref must be positive, got {z_ref!r}")
    kaxis = wavenumber_axis(cube.waveform)
    arrs = poses_to_arrays(list(cube.poses))
    beta = (arrs["dx"] ** 2 + arrs["dy"] ** 2) / (4.0 * z_ref)
    samples = cube.samples * np.exp(1j * np.outer(beta, kaxis))
    new_poses = tuple(
        AperturePose(tx=p.virtual, rx=p.virtual, virtual=p.virtual,
                     dx=0.0, dy=0.0, dz=p.dz)
        for p in cube.poses)
    meta = dict(cube.meta)
    meta["mult_to_mono_zref_m"] = float(z_ref)
    return BeatCube(samples=samples, poses=new_poses, waveform=cube.waveform, meta=meta)


def _empm_samples(cube: BeatCube, Z0: float, arrs: dict | None = None) -> np.ndarray:
    """Multi-planar compensation kernel: rows gain exp(+j k_n beta) with
    beta = 2 dz + (dx^2 + dy^2)/(4 Z0)."""
    if Z0 <= 0:
        raise ValueError(f"Z0 must be positive, got {Z0!r}")
    kaxis = wavenumber_axis(cube.waveform)
    if arrs is None:
        arrs = poses_to_arrays(list(cube.poses))
    beta = 2.0 * arrs["dz"] + (arrs["dx"] ** 2 + arrs["dy"] ** 2) / (4.0 * Z0)
    return cube.samples * np.exp(1j * np.outer(beta, kaxis))


def empm_compensate(cube: BeatCube, Z0: float) -> BeatCube:
    """Project multi-planar multistatic samples onto the plane z = Z0.

    Rows gain exp(+j k_n beta) with beta = 2 dz + (dx^2 + dy^2)/(4 Z0); poses
    become monostatic virtual elements on the reference plane. Valid when
    targets sit on the far side of the plane (Z0 - z_target > 0).
    """
    samples = _empm_samples(cube, Z0)
    new_poses = tuple(
        AperturePose(tx=(p.virtual[0], p.virtual[1], Z0),
                     rx=(p.virtual[0], p.virtual[1], Z0),
                     virtual=(p.virtual[0], p.virtual[1], Z0),
                     dx=0.0, dy=0.0, dz=0.0)
        for p in cube.poses)
    meta = dict(cube.meta)
    meta["empm_z0_m"] = float(Z0)
    return BeatCube(samples=samples, poses=new_poses, waveform=cube.waveform, meta=meta)


def round_trip_exact(pose: AperturePose, scatter_pos) -> float:
    """Exact two-way path length |tx - p| + |rx - p|."""
    p = np.asarray(scatter_pos, dtype=np.float64)
    return float(np.linalg.norm(np.asarray(pose.tx) - p)
                 + np.linalg.norm(np.asarray(pose.rx) - p))


def round_trip_taylor(pose: AperturePose, scatter_pos, Z0: float) -> float:
    """Quadratic approximation of the two-way path in the element offsets.

    Expands around the virtual midpoint (x', y') on the reference plane Z0:

        2 R0 + 2 (Z0 - z) dz / R0 + (dx^2 + dy^2 + 4 dz^2) / (4 R0)
             - [((x'-x) dx + (y'-y) dy)^2 + 4 (Z0 - z)^2 dz^2] / (4 R0^3)

    with R0 the one-way distance from (x', y', Z0) to the scatterer. Exact
    when dx = dy = dz = 0.
    """
    x, y, z = (float(v) for v in scatter_pos)
    xp, yp = pose.virtual[0], pose.virtual[1]
    ex, ey, w = xp - x, yp - y, Z0 - z
    r0 = math.sqrt(ex * ex + ey * ey + w * w)
    dx, dy, dz = pose.dx, pose.dy, pose.dz
    lin = 2.0 * w * dz / r0
    quad = (dx * dx + dy * dy + 4.0 * dz * dz) / (4.0 * r0)
    cross = ((ex * dx + ey * dy) ** 2 + 4.0 * w * w * dz * dz) / (4.0 * r0 ** 3)
    return 2.0 * r0 + lin + quad - cross
