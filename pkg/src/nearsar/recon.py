"""Image reconstruction: back-projection, Fourier/range-migration, polar-format,
and multi-planar compensation pipelines.

Depth-axis convention for the Fourier algorithms: under the exp(-j k R)
simulation convention, the spatial FFT of an aperture maps a point target to
exp(-j(kx x_t + ky y_t)) * exp(-j kz w_t) where w_t is the target's depth
measured from the array plane (always positive, regardless of which side the
target is on). Images are therefore formed on a w axis and relabeled to
absolute z as z_plane + w or z_plane - w, the side chosen from the requested
grid's center. No conjugation is needed anywhere in the RMA path; the
polar-format kernels were derived in the opposite sign convention and
conjugate the cube once at entry.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .geometry import AperturePose, arrays_to_poses, poses_to_arrays
from .simulate import BeatCube, _empm_samples
from .waveform import wavenumber_axis

_POSE_TOL = 1e-9   # meters; aperture-uniformity tolerance
_BPA_BLOCK = 16    # poses per back-projection block (fixed => deterministic)


@dataclass(frozen=True)
class GridSpec:
    """Reconstruction grid: (lo, hi, n) per axis; n = 1 collapses the axis to
    its midpoint."""

    x: tuple[float, float, int]
    y: tuple[float, float, int]
    z: tuple[float, float, int]

    def __post_init__(self) -> None:
        for name, (lo, hi, n) in (("x", self.x), ("y", self.y), ("z", self.z)):
            if n < 1:
                raise ValueError(f"grid {name}: voxel count must be >= 1")
            if n > 1 and hi <= lo:
                raise ValueError(f"grid {name}: needs hi > lo for {n} voxels")

    @staticmethod
    def _axis(spec: tuple[float, float, int]) -> np.ndarray:
        lo, hi, n = spec
        if n == 1:
            return np.array([(lo + hi) / 2.0])
        return np.linspace(lo, hi, n)

    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._axis(self.x), self._axis(self.y), self._axis(self.z)

    def to_dict(self) -> dict:
        return {"x_m": list(self.x), "y_m": list(self.y), "z_m": list(self.z)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        def tup(v):
            lo, hi, n = v
            return (float(lo), float(hi), int(n))
        return cls(x=tup(d["x_m"]), y=tup(d["y_m"]), z=tup(d["z_m"]))


@dataclass(frozen=True)
class ImageVolume:
    """Reflectivity magnitude on a regular grid with physical axes (m)."""

    values: np.ndarray
    axes: tuple[np.ndarray, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != len(self.axes):
            raise ValueError(f"{v.ndim}-D values with {len(self.axes)} axes")
        for i, ax in enumerate(self.axes):
            if len(ax) != v.shape[i]:
                raise ValueError(f"axis {i}: {len(ax)} coords for {v.shape[i]} voxels")
            if len(ax) > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"axis {i} must be strictly increasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "axes", tuple(np.asarray(a, float) for a in self.axes))

    def argmax_coords(self) -> tuple[float, ...]:
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return tuple(float(self.axes[d][i]) for d, i in enumerate(idx))


@dataclass(frozen=True)
class SpectrumGrid:
    """Spectral samples on transverse wavenumber axes x (k or kz) radial axis."""

    values: np.ndarray                    # shape = (*transverse lens, n_spectral)
    transverse: tuple[np.ndarray, ...]    # (kx,) or (kx, ky) axes (rad/m)
    spectral: np.ndarray                  # k or kz axis (rad/m)
    kind: str                             # "k" | "kz"

    def __post_init__(self) -> None:
        if self.kind not in ("k", "kz"):
            raise ValueError("SpectrumGrid kind must be 'k' or 'kz'")
        expect = tuple(len(a) for a in self.transverse) + (len(self.spectral),)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != axes {expect}")


# ---------------------------------------------------------------- helpers

def _phasor32(theta: np.ndarray) -> np.ndarray:
    """exp(j*theta) as complex64 via float32 trig (about 10x faster than
    complex exp on commodity CPUs; plenty of phase accuracy for imaging)."""
    th = np.asarray(theta, dtype=np.float32)
    out = np.empty(th.shape, dtype=np.complex64)
    np.cos(th, out=out.real)
    np.sin(th, out=out.imag)
    return out


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def _pad_len(n: int) -> int:
    # spatial FFT default: next power of two >= 2x aperture samples
    return 1 if n == 1 else _next_pow2(2 * n)


def _axis_index(vals: np.ndarray, name: str) -> tuple[np.ndarray, float, np.ndarray]:
    """Group coordinates that agree to within the pose tolerance, check the
    unique values form a uniform axis, and return (coords, step, index per
    input). Representative coords are originals, not rounded, so downstream
    phase terms keep full precision."""
    keys = np.round(vals / _POSE_TOL).astype(np.int64)
    uk, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    u = np.asarray(vals)[first]
    if len(u) == 1:
        return u, 0.0, inv
    d = np.diff(u)
    if not np.allclose(d, d[0], rtol=1e-6, atol=_POSE_TOL):
        raise ValueError(f"nonuniform aperture: {name} spacing varies")
    return u, float(d[0]), inv


def _monostatic_lattice(cube: BeatCube):
    """Map cube rows onto a uniform (nx, ny) lattice; raises if impossible."""
    arrs = poses_to_arrays(list(cube.poses))
    if np.any(np.abs(arrs["dx"]) > _POSE_TOL) or np.any(np.abs(arrs["dy"]) > _POSE_TOL):
        raise ValueError("nonuniform aperture: poses are not monostatic "
                         "(run a multistatic compensation first)")
    virt = arrs["virtual"]
    zs = virt[:, 2]
    if zs.max() - zs.min() > _POSE_TOL:
        raise ValueError("nonuniform aperture: poses are not coplanar")
    z_plane = float(zs.mean())
    xs, dx, ix = _axis_index(virt[:, 0], "x")
    ys, dy, iy = _axis_index(virt[:, 1], "y")
    nx, ny = len(xs), len(ys)
    if nx * ny != cube.num_poses:
        raise ValueError(f"nonuniform aperture: {cube.num_poses} poses do not "
                         f"fill a {nx} x {ny} lattice")
    seen = np.zeros((nx, ny), dtype=bool)
    seen[ix, iy] = True
    if not seen.all():
        raise ValueError("nonuniform aperture: lattice has duplicates or holes")
    grid = np.zeros((nx, ny, cube.samples.shape[1]), dtype=np.complex128)
    grid[ix, iy] = cube.samples
    return grid, xs, ys, dx, dy, z_plane


def _unwrap_axis(n: int, d: float, center: float) -> tuple[np.ndarray, np.ndarray]:
    """Periodic FFT output coords i*d relabeled into the window centered on
    `center`; returns (sorted coords, permutation)."""
    coords = np.arange(n) * d
    span = n * d
    wrapped = center + np.mod(coords - center + span / 2.0, span) - span / 2.0
    order = np.argsort(wrapped)
    return wrapped[order], order


def _resample_magnitude(values: np.ndarray, nat_axes: list[np.ndarray],
                        grid_axes: list[np.ndarray]) -> np.ndarray:
    """Linear interpolation of |image| from its natural lattice onto the
    requested grid; zero outside the computed window. Singleton axes pass
    through untouched."""
    keep = [i for i, ax in enumerate(nat_axes) if len(ax) > 1]
    vals = values
    for i in reversed(range(len(nat_axes))):
        if len(nat_axes[i]) == 1:
            vals = np.take(vals, 0, axis=i)
    if not keep:
        out = np.full([len(a) for a in grid_axes], float(vals))
        return out
    interp = RegularGridInterpolator(
        [nat_axes[i] for i in keep], vals, method="linear",
        bounds_error=False, fill_value=0.0)
    mesh = np.meshgrid(*[grid_axes[i] for i in keep], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    res = interp(pts).reshape([len(grid_axes[i]) for i in keep])
    # restore singleton axes in place
    for i in range(len(grid_axes)):
        if i not in keep:
            res = np.expand_dims(res, axis=i)
            if len(grid_axes[i]) != 1:
                res = np.repeat(res, len(grid_axes[i]), axis=i)
    return res


def _depth_to_z(grid_z: np.ndarray, z_plane: float) -> tuple[np.ndarray, int]:
    """Map requested absolute z coords to depths w from the array plane.
    Side (above/below) picked from the grid center."""
    side = 1 if float(np.mean(grid_z)) >= z_plane else -1
    return side * (grid_z - z_plane), side


def _timed(meta: dict, t0: float) -> dict:
    meta["time_s"] = time.perf_counter() - t0
    return meta


# ---------------------------------------------------------------- back-projection

def bpa(cube: BeatCube, grid: GridSpec, threads: int = 1,
        complex_output: bool = False) -> ImageVolume:
    """Back-projection: voxel-wise conjugate matched filter.

    value(v) = |sum_s sum_n samples[s, n] exp(+j k_n (R_T + R_R))|. Exact for
    any geometry, including multistatic poses; cost scales with
    poses x voxels x k-bins. The k-sum is evaluated by Horner recursion so
    only two phasor arrays per pose block are needed.

    complex_output stores the complex accumulator in meta["complex_values"]
    so per-voxel phase histories can feed Doppler processing.
    """
    t0 = time.perf_counter()
    ax, ay, az = grid.axes()
    X, Y, Z = np.meshgrid(ax, ay, az, indexing="ij")
    vox = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1).astype(np.float32)
    nvox = vox.shape[0]

    arrs = poses_to_arrays(list(cube.poses))
    tx = arrs["tx"].astype(np.float32)
    rx = arrs["rx"].astype(np.float32)
    mono = bool(np.all(tx == rx))
    s64 = np.ascontiguousarray(cube.samples.astype(np.complex64))
    nk = s64.shape[1]
    k0, dk = cube.waveform.k0, cube.waveform.dk

    blocks = [(i, min(i + _BPA_BLOCK, cube.num_poses))
              for i in range(0, cube.num_poses, _BPA_BLOCK)]

    def run(span):
        lo, hi = span
        d = vox[None, :, :] - tx[lo:hi, None, :]
        rtot = np.sqrt(np.einsum("pvc,pvc->pv", d, d))
        if mono:
            rtot = rtot + rtot
        else:
            d = vox[None, :, :] - rx[lo:hi, None, :]
            rtot = rtot + np.sqrt(np.einsum("pvc,pvc->pv", d, d))
        z1 = _phasor32(np.float32(dk) * rtot)
        poly = np.repeat(s64[lo:hi, -1][:, None], nvox, axis=1)
        for n in range(nk - 2, -1, -1):
            poly *= z1
            poly += s64[lo:hi, n][:, None]
        poly *= _phasor32(np.float32(k0) * rtot)
        return poly.sum(axis=0)

    if threads <= 1 or len(blocks) == 1:
        partials = map(run, blocks)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run, blocks))
    acc = np.zeros(nvox, dtype=np.complex128)
    for part in partials:          # fixed order: bit-identical for any thread count
        acc += part
    img = np.abs(acc).reshape(X.shape)
    meta = {"algorithm": "bpa"}
    if complex_output:
        meta["complex_values"] = acc.reshape(X.shape)
    return ImageVolume(values=img, axes=(ax, ay, az), meta=_timed(meta, t0))


# ---------------------------------------------------------------- spatial FFTs

def _aperture_fft(grid: np.ndarray, coords0: tuple[float, ...], steps: tuple[float, ...],
                  axes: tuple[int, ...]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Zero-padded FFT over the given spatial axes with absolute-origin phase
    offsets, so S carries exp(-j k_x x') for physical x'."""
    S = grid.astype(np.complex128)
    kaxes: list[np.ndarray] = []
    for ax_i, x0, d in zip(axes, coords0, steps):
        n = S.shape[ax_i]
        if n == 1:
            k = np.zeros(1)
        else:
            nfft = _pad_len(n)
            S = np.fft.fft(S, n=nfft, axis=ax_i)
            k = 2.0 * np.pi * np.fft.fftfreq(nfft, d=d)
        shape = [1] * S.ndim
        shape[ax_i] = len(k)
        S *= np.exp(-1j * k.reshape(shape) * x0)
        kaxes.append(k)
    return S, kaxes


def stolt(sg: SpectrumGrid, nkz: int | None = None,
          kz_axis: np.ndarray | None = None) -> SpectrumGrid:
    """Resample a (transverse, k) spectrum onto a uniform kz axis, where
    k = sqrt(kz^2 + kx^2 + ky^2) / 2. Linear interpolation along k; bins
    whose required k falls outside the sampled band are zero; the evanescent
    region (4 k^2 < kx^2 + ky^2) never maps into the axis and stays zero.
    """
    if sg.kind != "k":
        raise ValueError("stolt expects a (transverse, k) spectrum")
    k = sg.spectral
    if len(k) < 2:
        raise ValueError("stolt needs at least two k bins")
    k0, kmax = float(k[0]), float(k[-1])
    dk = (kmax - k0) / (len(k) - 1)   # full-span estimate: least cancellation
    tr = sg.transverse
    if len(tr) == 1:
        kxy2 = tr[0][:, None] ** 2          # (nkx, 1)
    else:
        kxy2 = tr[0][:, None] ** 2 + tr[1][None, :] ** 2
    if kz_axis is None:
        supported = kxy2[kxy2 <= 4 * kmax * kmax]
        peak = float(supported.max()) if supported.size else 0.0
        kz_lo = math.sqrt(max(4 * k0 * k0 - peak, 0.0))
        n_out = nkz if nkz is not None else _next_pow2(2 * len(k))
        kz_axis = np.linspace(kz_lo, 2 * kmax, n_out)
    kz_axis = np.asarray(kz_axis, dtype=np.float64)

    flat = sg.values.reshape(-1, len(k))
    kxy2f = kxy2.reshape(-1)
    out = np.zeros((flat.shape[0], len(kz_axis)), dtype=sg.values.dtype)
    nk = len(k)
    rows = np.arange(flat.shape[0])
    for m, kz in enumerate(kz_axis):
        kneed = np.sqrt(kz * kz + kxy2f) / 2.0
        t = (kneed - k0) / dk
        valid = (t >= -1e-9) & (t <= nk - 1 + 1e-9)   # slack for band-edge rounding
        t = np.clip(t, 0.0, float(nk - 1))
        i0 = np.clip(t.astype(np.int64), 0, nk - 2)
        frac = t - i0
        vals = flat[rows, i0] * (1.0 - frac) + flat[rows, np.minimum(i0 + 1, nk - 1)] * frac
        out[:, m] = np.where(valid, vals, 0.0)
    return SpectrumGrid(values=out.reshape(sg.values.shape[:-1] + (len(kz_axis),)),
                        transverse=sg.transverse, spectral=kz_axis, kind="kz")


def _rma_core(cube: BeatCube, grid: GridSpec, with_kz_amplitude: bool,
              algorithm: str) -> ImageVolume:
    """Shared RMA pipeline: aperture FFT -> (kz amplitude) -> Stolt ->
    grid-center depth modulation -> inverse FFT -> resample to the grid."""
    t0 = time.perf_counter()
    gridded, xs, ys, dxs, dys, z_plane = _monostatic_lattice(cube)
    return _rma_on_lattice(gridded, xs, ys, dxs, dys, z_plane, cube.waveform,
                           grid, with_kz_amplitude, algorithm, t0)


def _rma_on_lattice(gridded: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                    dxs: float, dys: float, z_plane: float, waveform,
                    grid: GridSpec, with_kz_amplitude: bool, algorithm: str,
                    t0: float) -> ImageVolume:
    kvec = wavenumber_axis(waveform)
    S, (kx, ky) = _aperture_fft(gridded, (float(xs[0]), float(ys[0])),
                                (dxs or 1.0, dys or 1.0), (0, 1))
    kxy2 = kx[:, None] ** 2 + ky[None, :] ** 2
    kz_on_k = 4.0 * kvec[None, None, :] ** 2 - kxy2[:, :, None]
    prop = kz_on_k > 0.0
    kz_on_k = np.sqrt(np.where(prop, kz_on_k, 0.0))
    if with_kz_amplitude:
        S *= kz_on_k
    else:
        S *= prop
    del kz_on_k, prop

    sg = stolt(SpectrumGrid(values=S, transverse=(kx, ky), spectral=kvec, kind="k"))
    del S
    kz = sg.spectral
    dkz = float(kz[1] - kz[0])

    ax, ay, az = grid.axes()
    w_grid, _ = _depth_to_z(az, z_plane)
    w_c = float(np.mean(w_grid))
    P = sg.values
    P *= np.exp(1j * kz * w_c)

    mag = np.abs(np.fft.ifftn(P, axes=(0, 1, 2)))
    del P, sg

    xc = float(xs.mean()); yc = float(ys.mean())
    nat = []
    for axis_i, (n, d, center) in enumerate((
            (mag.shape[0], dxs or 1.0, xc),
            (mag.shape[1], dys or 1.0, yc),
            (mag.shape[2], 2 * np.pi / (len(kz) * dkz), 0.0))):
        if n == 1:
            nat.append(np.array([center if axis_i < 2 else 0.0]))
            continue
        coords, order = _unwrap_axis(n, d, center)
        mag = np.take(mag, order, axis=axis_i)
        nat.append(coords)
    # depth deviations (w - w_c) -> requested z coords
    vals = _resample_magnitude(mag, nat, [ax, ay, w_grid - w_c])
    return ImageVolume(values=vals, axes=(ax, ay, az),
                       meta=_timed({"algorithm": algorithm, "z_plane_m": z_plane}, t0))


def rma_rectilinear_3d(cube: BeatCube, grid: GridSpec) -> ImageVolume:
    """Range-migration imaging for a uniform planar monostatic aperture."""
    return _rma_core(cube, grid, with_kz_amplitude=True, algorithm="rma_rectilinear_3d")


def rma_linear_2d(cube: BeatCube, grid: GridSpec) -> ImageVolume:
    """Range migration for a 1-D (linear) aperture; image over (y, z)."""
    vol = _rma_core(cube, grid, with_kz_amplitude=False, algorithm="rma_linear_2d")
    return ImageVolume(values=vol.values[0], axes=(vol.axes[1], vol.axes[2]),
                       meta=vol.meta)


def _single_plane_fft(cube: BeatCube, z0: float, with_kz_amplitude: bool,
                      algorithm: str) -> tuple[np.ndarray, list[np.ndarray], dict]:
    t0 = time.perf_counter()
    gridded, xs, ys, dxs, dys, z_plane = _monostatic_lattice(cube)
    kvec = wavenumber_axis(cube.waveform)
    S, (kx, ky) = _aperture_fft(gridded, (float(xs[0]), float(ys[0])),
                                (dxs or 1.0, dys or 1.0), (0, 1))
    kxy2 = kx[:, None] ** 2 + ky[None, :] ** 2
    kz2 = 4.0 * kvec[None, None, :] ** 2 - kxy2[:, :, None]
    prop = kz2 > 0.0
    kz = np.sqrt(np.where(prop, kz2, 0.0))
    w0 = abs(z0 - z_plane)
    H = np.exp(1j * kz * w0) * prop
    if with_kz_amplitude:
        H = H * kz
    G = (S * H).sum(axis=2)
    img = np.fft.ifft2(G)
    mag = np.abs(img)
    nat = []
    for axis_i, (d, center, coordvals) in enumerate(
            ((dxs or 1.0, float(xs.mean()), xs), (dys or 1.0, float(ys.mean()), ys))):
        n = mag.shape[axis_i]
        if n == 1:
            nat.append(np.array([float(coordvals[0])]))
            continue
        coords, order = _unwrap_axis(n, d, center)
        mag = np.take(mag, order, axis=axis_i)
        nat.append(coords)
    meta = _timed({"algorithm": algorithm, "z_plane_m": z_plane, "z0_m": z0}, t0)
    return mag, nat, meta


def fft_rectilinear_2d(cube: BeatCube, z0: float) -> ImageVolume:
    """Single-plane Fourier imaging over (x, y) for targets at z = z0; image
    returned on the natural FFT lattice."""
    mag, nat, meta = _single_plane_fft(cube, z0, with_kz_amplitude=True,
                                       algorithm="fft_rectilinear_2d")
    return ImageVolume(values=mag, axes=(nat[0], nat[1]), meta=meta)


def fft_linear_1d(cube: BeatCube, z0: float) -> ImageVolume:
    """1-D Fourier imaging along y for a linear aperture, targets at z = z0."""
    mag, nat, meta = _single_plane_fft(cube, z0, with_kz_amplitude=False,
                                       algorithm="fft_linear_1d")
    if mag.shape[0] != 1:
        raise ValueError("nonuniform aperture: fft_linear_1d needs a single-column "
                         "(linear) aperture")
    return ImageVolume(values=mag[0], axes=(nat[1],), meta=meta)


# ---------------------------------------------------------------- polar format

def _ring_layout(cube: BeatCube):
    arrs = poses_to_arrays(list(cube.poses))
    tx = arrs["tx"]
    theta = np.arctan2(tx[:, 2], tx[:, 0])
    ys, dy, iy = _axis_index(tx[:, 1], "y")
    th_u, dth, it = _axis_index(theta, "theta")
    if len(th_u) * len(ys) != cube.num_poses:
        raise ValueError("nonuniform aperture: poses do not fill a theta x y grid")
    seen = np.zeros((len(th_u), len(ys)), dtype=bool)
    seen[it, iy] = True
    if not seen.all():
        raise ValueError("nonuniform aperture: theta x y grid has duplicates or holes")
    grid = np.zeros((len(th_u), len(ys), cube.samples.shape[1]), dtype=np.complex128)
    grid[it, iy] = cube.samples
    return grid, th_u, dth, ys, (dy if len(ys) > 1 else 0.0)


def _polar_reformat(C: np.ndarray, theta: np.ndarray, kr: np.ndarray,
                    n_cart: int) -> tuple[np.ndarray, float]:
    """(theta, kr) polar samples -> uniform Cartesian (kx, kz) grid covering
    the annulus; outside the sampled support -> 0."""
    kr_max = float(kr[-1])
    kcart = np.linspace(-kr_max, kr_max, n_cart)
    dk_cart = float(kcart[1] - kcart[0])
    full_circle = abs((theta[-1] - theta[0]) + (theta[1] - theta[0]) - 2 * np.pi) < 1e-6
    th = theta
    vals = C
    if full_circle:
        th = np.concatenate([theta, theta[:1] + 2 * np.pi])
        vals = np.concatenate([C, C[:1]], axis=0)
    interp_re = RegularGridInterpolator((th, kr), vals.real, method="linear",
                                        bounds_error=False, fill_value=0.0)
    interp_im = RegularGridInterpolator((th, kr), vals.imag, method="linear",
                                        bounds_error=False, fill_value=0.0)
    KX, KZ = np.meshgrid(kcart, kcart, indexing="ij")
    rho = np.hypot(KX, KZ)
    ang = np.arctan2(KZ, KX)
    if full_circle:
        ang = np.mod(ang - th[0], 2 * np.pi) + th[0]
    pts = np.stack([ang.ravel(), rho.ravel()], axis=-1)
    P = (interp_re(pts) + 1j * interp_im(pts)).reshape(n_cart, n_cart)
    return P, dk_cart


def _lag_angles(n: int, dth: float) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic-correlation lag m maps to rotation angle m*dth; wrap the lags
    into a window centered on zero and return (sorted angles, permutation)."""
    period = n * dth
    alpha = np.mod(np.arange(n) * dth + period / 2.0, period) - period / 2.0
    order = np.argsort(alpha)
    return alpha[order], order


def pfa_circular_2d(cube: BeatCube, ring_radius: float, grid: GridSpec,
                    n_cart: int = 1024) -> ImageVolume:
    """Polar-format imaging for a circular aperture; image over (x, z) in
    ring-centered coordinates (frame offset zero). Accurate for targets near
    the ring center; n_cart sets the spectral grid, sized so the residual
    far-field ring artifact wraps outside the scene neighborhood."""
    t0 = time.perf_counter()
    gridded, theta, dth, ys, _ = _ring_layout(cube)
    if gridded.shape[1] != 1:
        raise ValueError("circular aperture must have a single y position")
    s = np.conj(gridded[:, 0, :])              # enter the derivation's convention
    kvec = wavenumber_axis(cube.waveform)
    kernel = np.exp(2j * np.outer(np.cos(theta), kvec) * ring_radius)
    Sd = np.fft.fft(s, axis=0)
    Gd = np.fft.fft(kernel, axis=0)
    C = np.fft.ifft(Sd * np.conj(Gd), axis=0)  # circular correlation over theta
    alpha, order = _lag_angles(len(theta), dth)
    P, dk_cart = _polar_reformat(C[order], alpha, 2.0 * kvec, n_cart)
    img = np.abs(np.fft.ifft2(P))
    coords, order = _unwrap_axis(n_cart, 2 * np.pi / (n_cart * dk_cart), 0.0)
    img = img[np.ix_(order, order)]
    ax, ay, az = grid.axes()
    vals = _resample_magnitude(img, [coords, coords], [ax, az])
    vals = vals.reshape(len(ax), 1, len(az))
    if len(ay) != 1:
        vals = np.repeat(vals, len(ay), axis=1)
    return ImageVolume(values=vals, axes=(ax, ay, az),
                       meta=_timed({"algorithm": "pfa_circular_2d",
                                    "ring_radius_m": ring_radius}, t0))


def pfa_cylindrical_3d(cube: BeatCube, ring_radius: float, grid: GridSpec,
                       n_cart: int = 256) -> ImageVolume:
    """Polar-format imaging for a cylindrical (theta x y) aperture."""
    t0 = time.perf_counter()
    gridded, theta, dth, ys, dy = _ring_layout(cube)
    ntheta, ny = gridded.shape[0], gridded.shape[1]
    s = np.conj(gridded)
    kvec = wavenumber_axis(cube.waveform)
    nyf = _pad_len(ny)
    S = np.fft.fft(s, n=nyf, axis=1) if ny > 1 else s
    ky = 2 * np.pi * np.fft.fftfreq(nyf, d=dy) if ny > 1 else np.zeros(1)
    S = S * np.exp(-1j * ky[None, :, None] * float(ys[0]))
    kr2 = 4.0 * kvec[None, :] ** 2 - ky[:, None] ** 2        # (nyf, nk)
    prop = kr2 > 0.0
    kr = np.sqrt(np.where(prop, kr2, 0.0))
    # theta-domain kernel per (ky, k); correlation over theta as in the 2-D case
    kernel = np.exp(1j * np.cos(theta)[:, None, None] * kr[None, :, :] * ring_radius)
    Sd = np.fft.fft(S, axis=0)
    Gd = np.fft.fft(kernel * prop[None, :, :], axis=0)
    C = np.fft.ifft(Sd * np.conj(Gd), axis=0)                # (ntheta, nyf, nk)
    alpha, order = _lag_angles(ntheta, dth)
    C = C[order]

    kr_max = 2.0 * float(kvec[-1])
    kcart = np.linspace(-kr_max, kr_max, n_cart)
    dk_cart = float(kcart[1] - kcart[0])
    KX, KZ = np.meshgrid(kcart, kcart, indexing="ij")
    rho = np.hypot(KX, KZ).ravel()
    ang = np.arctan2(KZ, KX).ravel()
    full_circle = abs(ntheta * dth - 2 * np.pi) < 1e-6
    th = np.concatenate([alpha, alpha[:1] + 2 * np.pi]) if full_circle else alpha
    if full_circle:
        ang = np.mod(ang - th[0], 2 * np.pi) + th[0]
    P = np.zeros((n_cart, nyf, n_cart), dtype=np.complex128)
    k0, dk = float(kvec[0]), float(kvec[1] - kvec[0])
    for j in range(nyf):
        slab = np.concatenate([C[:, j, :], C[:1, j, :]], axis=0) if full_circle else C[:, j, :]
        # required k for each cartesian sample given this ky
        k_need2 = (rho ** 2 + ky[j] ** 2) / 4.0
        k_need = np.sqrt(k_need2)
        ire = RegularGridInterpolator((th, kvec), slab.real, method="linear",
                                      bounds_error=False, fill_value=0.0)
        iim = RegularGridInterpolator((th, kvec), slab.imag, method="linear",
                                      bounds_error=False, fill_value=0.0)
        pts = np.stack([ang, k_need], axis=-1)
        P[:, j, :] = (ire(pts) + 1j * iim(pts)).reshape(n_cart, n_cart)

    img = np.abs(np.fft.ifftn(P, axes=(0, 1, 2)))
    cx, ox = _unwrap_axis(n_cart, 2 * np.pi / (n_cart * dk_cart), 0.0)
    img = np.take(img, ox, axis=0)
    img = np.take(img, ox, axis=2)
    if nyf > 1:
        cy, oy = _unwrap_axis(nyf, dy, float(ys.mean()))
        img = np.take(img, oy, axis=1)
    else:
        cy = np.array([float(ys[0])])
    ax, ay, az = grid.axes()
    vals = _resample_magnitude(img, [cx, cy, cx], [ax, ay, az])
    return ImageVolume(values=vals, axes=(ax, ay, az),
                       meta=_timed({"algorithm": "pfa_cylindrical_3d",
                                    "ring_radius_m": ring_radius}, t0))


# ---------------------------------------------------------------- EMPM

def _lattice_accumulate(virt: np.ndarray, samples: np.ndarray,
                        pitch: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Snap transverse positions to a pitch lattice and average collisions.
    Empty cells stay zero.  Returns (acc (nx, ny, Nk), xs, ys)."""
    if pitch <= 0:
        raise ValueError("lattice pitch must be positive")
    x0 = float(virt[:, 0].min())
    y0 = float(virt[:, 1].min())
    ix = np.round((virt[:, 0] - x0) / pitch).astype(np.int64)
    iy = np.round((virt[:, 1] - y0) / pitch).astype(np.int64)
    nx, ny = int(ix.max()) + 1, int(iy.max()) + 1
    acc = np.zeros((nx, ny, samples.shape[1]), dtype=np.complex128)
    cnt = np.zeros((nx, ny), dtype=np.int64)
    np.add.at(acc, (ix, iy), samples)
    np.add.at(cnt, (ix, iy), 1)
    filled = cnt > 0
    acc[filled] /= cnt[filled][:, None]
    xs = x0 + pitch * np.arange(nx)
    ys = y0 + pitch * np.arange(ny)
    return acc, xs, ys


def grid_to_lattice(cube: BeatCube, pitch: float) -> BeatCube:
    """Accumulate (possibly irregular) monostatic samples onto a uniform
    lattice: nearest lattice point, collisions averaged, empty cells zero."""
    arrs = poses_to_arrays(list(cube.poses))
    virt = arrs["virtual"]
    z_plane = float(virt[:, 2].mean())
    acc, xs, ys = _lattice_accumulate(virt, cube.samples, pitch)
    nx, ny = len(xs), len(ys)
    nk = cube.samples.shape[1]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    positions = np.stack([gx.ravel(), gy.ravel(), np.full(nx * ny, z_plane)], axis=1)
    poses = arrays_to_poses(positions)
    meta = dict(cube.meta)
    meta["gridded_pitch_m"] = float(pitch)
    return BeatCube(samples=acc.reshape(nx * ny, nk), poses=tuple(poses),
                    waveform=cube.waveform, meta=meta)


def empm_reconstruct(cube: BeatCube, Z0: float, grid: GridSpec,
                     pitch: float | None = None) -> ImageVolume:
    """Multi-planar multistatic pipeline: phase-compensate onto the plane
    z = Z0, grid the virtual samples onto a uniform lattice (default pitch
    lambda_c/4), then run the rectilinear RMA.  Works on flat arrays
    throughout; the pose-level composition empm_compensate ->
    grid_to_lattice -> rma_rectilinear_3d yields the same image."""
    t0 = time.perf_counter()
    p = float(pitch) if pitch is not None else cube.waveform.lambda_c / 4.0
    arrs = poses_to_arrays(list(cube.poses))
    samples = _empm_samples(cube, Z0, arrs)
    acc, xs, ys = _lattice_accumulate(arrs["virtual"], samples, p)
    dxs = float(xs[1] - xs[0]) if len(xs) > 1 else 0.0
    dys = float(ys[1] - ys[0]) if len(ys) > 1 else 0.0
    vol = _rma_on_lattice(acc, xs, ys, dxs, dys, float(Z0), cube.waveform,
                          grid, with_kz_amplitude=True, algorithm="empm", t0=t0)
    meta = dict(vol.meta)
    meta["pitch_m"] = p
    return ImageVolume(values=vol.values, axes=vol.axes, meta=meta)
