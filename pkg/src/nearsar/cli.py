"""Command-line front end: JSON-configured simulation, reconstruction, PSF
sweeps, multiband jobs, metric evaluation, and the HTTP service launcher.

Configs are single JSON documents with unit-suffixed keys (…_m, …_Hz, …_dB).
Validation failures name the offending field by its JSON path and exit 2;
non-finite numeric results exit 3; success exits 0. Binary outputs are
deterministic for a fixed seed regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import fileio
from .geometry import (
    ANGULAR_MODES,
    AntennaArray,
    MODES,
    gen_irregular,
    gen_pattern,
    synthesize_aperture,
)
from .metrics import metrics_report, psf_report
from .multiband import (
    SubbandSpec,
    apply_band_mask,
    dataset_gen,
    gen_fullband,
    mft_fuse,
    spec_to_dict,
    two_peak_resolution_test,
)
from .recon import (
    GridSpec,
    bpa,
    empm_reconstruct,
    fft_linear_1d,
    fft_rectilinear_2d,
    pfa_circular_2d,
    pfa_cylindrical_3d,
    rma_linear_2d,
    rma_rectilinear_3d,
)
from .scene import PointScatterer, Scene, letters_scene, load_csv, random_points
from .simulate import add_awgn, beat_signal
from .waveform import WaveformParams, derive_waveform

ALGORITHMS = ("bpa", "rma", "rma_linear", "fft_planar", "fft_linear",
              "pfa_circular", "pfa_cylindrical", "empm")


class ConfigError(ValueError):
    """Validation failure pointing at a JSON path inside the config."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"config error at {path}: {message}")


class NumericError(RuntimeError):
    """A computation produced non-finite values."""


# ------------------------------------------------------------- validation

def _section(cfg: dict, key: str, parent: str = "", required: bool = True) -> dict | None:
    path = f"{parent}.{key}" if parent else key
    if key not in cfg:
        if required:
            raise ConfigError(path, "missing required section")
        return None
    value = cfg[key]
    if not isinstance(value, dict):
        raise ConfigError(path, "expected an object")
    return value


def _number(d: dict, key: str, parent: str, *, required: bool = True,
            default: float | None = None, positive: bool = False) -> float | None:
    path = f"{parent}.{key}"
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(path, "missing required number")
        return default
    value = d[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(path, f"must be positive, got {value}")
    return float(value)


def _integer(d: dict, key: str, parent: str, *, required: bool = True,
             default: int | None = None, minimum: int | None = None) -> int | None:
    path = f"{parent}.{key}"
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(path, "missing required integer")
        return default
    value = d[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return int(value)


def _triple(d: dict, key: str, parent: str) -> tuple[float, float, int]:
    path = f"{parent}.{key}"
    value = d.get(key)
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
        raise ConfigError(path, "expected [low_m, high_m, count]")
    lo, hi, n = value
    if int(n) != n or n < 1:
        raise ConfigError(path, f"count must be a positive integer, got {n!r}")
    return float(lo), float(hi), int(n)


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("$", f"cannot read config file: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("$", "top-level value must be an object")
    version = cfg.get("version", 1)
    if version != 1:
        raise ConfigError("version", f"unsupported config version {version!r}")
    return cfg


def shipped_config_path(name: str = "single_point.json") -> Path:
    """Location of a config bundled with the package."""
    return Path(str(resources.files("nearsar").joinpath("data", name)))


def parse_waveform(cfg: dict, parent: str = "") -> "object":
    d = _section(cfg, "waveform", parent)
    p = f"{parent}.waveform" if parent else "waveform"
    for key in ("f0_Hz", "K_Hz_per_s", "fS_Hz", "fC_Hz"):
        _number(d, key, p, positive=True)
    _integer(d, "Nk", p, minimum=1)
    try:
        return derive_waveform(WaveformParams.from_dict(d))
    except (ValueError, KeyError) as exc:
        raise ConfigError(p, str(exc)) from exc


def parse_array(cfg: dict, parent: str = "") -> AntennaArray:
    d = _section(cfg, "array", parent, required=False)
    p = f"{parent}.array" if parent else "array"
    if d is None or d.get("mode", "monostatic") == "monostatic":
        return AntennaArray.monostatic()
    if d.get("mode") != "mimo":
        raise ConfigError(f"{p}.mode", f"expected 'monostatic' or 'mimo', got {d.get('mode')!r}")

    def elements(key: str) -> tuple[tuple[float, float], ...]:
        value = d.get(key)
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{p}.{key}", "expected a nonempty list of [x_m, y_m] pairs")
        out = []
        for i, e in enumerate(value):
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise ConfigError(f"{p}.{key}[{i}]", "expected an [x_m, y_m] pair")
            out.append((float(e[0]), float(e[1])))
        return tuple(out)

    use_epc = d.get("use_epc", True)
    if not isinstance(use_epc, bool):
        raise ConfigError(f"{p}.use_epc", "expected true or false")
    try:
        return AntennaArray(tx=elements("tx_m"), rx=elements("rx_m"), use_epc=use_epc)
    except ValueError as exc:
        raise ConfigError(p, str(exc)) from exc


def parse_pattern(cfg: dict, parent: str = "", seed_override: int | None = None) -> "object":
    d = _section(cfg, "pattern", parent)
    p = f"{parent}.pattern" if parent else "pattern"
    mode = d.get("mode")
    if mode not in MODES:
        raise ConfigError(f"{p}.mode", f"expected one of {MODES}, got {mode!r}")
    try:
        if mode == "irregular":
            seed = _integer(d, "seed", p, required=False, default=0)
            if seed_override is not None:
                seed = seed_override
            return gen_irregular(
                extent_x=_number(d, "extent_x_m", p, required=False, default=0.0),
                extent_y=_number(d, "extent_y_m", p, positive=True),
                dz_max=_number(d, "dz_max_m", p, required=False, default=0.0),
                count=_integer(d, "count", p, minimum=1),
                seed=seed)
        if mode in ANGULAR_MODES:
            return gen_pattern(
                mode,
                theta_max=_number(d, "theta_max_rad", p, positive=True),
                n_theta=_integer(d, "n_theta", p, minimum=1),
                radius=_number(d, "radius_m", p, positive=True),
                dy=_number(d, "dy_m", p, required=False),
                ny=_integer(d, "ny", p, required=False, default=1, minimum=1))
        return gen_pattern(
            mode,
            dx=_number(d, "dx_m", p, required=False),
            dy=_number(d, "dy_m", p, required=False),
            nx=_integer(d, "nx", p, required=False, default=1, minimum=1),
            ny=_integer(d, "ny", p, required=False, default=1, minimum=1))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(p, str(exc)) from exc


def parse_scene(cfg: dict, parent: str = "") -> Scene:
    d = _section(cfg, "scene", parent)
    p = f"{parent}.scene" if parent else "scene"
    kinds = [k for k in ("points", "csv_path", "letters", "random") if k in d]
    if len(kinds) != 1:
        raise ConfigError(p, "exactly one of points / csv_path / letters / random required")
    kind = kinds[0]
    if kind == "letters":
        if d["letters"] is not True:
            raise ConfigError(f"{p}.letters", "expected true")
        return letters_scene()
    if kind == "csv_path":
        try:
            return load_csv(d["csv_path"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{p}.csv_path", str(exc)) from exc
    if kind == "random":
        r = _section(d, "random", p)
        rp = f"{p}.random"
        bounds = r.get("bounds_m")
        if (not isinstance(bounds, list) or len(bounds) != 3
                or any(not isinstance(b, (list, tuple)) or len(b) != 2 for b in bounds)):
            raise ConfigError(f"{rp}.bounds_m", "expected [[xlo,xhi],[ylo,yhi],[zlo,zhi]]")
        return random_points(
            n=_integer(r, "count", rp, minimum=1),
            bounds=tuple(tuple(map(float, b)) for b in bounds),
            seed=_integer(r, "seed", rp, required=False, default=0))
    points = d["points"]
    if not isinstance(points, list) or not points:
        raise ConfigError(f"{p}.points", "expected a nonempty list")
    scatterers = []
    for i, pt in enumerate(points):
        pp = f"{p}.points[{i}]"
        if not isinstance(pt, dict):
            raise ConfigError(pp, "expected an object")
        pos = pt.get("position_m")
        if not isinstance(pos, (list, tuple)) or len(pos) != 3:
            raise ConfigError(f"{pp}.position_m", "expected [x_m, y_m, z_m]")
        refl = pt.get("reflectivity", [1.0, 0.0])
        if isinstance(refl, (int, float)) and not isinstance(refl, bool):
            refl = [float(refl), 0.0]
        if not isinstance(refl, (list, tuple)) or len(refl) != 2:
            raise ConfigError(f"{pp}.reflectivity", "expected [real, imag] or a number")
        try:
            scatterers.append(PointScatterer(
                position=tuple(float(v) for v in pos),
                reflectivity=complex(float(refl[0]), float(refl[1]))))
        except ValueError as exc:
            raise ConfigError(pp, str(exc)) from exc
    return Scene(scatterers=tuple(scatterers))


def parse_grid(d: dict, parent: str) -> GridSpec:
    g = _section(d, "grid", parent)
    p = f"{parent}.grid"
    try:
        return GridSpec(x=_triple(g, "x_m", p), y=_triple(g, "y_m", p),
                        z=_triple(g, "z_m", p))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(p, str(exc)) from exc


def parse_subband_spec(cfg: dict, parent: str = "") -> SubbandSpec:
    d = _section(cfg, "multiband", parent, required=False)
    if d is None or "bands" not in d:
        return SubbandSpec.default()
    p = f"{parent}.multiband" if parent else "multiband"
    bands = d.get("bands")
    if not isinstance(bands, list) or not bands:
        raise ConfigError(f"{p}.bands", "expected a nonempty list of [startFreq_Hz, Nk]")
    parsed = []
    for i, b in enumerate(bands):
        if not isinstance(b, (list, tuple)) or len(b) != 2:
            raise ConfigError(f"{p}.bands[{i}]", "expected [startFreq_Hz, Nk]")
        parsed.append((float(b[0]), int(b[1])))
    try:
        return SubbandSpec(bands=tuple(parsed), df=_number(d, "df_Hz", p, positive=True))
    except ValueError as exc:
        raise ConfigError(f"{p}.bands", str(exc)) from exc


# ------------------------------------------------------------- shared steps

def _effective_seed(cfg: dict, args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")
    return seed


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{what} contains non-finite values")


def _simulate_from_config(cfg: dict, seed: int, threads: int):
    wf = parse_waveform(cfg)
    array = parse_array(cfg)
    pattern = parse_pattern(cfg, seed_override=None)
    sc = parse_scene(cfg)
    standoff = cfg.get("standoff_m", 0.0)
    if isinstance(standoff, bool) or not isinstance(standoff, (int, float)):
        raise ConfigError("standoff_m", f"expected a number, got {standoff!r}")
    sim = _section(cfg, "simulate", required=False) or {}
    pathloss = sim.get("pathloss", False)
    if not isinstance(pathloss, bool):
        raise ConfigError("simulate.pathloss", "expected true or false")
    poses = synthesize_aperture(array, pattern, float(standoff))
    start = time.perf_counter()
    cube = beat_signal(sc, poses, wf, pathloss=pathloss, threads=threads)
    noise = _section(cfg, "noise", required=False)
    if noise is not None:
        snr = _number(noise, "snr_dB", "noise", required=False)
        if snr is not None:
            cube = add_awgn(cube, snr, seed=seed)
    elapsed = time.perf_counter() - start
    _check_finite(cube.samples.view(np.float64), "beat signal")
    meta = {**cube.meta, "time_s": elapsed, "seed": seed, "standoff_m": float(standoff)}
    return replace(cube, meta=meta), pattern


def _reconstruct(cfg: dict, cube, algorithm: str | None, threads: int):
    rcfg = _section(cfg, "reconstruct")
    p = "reconstruct"
    algo = algorithm or rcfg.get("algorithm")
    if algo not in ALGORITHMS:
        raise ConfigError(f"{p}.algorithm", f"expected one of {ALGORITHMS}, got {algo!r}")
    needs_grid = algo not in ("fft_planar", "fft_linear")
    grid = parse_grid(rcfg, p) if needs_grid else None
    if algo == "bpa":
        vol = bpa(cube, grid, threads=threads)
    elif algo == "rma":
        vol = rma_rectilinear_3d(cube, grid)
    elif algo == "rma_linear":
        vol = rma_linear_2d(cube, grid)
    elif algo == "fft_planar":
        vol = fft_rectilinear_2d(cube, _number(rcfg, "z0_m", p, positive=True))
    elif algo == "fft_linear":
        vol = fft_linear_1d(cube, _number(rcfg, "z0_m", p, positive=True))
    elif algo == "pfa_circular":
        vol = pfa_circular_2d(cube, _number(rcfg, "ring_radius_m", p, positive=True), grid)
    elif algo == "pfa_cylindrical":
        vol = pfa_cylindrical_3d(cube, _number(rcfg, "ring_radius_m", p, positive=True), grid)
    else:
        z0 = _number(rcfg, "z0_m", p, required=False)
        if z0 is None:
            z0 = cube.meta.get("standoff_m", 0.0)
            if z0 <= 0:
                raise ConfigError(f"{p}.z0_m", "empm needs the reference plane distance")
        pitch = _number(rcfg, "pitch_m", p, required=False)
        vol = empm_reconstruct(cube, z0, grid, pitch=pitch)
    _check_finite(vol.values, "image")
    return vol


def _json_metrics(report: dict) -> dict:
    out = {}
    for key, value in report.items():
        if isinstance(value, float) and not np.isfinite(value):
            out[key] = None
        else:
            out[key] = value
    return out


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _out_path(args, kind: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(fileio.default_artifact_name(kind))


def _require_config(args) -> dict:
    if args.config is None:
        raise ConfigError("$", "this command needs --config")
    return load_config(args.config)


# ------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    cfg = _require_config(args)
    seed = _effective_seed(cfg, args)
    cube, _ = _simulate_from_config(cfg, seed, args.threads)
    out = _out_path(args, "beatcube")
    fileio.save_beatcube(out, cube)
    _print_json({"out": str(out), "num_poses": cube.num_poses,
                 "Nk": cube.samples.shape[1], "time_s": cube.meta["time_s"],
                 "seed": seed})
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _require_config(args)
    seed = _effective_seed(cfg, args)
    if args.beat is not None:
        cube = fileio.load_beatcube(args.beat)
    else:
        cube, _ = _simulate_from_config(cfg, seed, args.threads)
    vol = _reconstruct(cfg, cube, args.algo, args.threads)
    out = _out_path(args, "image")
    fileio.save_image(out, vol)
    summary = {
        "out": str(out),
        "algorithm": vol.meta.get("algorithm"),
        "time_s": vol.meta.get("time_s"),
        "peak_m": list(vol.argmax_coords()),
        "peak_value": float(vol.values.max()),
    }
    if args.db_min is not None:
        top = vol.values.max()
        if top <= 0:
            raise NumericError("image is identically zero; no dB scale")
        db = 20.0 * np.log10(np.maximum(vol.values / top, 1e-30))
        summary["voxels_above_db_min"] = int(np.count_nonzero(db >= args.db_min))
        summary["db_min"] = args.db_min
    _print_json(summary)
    return 0


def cmd_psf(args) -> int:
    cfg = _require_config(args)
    seed = _effective_seed(cfg, args)
    d = _section(cfg, "psf")
    p = "psf"
    z0 = _number(d, "z0_m", p, positive=True)
    count = _integer(d, "count", p, minimum=2)
    extent_y = _number(d, "extent_y_m", p, positive=True)
    pitch = _number(d, "pitch_m", p, required=False)
    grid = parse_grid(d, p)
    wf = parse_waveform(cfg)
    if args.dzmax is not None:
        sweep = [parse_length(tok) for tok in args.dzmax.split(",") if tok.strip()]
    else:
        sweep = d.get("dz_max_m")
        if (not isinstance(sweep, list) or not sweep
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in sweep)):
            raise ConfigError(f"{p}.dz_max_m", "expected a list of heights in meters")
    # scan track rides the plane z = z0; the point target sits at the origin
    sc = Scene(scatterers=(PointScatterer(position=(0.0, 0.0, 0.0)),))
    array = AntennaArray.monostatic()
    rows = []
    for dz_max in sweep:
        if dz_max < 0:
            raise ConfigError(f"{p}.dz_max_m", f"heights must be >= 0, got {dz_max}")
        pattern = gen_irregular(extent_x=0.0, extent_y=extent_y, dz_max=float(dz_max),
                                count=count, seed=seed)
        poses = synthesize_aperture(array, pattern, z0)
        cube = beat_signal(sc, poses, wf, threads=args.threads)
        start = time.perf_counter()
        vol = empm_reconstruct(cube, z0, grid, pitch=pitch)
        elapsed = time.perf_counter() - start
        _check_finite(vol.values, "image")
        report = psf_report(vol)
        widths = iter(report.width_3db_m)
        by_axis = [next(widths) if len(ax) > 1 else None for ax in vol.axes]
        rows.append({
            "dz_max_m": float(dz_max),
            "width_x_m": by_axis[0], "width_y_m": by_axis[1], "width_z_m": by_axis[2],
            "pslr_db": report.pslr_db,
            "peak_x_m": report.peak_location_m[0],
            "peak_y_m": report.peak_location_m[1],
            "peak_z_m": report.peak_location_m[2],
            "time_s": elapsed,
        })
    out = args.out if args.out is not None else Path("psf.csv")
    header = list(rows[0].keys())
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if row[k] is None else repr(float(row[k]))
                              for k in header))
    Path(out).write_text("\n".join(lines) + "\n")
    _print_json({"out": str(out), "sweep": [r["dz_max_m"] for r in rows]})
    return 0


def _multiband_targets(d: dict, spec: SubbandSpec, parent: str):
    t = _section(d, "targets", parent)
    p = f"{parent}.targets"
    ranges = t.get("ranges_m")
    if (not isinstance(ranges, list) or not ranges
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in ranges)):
        raise ConfigError(f"{p}.ranges_m", "expected a nonempty list of ranges in meters")
    refl = t.get("reflectivities", [[1.0, 0.0]] * len(ranges))
    if not isinstance(refl, list) or len(refl) != len(ranges):
        raise ConfigError(f"{p}.reflectivities", "must match ranges_m in length")
    alphas = []
    for i, rv in enumerate(refl):
        if isinstance(rv, (int, float)) and not isinstance(rv, bool):
            alphas.append(complex(rv))
        elif isinstance(rv, (list, tuple)) and len(rv) == 2:
            alphas.append(complex(float(rv[0]), float(rv[1])))
        else:
            raise ConfigError(f"{p}.reflectivities[{i}]", "expected [real, imag] or a number")
    return np.asarray(ranges, float), np.asarray(alphas, complex)


def cmd_multiband(args) -> int:
    cfg = _require_config(args)
    seed = _effective_seed(cfg, args)
    spec = parse_subband_spec(cfg)
    d = _section(cfg, "multiband", required=False) or {}
    nfft = _integer(d, "nfft", "multiband", required=False, default=8192, minimum=2)

    if args.action == "gen":
        ranges, alphas = _multiband_targets(d, spec, "multiband")
        full = gen_fullband(ranges, alphas, spec)
        masked = apply_band_mask(full, spec)
        record = np.stack([masked.values, full]).astype(np.complex64)[None]
        out = _out_path(args, "dataset")
        fileio.save_dataset(out, record, spec_to_dict(spec), seed,
                            extra={"job": "gen"})
        _print_json({"out": str(out), "N": spec.total_length,
                     "occupied_bins": int(spec.occupied_mask().sum())})
        return 0

    if args.action == "fuse":
        if args.input is not None:
            header, records = fileio.load_dataset(args.input)
            values = records[0, 0].astype(np.complex128)
            mask = values != 0
            from .multiband import MultibandSignal
            mb = MultibandSignal(values=values, mask=mask, dk=spec.dk)
        else:
            ranges, alphas = _multiband_targets(d, spec, "multiband")
            mb = apply_band_mask(gen_fullband(ranges, alphas, spec), spec)
        spectrum, raxis = mft_fuse(mb, nfft)
        _check_finite(spectrum.view(np.float64), "fused spectrum")
        mag = np.abs(spectrum)
        out = args.out if args.out is not None else Path("fused.csv")
        lines = ["range_m,magnitude"]
        lines += [f"{repr(float(r))},{repr(float(m))}" for r, m in zip(raxis, mag)]
        Path(out).write_text("\n".join(lines) + "\n")
        _print_json({"out": str(out), "peak_range_m": float(raxis[np.argmax(mag)]),
                     "nfft": nfft})
        return 0

    if args.action == "resolve":
        if args.dz is None:
            raise ConfigError("--dz", "resolve needs a separation, e.g. --dz 7.1mm")
        dz = parse_length(args.dz)
        verdict = two_peak_resolution_test(dz, spec, snr_db=args.snr_db, nfft=nfft,
                                           seed=seed)
        _print_json(verdict)
        return 0

    # dataset
    ds = _section(d, "dataset", "multiband")
    p = "multiband.dataset"
    count = _integer(ds, "count", p, minimum=1)
    nt = ds.get("nt_range", [1, 200])
    snr = ds.get("snr_range_dB", [-10.0, 30.0])
    if (not isinstance(nt, (list, tuple)) or len(nt) != 2
            or any(not isinstance(v, int) or isinstance(v, bool) for v in nt)):
        raise ConfigError(f"{p}.nt_range", "expected [min, max] integers")
    if (not isinstance(snr, (list, tuple)) or len(snr) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in snr)):
        raise ConfigError(f"{p}.snr_range_dB", "expected [min_dB, max_dB]")
    try:
        records = dataset_gen(count, spec, nt_range=(nt[0], nt[1]),
                              snr_range_db=(float(snr[0]), float(snr[1])),
                              seed=seed, threads=args.threads)
    except ValueError as exc:
        raise ConfigError(p, str(exc)) from exc
    out = _out_path(args, "dataset")
    fileio.save_dataset(out, records, spec_to_dict(spec), seed,
                        extra={"nt_min": nt[0], "nt_max": nt[1],
                               "snr_min_dB": float(snr[0]), "snr_max_dB": float(snr[1])})
    _print_json({"out": str(out), "count": count, "seed": seed})
    return 0


def cmd_evaluate(args) -> int:
    if args.image is None or args.reference is None:
        raise ConfigError("--image/--reference", "evaluate needs both file paths")
    img = fileio.load_image(args.image)
    ref = fileio.load_image(args.reference)
    if img.values.shape != ref.values.shape:
        raise ConfigError("--image", f"shape {img.values.shape} does not match "
                                     f"reference {ref.values.shape}")
    report = _json_metrics(metrics_report(img.values, ref.values,
                                          time_s=img.meta.get("time_s", 0.0)))
    if args.out is not None:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        report = {**report, "out": str(args.out)}
    _print_json(report)
    return 0


def cmd_serve(args) -> int:
    from .server import create_app
    import uvicorn

    app = create_app()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def parse_length(text: str) -> float:
    """Length with an optional unit suffix: '7.1mm', '2.5cm', '0.3m', '0.3'."""
    token = str(text).strip().lower()
    scale = 1.0
    for suffix, s in (("mm", 1e-3), ("cm", 1e-2), ("m", 1.0)):
        if token.endswith(suffix):
            token = token[:-len(suffix)]
            scale = s
            break
    try:
        return float(token) * scale
    except ValueError as exc:
        raise ConfigError("--dz", f"cannot parse length {text!r}") from exc


# ------------------------------------------------------------- entry point

def _add_common(sp) -> None:
    sp.add_argument("--config", type=Path, help="JSON job description")
    sp.add_argument("--out", type=Path, help="output artifact path")
    sp.add_argument("--seed", type=int, default=None,
                    help="override the config seed")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--db-min", dest="db_min", type=float, default=None,
                    help="report threshold in dB below peak (negative)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nearsar",
        description="Near-field SAR toolkit: simulate FMCW beat signals, "
                    "reconstruct images, analyze PSFs, fuse multiband spectra.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="beat-signal cube from a config")
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reconstruct", help="image volume from a beat cube")
    _add_common(sp)
    sp.add_argument("--beat", type=Path, help="beat-cube file; simulated "
                                              "in-memory when omitted")
    sp.add_argument("--algo", choices=ALGORITHMS, default=None,
                    help="override the config algorithm")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("psf", help="point-spread sweep over track height")
    _add_common(sp)
    sp.add_argument("--dzmax", type=str, default=None,
                    help="comma-separated height bounds, e.g. '0,5cm,10cm'")
    sp.set_defaults(func=cmd_psf)

    sp = sub.add_parser("multiband", help="multi-subband signal jobs")
    sp.add_argument("action", choices=("gen", "fuse", "resolve", "dataset"))
    _add_common(sp)
    sp.add_argument("--in", dest="input", type=Path,
                    help="input dataset file for fuse")
    sp.add_argument("--dz", type=str, default=None,
                    help="two-target separation for resolve, e.g. 7.1mm")
    sp.add_argument("--snr-db", dest="snr_db", type=float, default=None)
    sp.set_defaults(func=cmd_multiband)

    sp = sub.add_parser("evaluate", help="fidelity metrics between two images")
    _add_common(sp)
    sp.add_argument("--image", type=Path)
    sp.add_argument("--reference", type=Path)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("serve", help="run the HTTP service")
    _add_common(sp)
    sp.add_argument("--port", type=int, default=8008)
    sp.add_argument("--host", type=str, default="127.0.0.1")
    sp.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except FloatingPointError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
