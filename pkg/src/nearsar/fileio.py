"""Binary artifact container and per-type save/load helpers.

One shared layout for every artifact: an 8-byte magic, a little-endian u32
header length, a JSON header, then the raw little-endian array payload
sections back to back. Headers may carry timings and other run metadata;
payload bytes are the reproducibility contract, so `payload_bytes` exposes
exactly that span for byte-for-byte comparisons.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .doppler import FrameStack
from .geometry import AperturePose, ScanPattern
from .recon import ImageVolume
from .simulate import BeatCube
from .waveform import WaveformParams, derive_waveform

MAGIC = b"NSARBIN1"
FORMAT_VERSION = 1


def _json_safe(meta: dict) -> dict:
    out = {}
    for key, val in meta.items():
        if isinstance(val, (str, bool, type(None))):
            out[key] = val
        elif isinstance(val, (int, float, np.integer, np.floating)):
            out[key] = float(val) if isinstance(val, (float, np.floating)) else int(val)
    return out


def _write_container(path, header: dict, sections: list[tuple[str, np.ndarray]]) -> None:
    head = dict(header)
    head["format_version"] = FORMAT_VERSION
    descs = []
    blobs = []
    for name, arr in sections:
        le = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        blob = np.ascontiguousarray(le).tobytes()
        descs.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape),
                      "nbytes": len(blob)})
        blobs.append(blob)
    head["sections"] = descs
    hbytes = json.dumps(head).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        for blob in blobs:
            fh.write(blob)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a recognized binary artifact")
        (hlen,) = struct.unpack("<I", fh.read(4))
        return json.loads(fh.read(hlen).decode("utf-8"))


def _read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a recognized binary artifact")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for desc in header["sections"]:
            blob = fh.read(desc["nbytes"])
            if len(blob) != desc["nbytes"]:
                raise ValueError(f"{path}: truncated section {desc['name']!r}")
            arr = np.frombuffer(blob, dtype=np.dtype(desc["dtype"]))
            arrays[desc["name"]] = arr.reshape(desc["shape"]).copy()
    return header, arrays


def payload_bytes(path) -> bytes:
    """All bytes after the JSON header: the deterministic part of a file."""
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ValueError(f"{path}: not a recognized binary artifact")
        (hlen,) = struct.unpack("<I", fh.read(4))
        fh.seek(hlen, 1)
        return fh.read()


# ---------------------------------------------------------------- beat cubes

def save_beatcube(path, cube: BeatCube) -> None:
    arrs = np.empty((cube.num_poses, 12))
    for i, p in enumerate(cube.poses):
        arrs[i, 0:3] = p.tx
        arrs[i, 3:6] = p.rx
        arrs[i, 6:9] = p.virtual
        arrs[i, 9:12] = (p.dx, p.dy, p.dz)
    header = {
        "kind": "beatcube",
        "waveform": cube.waveform.params.to_dict(),
        "convention": cube.meta.get("convention", ""),
        "pathloss": bool(cube.meta.get("pathloss", False)),
        "poses": "embedded",
        "meta": _json_safe(cube.meta),
    }
    _write_container(path, header, [
        ("samples", np.asarray(cube.samples, dtype=np.complex128)),
        ("poses", arrs),
    ])


def load_beatcube(path) -> BeatCube:
    header, arrays = _read_container(path)
    if header.get("kind") != "beatcube":
        raise ValueError(f"{path}: expected a beat-cube file, got {header.get('kind')!r}")
    wf = derive_waveform(WaveformParams.from_dict(header["waveform"]))
    rows = arrays["poses"]
    poses = tuple(
        AperturePose(tx=tuple(r[0:3]), rx=tuple(r[3:6]), virtual=tuple(r[6:9]),
                     dx=float(r[9]), dy=float(r[10]), dz=float(r[11]))
        for r in rows)
    return BeatCube(samples=arrays["samples"], poses=poses, waveform=wf,
                    meta=dict(header.get("meta", {})))


# ---------------------------------------------------------------- images

def save_image(path, vol: ImageVolume) -> None:
    header = {
        "kind": "image",
        "axes_m": [list(map(float, ax)) for ax in vol.axes],
        "algorithm": vol.meta.get("algorithm", ""),
        "time_s": float(vol.meta.get("time_s", 0.0)),
        "meta": _json_safe(vol.meta),
    }
    _write_container(path, header, [
        ("values", np.asarray(vol.values, dtype=np.float32)),
    ])


def load_image(path) -> ImageVolume:
    header, arrays = _read_container(path)
    if header.get("kind") != "image":
        raise ValueError(f"{path}: expected an image file, got {header.get('kind')!r}")
    axes = tuple(np.asarray(a, dtype=np.float64) for a in header["axes_m"])
    return ImageVolume(values=arrays["values"].astype(np.float64), axes=axes,
                       meta=dict(header.get("meta", {})))


# ---------------------------------------------------------------- patterns

def save_pattern(path, pattern: ScanPattern) -> None:
    header = {
        "kind": "pattern",
        "mode": pattern.mode,
        "spec": _json_safe(pattern.spec),
        "seed": pattern.seed,
        "radius_m": pattern.radius,
    }
    _write_container(path, header, [("poses", np.asarray(pattern.poses, float))])


def load_pattern(path) -> ScanPattern:
    header, arrays = _read_container(path)
    if header.get("kind") != "pattern":
        raise ValueError(f"{path}: expected a pattern file, got {header.get('kind')!r}")
    return ScanPattern(mode=header["mode"], poses=arrays["poses"],
                       spec=dict(header.get("spec", {})), seed=header.get("seed"),
                       radius=header.get("radius_m"))


def pattern_csv(pattern: ScanPattern) -> str:
    lines = ["x_m,y_m,z_m"]
    for row in np.asarray(pattern.poses, float):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- frame stacks

def save_frames(path, stack: FrameStack) -> None:
    header = {
        "kind": "framestack",
        "waveform": stack.waveform.params.to_dict(),
        "t_pri_s": stack.t_pri,
        "num_chirps": stack.num_chirps,
        "meta": _json_safe(stack.meta),
    }
    _write_container(path, header, [
        ("frames", np.asarray(stack.frames, dtype=np.complex128)),
    ])


def load_frames(path) -> FrameStack:
    header, arrays = _read_container(path)
    if header.get("kind") != "framestack":
        raise ValueError(f"{path}: expected a frame-stack file, got {header.get('kind')!r}")
    wf = derive_waveform(WaveformParams.from_dict(header["waveform"]))
    return FrameStack(frames=arrays["frames"], t_pri=float(header["t_pri_s"]),
                      waveform=wf, meta=dict(header.get("meta", {})))


# ---------------------------------------------------------------- datasets

def save_dataset(path, records: np.ndarray, spec_dict: dict, seed: int,
                 extra: dict | None = None) -> None:
    """records: (count, 2, N) complex64 — rows are (noisy input, clean label)."""
    rec = np.asarray(records, dtype=np.complex64)
    if rec.ndim != 3 or rec.shape[1] != 2:
        raise ValueError("records must have shape (count, 2, N)")
    header = {
        "kind": "dataset",
        "spec": spec_dict,
        "count": int(rec.shape[0]),
        "seed": int(seed),
    }
    if extra:
        header.update(_json_safe(extra))
    _write_container(path, header, [("records", rec)])


def load_dataset(path) -> tuple[dict, np.ndarray]:
    header, arrays = _read_container(path)
    if header.get("kind") != "dataset":
        raise ValueError(f"{path}: expected a dataset file, got {header.get('kind')!r}")
    return header, arrays["records"]


def default_artifact_name(kind: str) -> str:
    return {"beatcube": "beat.nsar", "image": "image.nsar",
            "pattern": "pattern.nsar", "framestack": "frames.nsar",
            "dataset": "dataset.nsar"}.get(kind, f"{kind}.nsar")


__all__ = [
    "MAGIC", "FORMAT_VERSION", "read_header", "payload_bytes",
    "save_beatcube", "load_beatcube", "save_image", "load_image",
    "save_pattern", "load_pattern", "pattern_csv",
    "save_frames", "load_frames", "save_dataset", "load_dataset",
    "default_artifact_name",
]
