"""HTTP JSON API over the imaging chain, for the interactive workbench.

Single in-memory session (one operator). Editing an upstream stage marks the
downstream artifacts stale; reconstructing against a stale beat signal is
refused with 409. Validation errors carry the offending field path, like the
CLI. Compute estimated above the job threshold runs in a background thread
and is polled via /session/jobs/{id}; one compute job at a time.
"""

from __future__ import annotations

import json
import tempfile
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, Response

from . import fileio
from .cli import (
    ALGORITHMS,
    ConfigError,
    NumericError,
    _reconstruct,
    _simulate_from_config,
    load_config,
    parse_array,
    parse_pattern,
    parse_scene,
    parse_waveform,
    shipped_config_path,
)
from .geometry import synthesize_aperture
from .metrics import psf_report

# pose-sample products above this run as a polled background job
DEFAULT_JOB_THRESHOLD = 20_000_000


def _bad_request(exc: ConfigError) -> HTTPException:
    return HTTPException(status_code=400, detail={"path": exc.path,
                                                  "message": exc.message})


class Session:
    """All mutable server state. Mutations hold the lock; compute jobs hold
    the compute lock so only one runs at a time. A generation counter lets a
    finishing job detect that its inputs were edited while it ran."""

    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.compute = threading.Lock()
        self.raw: dict = {}          # validated config sections, cli schema
        self.standoff_m = 0.0
        self.cube = None
        self.volume = None
        self.dirty = {"beat": True, "image": True}
        self.generation = 0
        self.jobs: dict[str, dict] = {}
        self.job_counter = 0

    def load_defaults(self) -> None:
        cfg = load_config(shipped_config_path())
        parse_waveform(cfg), parse_array(cfg), parse_pattern(cfg), parse_scene(cfg)
        self.raw = {k: cfg[k] for k in ("waveform", "array", "pattern", "scene")}
        self.standoff_m = float(cfg.get("standoff_m", 0.0))

    def as_config(self) -> dict:
        return {"version": 1, **{k: self.raw[k] for k in self.raw},
                "standoff_m": self.standoff_m}


def _job_payload(job: dict) -> dict:
    return {k: job[k] for k in ("id", "kind", "status", "result", "error")}


def create_app(job_threshold: int = DEFAULT_JOB_THRESHOLD) -> FastAPI:
    app = FastAPI(title="nearsar", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    s = Session()
    s.load_defaults()
    app.state.session = s

    # ------------------------------------------------------------- session

    def _put_section(name: str, body: dict, validate) -> dict:
        if not isinstance(body, dict):
            raise HTTPException(status_code=400,
                                detail={"path": name, "message": "expected a JSON object"})
        try:
            validate({name: body})
        except ConfigError as exc:
            raise _bad_request(exc) from exc
        with s.lock:
            s.raw[name] = body
            s.dirty["beat"] = True
            s.dirty["image"] = True
            s.generation += 1
            return {"ok": True, "dirty": dict(s.dirty)}

    @app.put("/session/waveform")
    def put_waveform(body: dict = Body(...)):
        return _put_section("waveform", body, parse_waveform)

    @app.put("/session/array")
    def put_array(body: dict = Body(...)):
        return _put_section("array", body, parse_array)

    @app.put("/session/pattern")
    def put_pattern(body: dict = Body(...)):
        standoff = body.pop("standoff_m", None)
        if standoff is not None:
            if isinstance(standoff, bool) or not isinstance(standoff, (int, float)):
                raise HTTPException(status_code=400,
                                    detail={"path": "pattern.standoff_m",
                                            "message": "expected a number"})
        result = _put_section("pattern", body, parse_pattern)
        if standoff is not None:
            with s.lock:
                s.standoff_m = float(standoff)
        return result

    @app.put("/session/scene")
    def put_scene(body: dict = Body(...)):
        return _put_section("scene", body, parse_scene)

    @app.get("/session")
    def get_session():
        with s.lock:
            pattern = parse_pattern({"pattern": s.raw["pattern"]})
            return {
                "waveform": s.raw["waveform"],
                "array": s.raw["array"],
                "pattern": {**s.raw["pattern"], "num_poses": len(pattern.poses)},
                "scene": s.raw["scene"],
                "standoff_m": s.standoff_m,
                "dirty": dict(s.dirty),
                "artifacts": {"beat": s.cube is not None,
                              "image": s.volume is not None},
                "busy": s.compute.locked(),
            }

    @app.get("/derived")
    def get_derived():
        with s.lock:
            cfg = s.as_config()
        wf = parse_waveform(cfg)
        pattern = parse_pattern(cfg)
        scene = parse_scene(cfg)
        poses = np.asarray(pattern.poses, float)
        extent = (poses.max(axis=0) - poses.min(axis=0))[:2] if len(poses) else np.zeros(2)
        cross = [None, None]
        if scene.scatterers:
            z_scene = float(np.mean([p.position[2] for p in scene.scatterers]))
            reach = abs(z_scene - cfg.get("standoff_m", 0.0))
            if reach > 0:
                for i in range(2):
                    if extent[i] > 0:
                        cross[i] = wf.lambda_c * reach / (2.0 * extent[i])
        return {
            "rangeResolution_m": wf.range_resolution,
            "bandwidth_Hz": wf.bandwidth,
            "wavelength_m": wf.lambda_c,
            "maxRange_m": wf.max_range,
            "maxPoseSpacing_m": wf.lambda_c / 4.0,
            "crossRangeResolution_m": cross,
            "apertureExtent_m": [float(extent[0]), float(extent[1])],
            "numPoses": len(pattern.poses),
        }

    # ---------------------------------------------------------------- jobs

    def _start_job(kind: str, estimate: float, work) -> dict | Response:
        if not s.compute.acquire(blocking=False):
            raise HTTPException(status_code=409,
                                detail={"message": "a compute job is already running"})
        gen0 = s.generation
        if estimate <= job_threshold:
            try:
                result = work(gen0)
            except ConfigError as exc:
                raise _bad_request(exc) from exc
            except NumericError as exc:
                raise HTTPException(status_code=500, detail={"message": str(exc)}) from exc
            except ValueError as exc:
                raise HTTPException(status_code=422, detail={"message": str(exc)}) from exc
            finally:
                s.compute.release()
            return {"status": "done", **result}

        with s.lock:
            s.job_counter += 1
            job = {"id": f"job-{s.job_counter}", "kind": kind, "status": "running",
                   "result": None, "error": None}
            s.jobs[job["id"]] = job

        def runner():
            try:
                job["result"] = work(gen0)
                job["status"] = "done"
            except (ConfigError, NumericError, ValueError) as exc:
                job["error"] = str(exc)
                job["status"] = "error"
            finally:
                s.compute.release()

        threading.Thread(target=runner, daemon=True).start()
        return Response(content=json.dumps({"status": "running", "job": job["id"]}),
                        status_code=202, media_type="application/json")

    @app.get("/session/jobs/{job_id}")
    def get_job(job_id: str):
        job = s.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404,
                                detail={"message": f"no such job {job_id!r}"})
        return _job_payload(job)

    # ------------------------------------------------------------- compute

    @app.post("/session/simulate")
    def post_simulate(body: dict = Body(default={})):
        seed = body.get("seed", 0)
        threads = int(body.get("threads", 1))
        with s.lock:
            cfg = s.as_config()
        if "pathloss" in body:
            cfg["simulate"] = {"pathloss": body["pathloss"]}
        if "snr_dB" in body:
            cfg["noise"] = {"snr_dB": body["snr_dB"]}
        try:
            wf = parse_waveform(cfg)
            pattern = parse_pattern(cfg)
            scene = parse_scene(cfg)
            array = parse_array(cfg)
        except ConfigError as exc:
            raise _bad_request(exc) from exc
        channels = max(1, len(array.tx) * len(array.rx))
        estimate = (len(pattern.poses) * channels * wf.Nk
                    * max(1, len(scene.scatterers)))

        def work(gen0: int) -> dict:
            cube, _ = _simulate_from_config(cfg, seed, threads)
            with s.lock:
                s.cube = cube
                s.dirty["beat"] = s.generation != gen0
                s.dirty["image"] = True
            return {"kind": "simulate", "num_poses": cube.num_poses,
                    "Nk": int(cube.samples.shape[1]),
                    "time_s": cube.meta["time_s"], "seed": seed,
                    "stale": s.dirty["beat"]}

        return _start_job("simulate", estimate, work)

    @app.post("/session/reconstruct")
    def post_reconstruct(body: dict = Body(...)):
        algo = body.get("algorithm")
        if algo not in ALGORITHMS:
            raise HTTPException(status_code=400,
                                detail={"path": "reconstruct.algorithm",
                                        "message": f"expected one of {ALGORITHMS}, got {algo!r}"})
        with s.lock:
            if s.cube is None or s.dirty["beat"]:
                raise HTTPException(status_code=409,
                                    detail={"message": "beat signal is stale; re-run simulate"})
            cube = s.cube
        threads = int(body.get("threads", 1))
        cfg = {"reconstruct": body}
        voxels = 1
        grid = body.get("grid")
        if isinstance(grid, dict):
            for axis in ("x_m", "y_m", "z_m"):
                triple = grid.get(axis)
                if isinstance(triple, (list, tuple)) and len(triple) == 3:
                    voxels *= max(1, int(triple[2]))
        estimate = cube.num_poses * voxels if algo == "bpa" else 64 * voxels

        def work(gen0: int) -> dict:
            start = time.perf_counter()
            vol = _reconstruct(cfg, cube, algo, threads)
            elapsed = time.perf_counter() - start
            with s.lock:
                s.volume = vol
                s.dirty["image"] = s.generation != gen0
            return {"kind": "reconstruct", "algorithm": algo,
                    "peak_m": [float(v) for v in vol.argmax_coords()],
                    "peak_value": float(vol.values.max()),
                    "shape": list(vol.values.shape), "time_s": elapsed,
                    "stale": s.dirty["image"]}

        return _start_job("reconstruct", estimate, work)

    # ----------------------------------------------------------- artifacts

    @app.get("/artifacts/pattern.csv")
    def get_pattern_csv():
        with s.lock:
            cfg = s.as_config()
        pattern = parse_pattern(cfg)
        return PlainTextResponse(fileio.pattern_csv(pattern), media_type="text/csv")

    @app.get("/artifacts/poses.csv")
    def get_poses_csv():
        # full virtual aperture after array synthesis, one row per channel
        with s.lock:
            cfg = s.as_config()
        poses = synthesize_aperture(parse_array(cfg), parse_pattern(cfg),
                                    float(cfg.get("standoff_m", 0.0)))
        lines = ["x_m,y_m,z_m"]
        lines += [",".join(repr(float(v)) for v in p.virtual) for p in poses]
        return PlainTextResponse("\n".join(lines) + "\n", media_type="text/csv")

    @app.get("/artifacts/image-slice")
    def get_image_slice(z: float | None = Query(default=None),
                        dbMin: float = Query(default=-40.0)):
        with s.lock:
            vol = s.volume
            stale = s.dirty["image"]
        if vol is None:
            raise HTTPException(status_code=404,
                                detail={"message": "no image; run reconstruct first"})
        top = float(vol.values.max())
        if top <= 0:
            raise HTTPException(status_code=422,
                                detail={"message": "image is identically zero; no dB scale"})
        z_axis = vol.axes[-1]
        if z is None:
            idx = int(np.unravel_index(np.argmax(vol.values), vol.values.shape)[-1])
        else:
            idx = int(np.argmin(np.abs(z_axis - z)))
        plane = vol.values[..., idx] if vol.values.ndim == 3 else vol.values
        db = 20.0 * np.log10(np.maximum(plane / top, 1e-30))
        db = np.maximum(db, dbMin)
        flat = np.unravel_index(int(np.argmax(plane)), plane.shape)
        return {
            "z_m": float(z_axis[idx]),
            "zIndex": idx,
            "dbMin": dbMin,
            "x_m": [float(v) for v in vol.axes[0]],
            "y_m": [float(v) for v in (vol.axes[1] if vol.values.ndim >= 2 else [0.0])],
            "values_db": [[float(v) for v in row] for row in np.atleast_2d(db)],
            "argmax_xy_m": [float(vol.axes[0][flat[0]]),
                            float(vol.axes[1][flat[1]]) if vol.values.ndim >= 2 else 0.0],
            "peak_value": top,
            "stale": stale,
        }

    @app.get("/artifacts/psf.csv")
    def get_psf_csv():
        with s.lock:
            vol = s.volume
        if vol is None:
            raise HTTPException(status_code=404,
                                detail={"message": "no image; run reconstruct first"})
        try:
            report = psf_report(vol)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"message": str(exc)}) from exc
        widths = iter(report.width_3db_m)
        by_axis = [next(widths) if len(ax) > 1 else None for ax in vol.axes]
        names = ["x", "y", "z"][:len(vol.axes)]
        header = [f"width_{n}_m" for n in names] + ["pslr_db"] \
            + [f"peak_{n}_m" for n in names]
        row = by_axis + [report.pslr_db] + list(report.peak_location_m)
        text = ",".join(header) + "\n" \
            + ",".join("" if v is None else repr(float(v)) for v in row) + "\n"
        return PlainTextResponse(text, media_type="text/csv")

    def _container_bytes(save, obj) -> bytes:
        with tempfile.NamedTemporaryFile(suffix=".nsar") as tmp:
            save(tmp.name, obj)
            return Path(tmp.name).read_bytes()

    @app.get("/artifacts/beat.nsar")
    def get_beat_file():
        with s.lock:
            cube = s.cube
        if cube is None:
            raise HTTPException(status_code=404,
                                detail={"message": "no beat signal; run simulate first"})
        return Response(content=_container_bytes(fileio.save_beatcube, cube),
                        media_type="application/octet-stream")

    @app.get("/artifacts/image.nsar")
    def get_image_file():
        with s.lock:
            vol = s.volume
        if vol is None:
            raise HTTPException(status_code=404,
                                detail={"message": "no image; run reconstruct first"})
        return Response(content=_container_bytes(fileio.save_image, vol),
                        media_type="application/octet-stream")

    return app
