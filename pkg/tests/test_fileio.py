"""Binary artifact round trips and payload determinism."""

import struct

import numpy as np
import pytest

from nearsar.doppler import FrameStack
from nearsar.fileio import (
    MAGIC,
    default_artifact_name,
    load_beatcube,
    load_dataset,
    load_frames,
    load_image,
    load_pattern,
    pattern_csv,
    payload_bytes,
    read_header,
    save_beatcube,
    save_dataset,
    save_frames,
    save_image,
    save_pattern,
)
from nearsar.geometry import arrays_to_poses, gen_pattern
from nearsar.recon import GridSpec, ImageVolume, bpa
from nearsar.scene import PointScatterer, Scene
from nearsar.simulate import beat_signal
from nearsar.waveform import WaveformParams, derive_waveform

W4 = derive_waveform(WaveformParams(f0=77e9, K=70.295e12, Nk=64,
                                    fS=70.295e12 * 64 / 4e9, fC=79e9))


def _small_cube():
    xs = np.linspace(-0.02, 0.02, 4)
    virt = np.array([[x, y, 0.0] for x in xs for y in xs])
    poses = arrays_to_poses(virt)
    sc = Scene(scatterers=(PointScatterer(position=(0.0, 0.0, 0.3)),))
    return beat_signal(sc, poses, W4)


class TestContainer:
    def test_header_readable(self, tmp_path):
        path = tmp_path / "a.nsar"
        save_beatcube(path, _small_cube())
        header = read_header(path)
        assert header["kind"] == "beatcube"
        assert header["format_version"] == 1
        assert header["waveform"]["f0_Hz"] == 77e9
        names = [s["name"] for s in header["sections"]]
        assert names == ["samples", "poses"]

    def test_magic_guard(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(ValueError, match="not a recognized binary artifact"):
            read_header(path)
        with pytest.raises(ValueError, match="not a recognized binary artifact"):
            payload_bytes(path)

    def test_kind_guard(self, tmp_path):
        path = tmp_path / "a.nsar"
        save_beatcube(path, _small_cube())
        with pytest.raises(ValueError, match="expected an image file"):
            load_image(path)

    def test_truncation_detected(self, tmp_path):
        path = tmp_path / "a.nsar"
        save_beatcube(path, _small_cube())
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(ValueError, match="truncated"):
            load_beatcube(path)

    def test_payload_bytes_span(self, tmp_path):
        path = tmp_path / "a.nsar"
        save_beatcube(path, _small_cube())
        raw = path.read_bytes()
        (hlen,) = struct.unpack("<I", raw[8:12])
        assert payload_bytes(path) == raw[12 + hlen:]
        assert raw[:8] == MAGIC

    def test_payload_deterministic_across_writes(self, tmp_path):
        cube = _small_cube()
        p1, p2 = tmp_path / "a.nsar", tmp_path / "b.nsar"
        save_beatcube(p1, cube)
        save_beatcube(p2, cube)
        assert payload_bytes(p1) == payload_bytes(p2)


class TestBeatCube:
    def test_round_trip(self, tmp_path):
        cube = _small_cube()
        path = tmp_path / "cube.nsar"
        save_beatcube(path, cube)
        back = load_beatcube(path)
        np.testing.assert_array_equal(back.samples, cube.samples)
        assert back.waveform.params == cube.waveform.params
        assert back.num_poses == cube.num_poses
        assert back.meta["convention"] == cube.meta["convention"]
        for a, b in zip(back.poses, cube.poses):
            assert a.tx == b.tx and a.rx == b.rx and a.virtual == b.virtual
            assert (a.dx, a.dy, a.dz) == (b.dx, b.dy, b.dz)

    def test_loaded_cube_reconstructs(self, tmp_path):
        cube = _small_cube()
        path = tmp_path / "cube.nsar"
        save_beatcube(path, cube)
        back = load_beatcube(path)
        grid = GridSpec(x=(-0.03, 0.03, 5), y=(-0.03, 0.03, 5), z=(0.25, 0.35, 5))
        np.testing.assert_array_equal(bpa(back, grid).values, bpa(cube, grid).values)


class TestImage:
    def test_round_trip(self, tmp_path):
        grid = GridSpec(x=(-0.03, 0.03, 5), y=(-0.03, 0.03, 5), z=(0.25, 0.35, 5))
        vol = bpa(_small_cube(), grid)
        path = tmp_path / "img.nsar"
        save_image(path, vol)
        back = load_image(path)
        # stored as float32
        np.testing.assert_array_equal(back.values,
                                      vol.values.astype(np.float32).astype(np.float64))
        for a, b in zip(back.axes, vol.axes):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
        assert back.meta["algorithm"] == "bpa"

    def test_header_carries_algorithm(self, tmp_path):
        vol = ImageVolume(values=np.ones((2, 2, 2)),
                          axes=(np.array([0.0, 1.0]),) * 3,
                          meta={"algorithm": "rma", "time_s": 1.25})
        path = tmp_path / "img.nsar"
        save_image(path, vol)
        header = read_header(path)
        assert header["algorithm"] == "rma"
        assert header["time_s"] == 1.25


class TestPattern:
    def test_round_trip_planar(self, tmp_path):
        pat = gen_pattern("rectilinear", dx=0.002, dy=0.002, nx=3, ny=4)
        path = tmp_path / "pat.nsar"
        save_pattern(path, pat)
        back = load_pattern(path)
        assert back.mode == "rectilinear"
        np.testing.assert_array_equal(back.poses, pat.poses)

    def test_round_trip_angular(self, tmp_path):
        pat = gen_pattern("circular", theta_max=2 * np.pi, n_theta=16, radius=0.25)
        path = tmp_path / "pat.nsar"
        save_pattern(path, pat)
        back = load_pattern(path)
        assert back.radius == 0.25
        np.testing.assert_array_equal(back.poses, pat.poses)

    def test_csv_format(self):
        pat = gen_pattern("rectilinear", dx=0.001, dy=0.001, nx=2, ny=2)
        text = pattern_csv(pat)
        lines = text.splitlines()
        assert lines[0] == "x_m,y_m,z_m"
        assert len(lines) == 1 + len(pat)
        row = [float(v) for v in lines[1].split(",")]
        np.testing.assert_allclose(row, pat.poses[0])
        assert text.endswith("\n")


class TestFrames:
    def test_round_trip(self, tmp_path):
        frames = np.exp(-1j * np.linspace(0, 6, 5 * 64)).reshape(5, 64)
        stack = FrameStack(frames=frames, t_pri=1e-4, waveform=W4,
                           meta={"note": "synthetic"})
        path = tmp_path / "frames.nsar"
        save_frames(path, stack)
        back = load_frames(path)
        np.testing.assert_array_equal(back.frames, stack.frames)
        assert back.t_pri == 1e-4
        assert back.num_chirps == 5
        assert back.waveform.params == W4.params
        assert read_header(path)["num_chirps"] == 5


class TestDataset:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        rec = (rng.standard_normal((3, 2, 336))
               + 1j * rng.standard_normal((3, 2, 336))).astype(np.complex64)
        path = tmp_path / "ds.nsar"
        save_dataset(path, rec, {"bands": [[60e9, 64], [77e9, 64]], "df_Hz": 62.5e6},
                     seed=4, extra={"nt_max": 200})
        header, back = load_dataset(path)
        np.testing.assert_array_equal(back, rec)
        assert header["count"] == 3
        assert header["seed"] == 4
        assert header["spec"]["df_Hz"] == 62.5e6
        assert header["nt_max"] == 200

    def test_bad_shape_rejected(self, tmp_path):
        with pytest.raises(ValueError, match=r"\(count, 2, N\)"):
            save_dataset(tmp_path / "x.nsar", np.zeros((3, 336), np.complex64),
                         {}, seed=0)


def test_default_artifact_names():
    assert default_artifact_name("beatcube") == "beat.nsar"
    assert default_artifact_name("image") == "image.nsar"
    assert default_artifact_name("other") == "other.nsar"
