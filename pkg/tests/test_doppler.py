"""Doppler-processing oracles: tone-FFT range peaks, constructed phase ramps
with known bin targets, and the Parseval scaling contract."""

import numpy as np
import pytest

from nearsar.doppler import FrameStack, range_doppler, range_fft
from nearsar.waveform import WaveformParams, derive_waveform, wavenumber_axis

W4 = derive_waveform(WaveformParams(
    f0=77e9, K=70.295e12, Nk=64, fS=70.295e12 * 64 / 4e9, fC=79e9))
T_PRI = 100e-6


def _static_frames(r, nc=32):
    k = wavenumber_axis(W4)
    row = np.exp(-1j * 2.0 * k * r)
    return FrameStack(frames=np.tile(row, (nc, 1)), t_pri=T_PRI, waveform=W4)


def _ramp_frames(r, bin_offset, nc=64):
    """Static range tone times the exact per-chirp Doppler ramp that lands on
    the requested velocity bin."""
    k = wavenumber_axis(W4)
    row = np.exp(-1j * 2.0 * k * r)
    ramp = np.exp(-2j * np.pi * bin_offset * np.arange(nc) / nc)
    return FrameStack(frames=ramp[:, None] * row[None, :], t_pri=T_PRI, waveform=W4)


class TestFrameStack:
    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="2-D"):
            FrameStack(frames=np.zeros(64, dtype=complex), t_pri=T_PRI, waveform=W4)

    def test_rejects_wrong_columns(self):
        with pytest.raises(ValueError, match="Nk"):
            FrameStack(frames=np.zeros((4, 32), dtype=complex), t_pri=T_PRI, waveform=W4)

    def test_rejects_bad_pri(self):
        with pytest.raises(ValueError, match="t_pri"):
            FrameStack(frames=np.zeros((4, 64), dtype=complex), t_pri=0.0, waveform=W4)

    def test_lambda0_is_start_wavelength(self):
        st = _static_frames(0.3, nc=2)
        assert st.lambda0 == pytest.approx(299792458.0 / 77e9, rel=1e-12)


class TestRangeFft:
    def test_static_point_peaks_at_bin_13(self):
        # R = 0.5 m, delta_z = 3.75 cm: 0.5 / 0.0375 = 13.33 -> bin 13
        X, raxis = range_fft(_static_frames(0.5))
        for row in np.abs(X):
            assert int(np.argmax(row)) == 13
        assert raxis[13] == pytest.approx(13 * 0.0375, rel=1e-3)

    def test_zero_frames_zero_profiles(self):
        st = FrameStack(frames=np.zeros((8, 64), dtype=complex), t_pri=T_PRI,
                        waveform=W4)
        X, _ = range_fft(st)
        assert np.all(X == 0)

    def test_parseval(self):
        rng = np.random.default_rng(5)
        f = rng.standard_normal((16, 64)) + 1j * rng.standard_normal((16, 64))
        st = FrameStack(frames=f, t_pri=T_PRI, waveform=W4)
        for nfft in (None, 256):
            X, _ = range_fft(st, nfft=nfft)
            n = X.shape[1]
            assert np.sum(np.abs(X) ** 2) / n == pytest.approx(
                np.sum(np.abs(f) ** 2), rel=1e-12)

    def test_range_axis_scales_with_padding(self):
        st = _static_frames(0.5, nc=2)
        _, r1 = range_fft(st)
        _, r4 = range_fft(st, nfft=256)
        assert r1[1] == pytest.approx(W4.range_resolution, rel=1e-12)
        assert r4[1] == pytest.approx(W4.range_resolution / 4, rel=1e-12)

    def test_rejects_short_nfft(self):
        with pytest.raises(ValueError, match="nfft"):
            range_fft(_static_frames(0.5, nc=2), nfft=32)

    def test_hann_reduces_far_sidelobes(self):
        # off-grid tone: rectangular window leaks, Hann suppresses
        X0, _ = range_fft(_static_frames(0.5), nfft=512)
        X1, _ = range_fft(_static_frames(0.5), nfft=512, hann=True)
        p0 = np.abs(X0[0]) / np.abs(X0[0]).max()
        p1 = np.abs(X1[0]) / np.abs(X1[0]).max()
        far = np.r_[0:80, 200:512]       # well away from the 0.5 m peak
        assert p1[far].max() < p0[far].max()


class TestRangeDoppler:
    def test_static_target_at_zero_velocity(self):
        rd, raxis, vaxis = range_doppler(_static_frames(0.5, nc=32))
        assert rd.shape == (64, 32)
        r_bin, v_bin = np.unravel_index(int(np.argmax(rd)), rd.shape)
        assert r_bin == 13
        assert vaxis[v_bin] == 0.0

    def test_ramp_lands_on_bin_plus_8(self):
        nc = 64
        rd, _, vaxis = range_doppler(_ramp_frames(0.3, bin_offset=8, nc=nc))
        _, v_bin = np.unravel_index(int(np.argmax(rd)), rd.shape)
        spacing = vaxis[1] - vaxis[0]
        assert vaxis[v_bin] == pytest.approx(8 * spacing, rel=1e-12)

    def test_conjugate_negates_velocity(self):
        st = _ramp_frames(0.3, bin_offset=8)
        neg = FrameStack(frames=np.conj(st.frames), t_pri=st.t_pri, waveform=W4)
        rd, _, vaxis = range_doppler(neg)
        _, v_bin = np.unravel_index(int(np.argmax(rd)), rd.shape)
        spacing = vaxis[1] - vaxis[0]
        assert vaxis[v_bin] == pytest.approx(-8 * spacing, rel=1e-12)

    def test_velocity_axis_contract(self):
        nc = 64
        st = _static_frames(0.2, nc=nc)
        _, _, vaxis = range_doppler(st)
        spacing = vaxis[1] - vaxis[0]
        assert spacing * 2 * T_PRI * nc == pytest.approx(st.lambda0, rel=1e-15)
        assert vaxis[nc // 2] == 0.0

    def test_physical_receding_target(self):
        # full beat model with range growing chirp to chirp
        nc = 64
        k = wavenumber_axis(W4)
        spacing = (299792458.0 / 77e9) / (2 * T_PRI * nc)
        v = 5 * spacing
        ranges = 0.3 + v * T_PRI * np.arange(nc)
        frames = np.exp(-1j * 2.0 * ranges[:, None] * k[None, :])
        st = FrameStack(frames=frames, t_pri=T_PRI, waveform=W4)
        rd, _, vaxis = range_doppler(st)
        _, v_bin = np.unravel_index(int(np.argmax(rd)), rd.shape)
        assert vaxis[v_bin] == pytest.approx(v, rel=1e-6)

    def test_single_chirp_rejected(self):
        with pytest.raises(ValueError, match="two chirps"):
            range_doppler(_static_frames(0.3, nc=1))
