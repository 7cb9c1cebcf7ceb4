"""Welch spectra, transfer estimates and peak detection."""

import numpy as np
import pytest
import scipy.signal as sps

from ridecomfort.errors import SegmentTooLong, TooFewSegments
from ridecomfort.spectral import (
    FrequencyResponseFunction, WelchParams, detect_peaks, estimate_frf,
    welch_spectrum)


def test_welch_params_validation():
    with pytest.raises(ValueError):
        WelchParams(0)
    with pytest.raises(ValueError):
        WelchParams(256, overlap=1.0)
    assert WelchParams(256, overlap=0.5).n_segments(1024) == 7


def test_welch_power_matches_variance():
    rng = np.random.default_rng(3)
    dt = 0.01
    x = rng.standard_normal(200_000)
    spec = welch_spectrum(x, x, dt, WelchParams(4096))
    # integral of the one-sided density recovers the variance
    assert spec.power() == pytest.approx(np.var(x), rel=0.03)


def test_estimate_frf_recovers_known_filter():
    rng = np.random.default_rng(11)
    dt = 0.005
    x = rng.standard_normal(400_000)
    sos = sps.butter(2, 8.0, fs=1 / dt, output="sos")
    y = sps.sosfilt(sos, x)
    frf = estimate_frf(x, y, dt, WelchParams(8192),
                       input_channel="in", output_channel="out")
    w, h = sps.sosfreqz(sos, worN=frf.freqs, fs=1 / dt)
    sel = (frf.freqs > 0.5) & (frf.freqs < 30.0) & frf.valid
    rel = np.abs(frf.gain[sel] - np.abs(h[sel])) / np.abs(h[sel])
    assert np.max(rel) < 0.05
    assert np.all(frf.coherence[sel] > 0.99)
    assert frf.input_channel == "in"


def test_estimate_frf_needs_enough_segments():
    with pytest.raises(TooFewSegments):
        estimate_frf(np.zeros(80), np.zeros(80), 0.01, WelchParams(64))
    with pytest.raises(SegmentTooLong):
        estimate_frf(np.zeros(50), np.zeros(50), 0.01, WelchParams(64))


def _bump_frf(peak_hz=3.0, gain=2.0):
    freqs = np.linspace(0.1, 10.0, 250)
    mag = 1.0 + (gain - 1.0) * np.exp(-0.5 * ((freqs - peak_hz) / 0.3) ** 2)
    return FrequencyResponseFunction(
        freqs=freqs, response=mag.astype(complex),
        coherence=np.ones_like(freqs), input_channel="u", output_channel="y")


def test_detect_peaks_finds_and_refines():
    frf = _bump_frf(peak_hz=3.0, gain=2.0)
    peaks = detect_peaks(frf, (0.5, 9.0), min_prominence=0.2)
    assert len(peaks) == 1
    f, g = peaks[0]
    assert f == pytest.approx(3.0, abs=0.05)
    assert g == pytest.approx(2.0, rel=0.01)


def test_detect_peaks_prominence_threshold():
    frf = _bump_frf(gain=1.05)
    assert detect_peaks(frf, (0.5, 9.0), min_prominence=0.2) == []


def test_detect_peaks_band_outside_grid():
    frf = _bump_frf()
    with pytest.raises(ValueError):
        detect_peaks(frf, (50.0, 80.0), min_prominence=0.1)
