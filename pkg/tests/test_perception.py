"""Vestibular sensing, subjective vertical and conflict generation."""

import numpy as np
import pytest

from ridecomfort.perception import (
    ACC_CHANNELS, ANGLE_CHANNELS, GRAVITY, ROTVEL_CHANNELS, VestibularParams,
    VisionParams, conflict, internal_expectation, otolith_response, perceive,
    scc_response, subjective_vertical)
from ridecomfort.timeseries import from_arrays


def _body_record(dt, n, acc=None, rotvel=None, angles=None):
    """Assemble a body-response record from per-block arrays (defaults 0)."""
    def block(arr, width):
        if arr is None:
            return np.zeros((n, width))
        arr = np.asarray(arr, dtype=float)
        return arr if arr.ndim == 2 else np.tile(arr, (n, 1))

    data = np.hstack([block(acc, 3), block(rotvel, 3), block(angles, 2)])
    channels = ([(c, "m/s^2") for c in ACC_CHANNELS]
                + [(c, "rad/s") for c in ROTVEL_CHANNELS]
                + [(c, "rad") for c in ANGLE_CHANNELS])
    return from_arrays(dt, data, channels)


def _rotvel_record(dt, roll):
    data = np.zeros((roll.size, 3))
    data[:, 0] = roll
    return from_arrays(dt, data, [(c, "rad/s") for c in ROTVEL_CHANNELS])


def test_params_validation():
    VestibularParams().validate()
    with pytest.raises(ValueError):
        VestibularParams(canal_tau_short_s=10.0).validate()
    with pytest.raises(ValueError):
        VestibularParams(sv_time_constant_s=0.0).validate()
    with pytest.raises(ValueError):
        VisionParams(rotation_gain=1.5).validate()
    with pytest.raises(ValueError):
        VisionParams(delay_s=-0.1).validate()


def test_canal_washes_out_sustained_rotation():
    dt = 0.001
    n = 40_000
    sensed = scc_response(_rotvel_record(dt, np.ones(n)), VestibularParams())
    out = sensed.channel("sensed_rotvel_roll")
    assert out[200] > 0.9          # brief rotation passes through
    assert abs(out[-1]) < 0.01     # sustained rotation fades


def test_canal_tracks_band_center_rotation():
    # mid-band oscillation transmits with near-unit gain
    dt = 0.001
    t = np.arange(20_000) * dt
    w = 2 * np.pi * 1.0
    sensed = scc_response(_rotvel_record(dt, np.sin(w * t)), VestibularParams())
    out = sensed.channel("sensed_rotvel_roll")[10_000:]
    assert np.max(np.abs(out)) == pytest.approx(1.0, abs=0.05)


def test_otolith_stationary_reports_gravity():
    ts = _body_record(0.01, 100)
    sensed = otolith_response(ts.select(ACC_CHANNELS), ts.select(ANGLE_CHANNELS),
                              VestibularParams())
    assert sensed.channel("sensed_sf_x")[0] == pytest.approx(0.0)
    assert sensed.channel("sensed_sf_z")[0] == pytest.approx(-GRAVITY)


def test_otolith_tilt_rotates_gravity_into_head_frame():
    beta = 0.05
    ts = _body_record(0.01, 100, angles=np.array([0.0, beta]))
    sensed = otolith_response(ts.select(ACC_CHANNELS), ts.select(ANGLE_CHANNELS),
                              VestibularParams())
    # pitched head sees a fore-aft gravity component ~ g*beta
    assert abs(abs(sensed.channel("sensed_sf_x")[0]) - GRAVITY * beta) < 1e-6


def test_subjective_vertical_converges_to_tilt():
    dt = 0.002
    n = 30_000
    params = VestibularParams(sv_time_constant_s=5.0)
    ts = _body_record(dt, n, acc=np.array([0.0, 2.0, 0.0]))
    sf = otolith_response(ts.select(ACC_CHANNELS), ts.select(ANGLE_CHANNELS), params)
    rv = scc_response(ts.select(ROTVEL_CHANNELS), params)
    v = subjective_vertical(sf, rv, params)
    vy = v.channel("sensed_vert_y")[-1]
    vz = v.channel("sensed_vert_z")[-1]
    tilt = np.degrees(np.arctan2(abs(vy), vz))
    assert tilt == pytest.approx(np.degrees(np.arctan(2.0 / GRAVITY)), abs=0.1)


def test_subjective_vertical_freefall_is_degenerate():
    dt = 0.002
    n = 2500
    params = VestibularParams()
    ts = _body_record(dt, n, acc=np.array([0.0, 0.0, GRAVITY]))
    sf = otolith_response(ts.select(ACC_CHANNELS), ts.select(ANGLE_CHANNELS), params)
    rv = scc_response(ts.select(ROTVEL_CHANNELS), params)
    v = subjective_vertical(sf, rv, params)
    assert v.meta["degenerate_samples"] == n
    assert np.all(v.channel("sensed_vert_z") == 1.0)


def test_expectation_without_vision_is_upright_prior():
    ts = _body_record(0.01, 200, angles=np.array([0.1, 0.0]))
    exp = internal_expectation(ts.select(ANGLE_CHANNELS), VestibularParams())
    assert np.all(exp.channel("expected_vert_x") == 0.0)
    assert np.all(exp.channel("expected_vert_z") == 1.0)


def test_expectation_with_vision_tracks_true_vertical():
    params = VestibularParams(
        vision=VisionParams(enabled=True, rotation_gain=1.0, delay_s=0.0))
    rho = 0.1
    ts = _body_record(0.01, 2000, angles=np.array([rho, 0.0]))
    exp = internal_expectation(ts.select(ANGLE_CHANNELS), params)
    # rolled head sees the true vertical displaced laterally by ~rho
    assert abs(abs(exp.channel("expected_vert_y")[-1]) - rho) < 0.005


def test_conflict_zero_for_matching_verticals():
    dt = 0.01
    up = np.tile([0.0, 0.0, 1.0], (100, 1))
    vs = from_arrays(dt, up, [(f"sensed_vert_{a}", "1") for a in "xyz"])
    ve = from_arrays(dt, up, [(f"expected_vert_{a}", "1") for a in "xyz"])
    c = conflict(vs, ve)
    assert np.all(c.channel("conflict") == 0.0)
    assert c.unit("conflict") == "m/s^2"


def test_vision_attenuates_conflict_under_head_roll():
    # oscillatory roll near the body resonance: an accurate, slightly
    # delayed visual vertical tracks the motion and shrinks the conflict
    dt = 0.001
    f = 1.9
    t = np.arange(40_000) * dt
    rho = 0.06 * np.sin(2 * np.pi * f * t)
    rotvel = np.zeros((t.size, 3))
    rotvel[:, 0] = np.gradient(rho, dt)
    angles = np.column_stack([rho, np.zeros_like(rho)])
    ts = _body_record(dt, t.size, rotvel=rotvel, angles=angles)

    base = VestibularParams()
    vis = VestibularParams(vision=VisionParams(enabled=True, rotation_gain=1.0,
                                               delay_s=0.05))
    _, c_off = perceive(ts, base)
    _, c_on = perceive(ts, vis)
    rms_off = np.sqrt(np.mean(c_off.channel("conflict")[10_000:] ** 2))
    rms_on = np.sqrt(np.mean(c_on.channel("conflict")[10_000:] ** 2))
    assert rms_on < rms_off


def test_perceive_bundles_channels():
    ts = _body_record(0.002, 1500, acc=np.array([0.5, 0.0, 0.0]))
    perceived, c = perceive(ts, VestibularParams())
    for name in ("sensed_rotvel_roll", "sensed_sf_z",
                 "sensed_vert_z", "expected_vert_z"):
        assert name in perceived.channel_names
    assert c.channel_names == ("conflict",)
    assert np.all(c.channel("conflict") >= 0.0)
