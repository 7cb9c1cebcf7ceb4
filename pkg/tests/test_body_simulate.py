"""Time-domain integration: oracles, passivity and bookkeeping."""

import numpy as np
import pytest

from ridecomfort.body import BodyParams, COORDINATE_NAMES, PostureConfig, build_model
from ridecomfort.body.integrate import (
    SEAT_INPUT_CHANNELS, create_state, mechanical_energy, simulate, step)
from ridecomfort.timeseries import from_arrays

Z_ONLY = tuple(n for n in COORDINATE_NAMES if n != "seat_z")


def _single_dof_model(m_total=60.0, k=60000.0, c=1500.0):
    """Seat-z chain collapsed to one coordinate: a textbook base-excited
    mass-spring-damper with known transmissibility."""
    params = BodyParams.from_preset("default", {
        "pelvis_mass_kg": m_total * 0.5,
        "trunk_mass_kg": m_total * 1.0 / 3.0,
        "head_mass_kg": m_total * 1.0 / 6.0,
        "seat_stiffness_z_N_per_m": k,
        "seat_damping_z_Ns_per_m": c,
    })
    return build_model(params, PostureConfig(locked_coordinates=Z_ONLY))


def _seat_record(dt, a_z):
    data = np.zeros((a_z.size, 3))
    data[:, 2] = a_z
    return from_arrays(dt, data, [(n, "m/s^2") for n in SEAT_INPUT_CHANNELS])


def test_zero_input_stays_exactly_at_rest():
    model = build_model(BodyParams.from_preset("default"))
    seat = _seat_record(0.001, np.zeros(2000))
    resp = simulate(model, seat)
    assert np.all(resp.samples == 0.0)


def test_single_dof_dwell_matches_transmissibility():
    m, k, c = 60.0, 60000.0, 1500.0
    model = _single_dof_model(m, k, c)
    dt = 0.001
    f = 4.0
    w = 2 * np.pi * f
    t = np.arange(int(12.0 / dt) + 1) * dt
    a = 1.5 * np.sin(w * t)
    resp = simulate(model, _seat_record(dt, a))
    out = resp.channel("pelvis_acc_z")

    # steady-state complex amplitude by quadrature over whole cycles
    n_cyc = int((t[-1] - 4.0) * f)
    span = int(round(n_cyc / f / dt))
    sl = slice(t.size - span, t.size)
    ph = np.exp(-1j * w * t[sl])
    resp_amp = 2.0 * np.mean(out[sl] * ph)
    in_amp = 2.0 * np.mean(a[sl] * ph)
    h_meas = resp_amp / in_amp
    h_ref = (k + 1j * w * c) / (k - m * w ** 2 + 1j * w * c)
    assert abs(abs(h_meas) - abs(h_ref)) / abs(h_ref) < 0.005
    assert abs(np.degrees(np.angle(h_meas / h_ref))) < 0.5


def test_step_matches_batch_simulate():
    model = _single_dof_model()
    dt = 0.001
    rng = np.random.default_rng(2)
    a = rng.standard_normal(400)
    seat = _seat_record(dt, a)
    resp = simulate(model, seat)

    state = create_state(model, dt)
    heads = []
    for i in range(a.size - 1):
        state, head = step(model, state, [0, 0, a[i]], dt,
                           seat_accel_next=[0, 0, a[i + 1]])
        heads.append(head["acc"][2])
    batch = resp.channel("head_acc_z")[1:]
    assert np.allclose(heads, batch, rtol=1e-10, atol=1e-12)


def test_step_rejects_wrong_dt():
    model = _single_dof_model()
    state = create_state(model, 0.001)
    with pytest.raises(ValueError):
        step(model, state, [0, 0, 1.0], 0.002)


def test_free_decay_energy_never_increases():
    params = BodyParams.from_preset("default", {
        "prop_gain_pelvis_Nm_per_rad": 0.0,
        "prop_gain_pelvis_Nms_per_rad": 0.0,
        "prop_gain_lumbar_Nm_per_rad": 0.0,
        "prop_gain_lumbar_Nms_per_rad": 0.0,
        "prop_gain_neck_Nm_per_rad": 0.0,
        "prop_gain_neck_Nms_per_rad": 0.0,
        "vestibular_gain_Nm_per_rad": 0.0,
        "vestibular_gain_Nms_per_rad": 0.0,
        "visual_enabled": False,
    })
    model = build_model(params)
    dt = 0.001
    rng = np.random.default_rng(7)
    state = create_state(model, dt)
    state.q = 0.01 * rng.standard_normal(model.n)
    state.qd = 0.05 * rng.standard_normal(model.n)

    energies = [mechanical_energy(model, state)]
    for _ in range(4000):
        state, _ = step(model, state, [0.0, 0.0, 0.0], dt)
        energies.append(mechanical_energy(model, state))
    energies = np.array(energies)
    assert np.all(np.diff(energies) <= 1e-12 * energies[0])
    assert energies[-1] < 0.01 * energies[0]


def test_simulate_meta_and_channels():
    model = build_model(BodyParams.from_preset("default"))
    rng = np.random.default_rng(0)
    seat = _seat_record(0.001, 0.5 * rng.standard_normal(3000))
    resp = simulate(model, seat)
    assert resp.meta["solver"] == "rk4"
    assert resp.meta["realtime_factor"] > 1.0
    for name in ("pelvis_acc_z", "head_acc_z", "head_rotvel_pitch",
                 "head_angle_pitch", "lumbar_angle_yaw"):
        assert name in resp.channel_names


def test_simulate_requires_seat_channels():
    model = build_model(BodyParams.from_preset("default"))
    bad = from_arrays(0.001, np.zeros((100, 1)), [("seat_acc_z", "m/s^2")])
    with pytest.raises(Exception):
        simulate(model, bad)
