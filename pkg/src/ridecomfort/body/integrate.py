"""Fixed-step time integration of the assembled model.

Classic RK4 on the second-order system, with delayed feedback handled by
ring buffers of sensed joint/head samples.  Delays are quantized to whole
steps (N = round(delay/dt)); substage values interpolate linearly between
the two bracketing buffer slots, and seat acceleration interpolates
linearly across the step.

Because the system is linear, one full RK4 step is an exact affine map of
(state, buffer taps, inputs).  The kernel precomputes that map by running
the literal stage arithmetic on basis vectors once per (model, dt); stepping
then costs a single small matrix-vector product.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ridecomfort.errors import NonFiniteState
from ridecomfort.timeseries import TimeSeries

_CHECK_EVERY = 256  # steps between finiteness sweeps inside simulate

SEAT_INPUT_CHANNELS = ("seat_acc_x", "seat_acc_y", "seat_acc_z")


@dataclass
class _DelayTap:
    name: str
    N: int              # delay in whole steps, >= 1
    width: int          # 2 * sensed components (value and rate stacked)
    S_z: np.ndarray     # (width, 2n): sensed sample from the state vector
    T: np.ndarray       # (n, width): qdd contribution of a delayed sample


@dataclass
class _StepKernel:
    dt: float
    n: int
    A2: np.ndarray      # qdd = A2 q + A1 qd + Bi a + sum(T u_delayed)
    A1: np.ndarray
    Bi: np.ndarray
    taps: list
    G: np.ndarray       # one-step affine map, (2n, D)
    D: int
    slices: list        # work-vector slices: z, per-tap (lagN, lagN-1), a0, a1

    def rhs(self, q, qd, a, u_list):
        qdd = self.A2 @ q + self.A1 @ qd + self.Bi @ a
        for tap, u in zip(self.taps, u_list):
            qdd = qdd + tap.T @ u
        return qdd


@dataclass
class BodyState:
    """Integrator state: coordinate deviations from equilibrium plus delay buffers."""

    q: np.ndarray
    qd: np.ndarray
    time: float = 0.0
    step_count: int = 0
    kernel_dt: float | None = None
    buffers: list = field(default_factory=list, repr=False)
    buf_pos: list = field(default_factory=list, repr=False)


def _literal_rk4(kernel: _StepKernel, z, u_N, u_Nm1, a0, a1):
    """Reference RK4 step used to synthesize (and test) the step map."""
    n = kernel.n
    dt = kernel.dt
    am = 0.5 * (a0 + a1)
    u_mid = [0.5 * (uN + uM) for uN, uM in zip(u_N, u_Nm1)]

    def f(zz, a, uu):
        out = np.empty_like(zz)
        out[:n] = zz[n:]
        out[n:] = kernel.rhs(zz[:n], zz[n:], a, uu)
        return out

    k1 = f(z, a0, u_N)
    k2 = f(z + 0.5 * dt * k1, am, u_mid)
    k3 = f(z + 0.5 * dt * k2, am, u_mid)
    k4 = f(z + dt * k3, a1, u_Nm1)
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _build_kernel(model, dt: float) -> _StepKernel:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = model.n
    solve = lambda rhs: sla.cho_solve(model.mass_cho, rhs)

    Keff = model.K.copy()
    Ceff = model.C.copy()
    taps = []
    for ch in model.channels:
        N = int(round(ch.delay_s / dt))
        if N == 0:
            gp, gd = ch.gain_matrices()
            Keff += gp
            Ceff += gd
            continue
        m = ch.sense.shape[0]
        S_z = np.zeros((2 * m, 2 * n))
        S_z[:m, :n] = ch.sense
        S_z[m:, n:] = ch.sense
        T = -solve(np.hstack([ch.act * ch.kp, ch.act * ch.kd]))
        taps.append(_DelayTap(ch.name, N, 2 * m, S_z, T))

    kernel = _StepKernel(
        dt=dt, n=n,
        A2=-solve(Keff), A1=-solve(Ceff), Bi=-solve(model.Gamma),
        taps=taps, G=np.empty(0), D=0, slices=[],
    )

    # Work-vector layout: [z | tap0 lagN | tap0 lagN-1 | ... | a_i | a_i+1].
    slices = [slice(0, 2 * n)]
    off = 2 * n
    for tap in taps:
        slices.append(slice(off, off + tap.width))
        slices.append(slice(off + tap.width, off + 2 * tap.width))
        off += 2 * tap.width
    slices.append(slice(off, off + 3))
    slices.append(slice(off + 3, off + 6))
    D = off + 6

    G = np.empty((2 * n, D))
    zeros_u = [np.zeros(tap.width) for tap in taps]
    for d in range(D):
        work = np.zeros(D)
        work[d] = 1.0
        z = work[slices[0]]
        u_N = [work[slices[1 + 2 * k]] for k in range(len(taps))]
        u_Nm1 = [work[slices[2 + 2 * k]] for k in range(len(taps))]
        a0 = work[slices[-2]]
        a1 = work[slices[-1]]
        G[:, d] = _literal_rk4(kernel, z, u_N or zeros_u, u_Nm1 or zeros_u, a0, a1)

    kernel.G = G
    kernel.D = D
    kernel.slices = slices
    return kernel


def _get_kernel(model, dt: float) -> _StepKernel:
    kernel = model._kernels.get(dt)
    if kernel is None:
        kernel = _build_kernel(model, dt)
        model._kernels[dt] = kernel
    return kernel


def create_state(model, dt: float) -> BodyState:
    """Fresh state at static equilibrium with quiescent delay buffers."""
    kernel = _get_kernel(model, dt)
    n = model.n
    state = BodyState(q=np.zeros(n), qd=np.zeros(n), kernel_dt=dt)
    for tap in kernel.taps:
        state.buffers.append(np.zeros((tap.N + 1, tap.width)))
        state.buf_pos.append(0)
    return state


def step(model, state: BodyState, seat_accel, dt: float, seat_accel_next=None):
    """Advance one step; returns the state and head kinematics at the new time.

    ``seat_accel`` is the lab-frame seat acceleration (x, y, z) at the start
    of the step; pass ``seat_accel_next`` when the value at the end of the
    step is known, otherwise it is held constant.
    """
    if state.kernel_dt is None:
        raise ValueError("state was not created for a step size; use create_state")
    if state.kernel_dt != dt:
        raise ValueError(f"state was created for dt={state.kernel_dt}, got {dt}")
    kernel = _get_kernel(model, dt)
    a0 = np.asarray(seat_accel, dtype=float)
    a1 = a0 if seat_accel_next is None else np.asarray(seat_accel_next, dtype=float)

    work = np.zeros(kernel.D)
    work[kernel.slices[0]] = np.concatenate([state.q, state.qd])
    for k, tap in enumerate(kernel.taps):
        buf, pos, L = state.buffers[k], state.buf_pos[k], tap.N + 1
        work[kernel.slices[1 + 2 * k]] = buf[(pos + 1) % L]   # lag N
        work[kernel.slices[2 + 2 * k]] = buf[(pos + 2) % L]   # lag N-1
    work[kernel.slices[-2]] = a0
    work[kernel.slices[-1]] = a1

    z1 = kernel.G @ work
    n = kernel.n
    state.q = z1[:n].copy()
    state.qd = z1[n:].copy()
    state.time += dt
    state.step_count += 1
    if not np.all(np.isfinite(z1)):
        bad = int(np.argmax(~np.isfinite(z1)))
        raise NonFiniteState(state.time, model.coords[bad % n])

    u_new = []
    for k, tap in enumerate(kernel.taps):
        pos = (state.buf_pos[k] + 1) % (tap.N + 1)
        state.buffers[k][pos] = tap.S_z @ z1
        state.buf_pos[k] = pos
        u_new.append(state.buffers[k][(pos + 1) % (tap.N + 1)])

    qdd = kernel.rhs(state.q, state.qd, a1, u_new)
    out = model.outputs
    y = out.evaluate(state.q, state.qd, qdd, a1)
    head = {
        "acc": np.array([y[out.index(f"head_acc_{ax}")] for ax in "xyz"]),
        "rotvel": np.array([y[out.index(f"head_rotvel_{ax}")]
                            for ax in ("roll", "pitch", "yaw")]),
        "angle": np.array([y[out.index(f"head_angle_{ax}")]
                           for ax in ("roll", "pitch")]),
    }
    return state, head


def simulate(model, seat_motion: TimeSeries, initial_state: BodyState | None = None,
             ) -> TimeSeries:
    """Drive the model with a seat acceleration record.

    Returns the body response sampled on the input grid: segment
    accelerations, trunk/head rotational velocities and joint/head angles.
    Delayed channels start from a quiescent (equilibrium) history.
    """
    for name in SEAT_INPUT_CHANNELS:
        seat_motion.index(name)
    A = seat_motion.select(SEAT_INPUT_CHANNELS).samples
    dt = seat_motion.dt
    n_steps = seat_motion.n_samples
    kernel = _get_kernel(model, dt)
    n = kernel.n

    z = np.zeros(2 * n)
    if initial_state is not None:
        z = np.concatenate([initial_state.q, initial_state.qd])

    taps = kernel.taps
    n_taps = len(taps)
    Z = np.empty((n_steps, 2 * n))
    S_hist = [np.empty((n_steps, tap.width)) for tap in taps]
    zero_u = [np.zeros(tap.width) for tap in taps]

    sl = kernel.slices
    G = kernel.G
    work = np.zeros(kernel.D)

    t_begin = _time.perf_counter()
    for i in range(n_steps):
        Z[i] = z
        for k in range(n_taps):
            S_hist[k][i] = taps[k].S_z @ z
        if i == n_steps - 1:
            break
        work[sl[0]] = z
        for k in range(n_taps):
            N = taps[k].N
            work[sl[1 + 2 * k]] = S_hist[k][i - N] if i >= N else zero_u[k]
            work[sl[2 + 2 * k]] = S_hist[k][i - N + 1] if i >= N - 1 else zero_u[k]
        work[sl[-2]] = A[i]
        work[sl[-1]] = A[i + 1]
        z = G @ work
        if (i + 1) % _CHECK_EVERY == 0 and not np.all(np.isfinite(z)):
            bad = int(np.argmax(~np.isfinite(z)))
            raise NonFiniteState((i + 1) * dt, model.coords[bad % n])
    wall = _time.perf_counter() - t_begin

    if not np.all(np.isfinite(Z)):
        rows, cols = np.nonzero(~np.isfinite(Z))
        raise NonFiniteState(rows[0] * dt, model.coords[cols[0] % n])

    # Instantaneous qdd from the same right-hand side, vectorized over time.
    Q, Qd = Z[:, :n], Z[:, n:]
    QDD = Q @ kernel.A2.T + Qd @ kernel.A1.T + A @ kernel.Bi.T
    for k, tap in enumerate(taps):
        lagged = np.zeros_like(S_hist[k])
        if n_steps > tap.N:
            lagged[tap.N:] = S_hist[k][:n_steps - tap.N]
        QDD += lagged @ tap.T.T

    Y = model.outputs.evaluate(Q, Qd, QDD, A)
    meta = dict(seat_motion.meta)
    meta.update({
        "wall_clock_s": wall,
        "realtime_factor": seat_motion.duration / wall if wall > 0 else float("inf"),
        "solver": "rk4",
        "dt_s": dt,
    })
    return TimeSeries(
        start_time=seat_motion.start_time, dt=dt,
        channels=tuple(zip(model.outputs.names, model.outputs.units)),
        samples=Y, meta=meta,
    )


def mechanical_energy(model, state: BodyState) -> float:
    """Kinetic plus elastic plus gravitational energy of the deviation.

    Quadratic form about static equilibrium; for a passive model with zero
    input this never increases along a trajectory.
    """
    q, qd = state.q, state.qd
    return 0.5 * float(qd @ model.M @ qd) + 0.5 * float(q @ model.K @ q)
