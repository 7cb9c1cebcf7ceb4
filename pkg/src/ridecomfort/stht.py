"""Seat-to-head transmissibility runs and reference comparison.

Drives the assembled model with a reproducible excitation, estimates H1
transfer functions from the driven seat axis to trunk/head motion channels
and locates resonance peaks.  Results can be written as one CSV per channel
(freq_hz, gain, phase_deg, coherence) plus a resonance summary JSON.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ridecomfort.body.integrate import simulate
from ridecomfort.errors import GridMismatch, IoError
from ridecomfort.excitation import ExcitationSpec, generate_excitation
from ridecomfort.spectral import (
    FrequencyResponseFunction,
    WelchParams,
    detect_peaks,
    estimate_frf,
)

# Channels a transmissibility run reports against the driven seat axis.
RESPONSE_CHANNELS = (
    "trunk_acc_x", "trunk_acc_y", "trunk_acc_z",
    "head_acc_x", "head_acc_y", "head_acc_z",
    "trunk_rotvel_roll", "trunk_rotvel_pitch", "trunk_rotvel_yaw",
    "head_rotvel_roll", "head_rotvel_pitch", "head_rotvel_yaw",
)

_MIN_OVERLAP_DECADES = 1.0


@dataclass
class STHTResult:
    axis: str
    frfs: dict
    resonances: dict
    band_hz: tuple
    runtime_s: float
    meta: dict = field(default_factory=dict)

    def channels(self) -> tuple:
        return tuple(self.frfs)


def default_welch_params(n_samples: int, dt: float) -> WelchParams:
    """Segment length targeting ~8 s windows, shortened for brief records."""
    target = int(round(8.0 / dt))
    nperseg = 1 << max(int(np.log2(target)), 3)
    while nperseg > 8 and WelchParams(nperseg).n_segments(n_samples) < 2:
        nperseg //= 2
    return WelchParams(nperseg)


def run_stht(model, spec: ExcitationSpec, welch: WelchParams | None = None,
             band_hz: tuple | None = None, min_prominence: float = 0.1,
             channels=RESPONSE_CHANNELS) -> STHTResult:
    """Simulate the excitation and estimate all response-channel FRFs.

    ``band_hz`` restricts resonance peak hunting (defaults to the excited
    band).  Runtime covers only the body-model integration.
    """
    spec.validate()
    seat = generate_excitation(spec)
    t0 = time.perf_counter()
    response = simulate(model, seat)
    runtime = time.perf_counter() - t0

    welch = welch or default_welch_params(seat.n_samples, seat.dt)
    band = tuple(band_hz) if band_hz is not None else tuple(spec.band_hz)
    drive_name = f"seat_acc_{spec.axis}"
    drive = seat.channel(drive_name)

    frfs, resonances = {}, {}
    for name in channels:
        frf = estimate_frf(drive, response.channel(name), seat.dt, welch,
                           input_channel=drive_name, output_channel=name)
        frfs[name] = frf
        resonances[name] = detect_peaks(frf, band, min_prominence)
    return STHTResult(
        axis=spec.axis, frfs=frfs, resonances=resonances, band_hz=band,
        runtime_s=runtime,
        meta={
            "excitation": seat.meta,
            "welch_segment_length": welch.segment_length,
            "simulated_s": seat.duration,
            "realtime_factor": response.meta["realtime_factor"],
        },
    )


def save_stht_result(result: STHTResult, out_dir) -> list:
    """One CSV per channel plus a resonance/metadata JSON; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, frf in result.frfs.items():
        path = out / f"stht_{result.axis}_{name}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["freq_hz", "gain", "phase_deg", "coherence"])
            for f, g, p, c in zip(frf.freqs, frf.gain, frf.phase_deg, frf.coherence):
                writer.writerow([f"{f:.17g}", f"{g:.17g}", f"{p:.17g}", f"{c:.17g}"])
        written.append(path)
    summary = {
        "axis": result.axis,
        "band_hz": list(result.band_hz),
        "runtime_s": result.runtime_s,
        "resonances": {
            name: [{"freq_hz": f, "gain": g} for f, g in peaks]
            for name, peaks in result.resonances.items()
        },
    }
    path = out / f"stht_{result.axis}_resonances.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def load_reference_frf(path) -> tuple:
    """Read a (freq_hz, gain, phase_deg[, coherence]) CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(str(exc)) from None
    if not rows or rows[0][:3] != ["freq_hz", "gain", "phase_deg"]:
        raise IoError(f"{path}: expected freq_hz,gain,phase_deg header")
    data = np.array([[float(v) for v in row[:3]] for row in rows[1:]])
    return data[:, 0], data[:, 1], data[:, 2]


@dataclass(frozen=True)
class ChannelComparison:
    channel: str
    overlap_hz: tuple
    rms_gain_error_db: float
    rms_phase_error_deg: float
    peak_freq_error_hz: float


def compare_frf(frf: FrequencyResponseFunction, ref_freqs, ref_gain,
                ref_phase_deg, channel: str = "") -> ChannelComparison:
    """Log-frequency comparison of an estimated FRF against a reference curve.

    Raises GridMismatch when the two grids share less than one decade.
    """
    ref_freqs = np.asarray(ref_freqs, dtype=float)
    mask = frf.valid & (frf.freqs > 0) & (frf.gain > 0)
    f_lo = max(frf.freqs[mask].min(), ref_freqs[ref_freqs > 0].min())
    f_hi = min(frf.freqs[mask].max(), ref_freqs.max())
    if f_hi <= 0 or f_lo <= 0 or np.log10(f_hi / f_lo) < _MIN_OVERLAP_DECADES:
        raise GridMismatch(
            f"frequency overlap [{f_lo:.4g}, {f_hi:.4g}] Hz spans less than "
            f"{_MIN_OVERLAP_DECADES} decade")

    sel = mask & (frf.freqs >= f_lo) & (frf.freqs <= f_hi)
    f_eval = frf.freqs[sel]
    ref_gain = np.asarray(ref_gain, dtype=float)
    ref_phase_deg = np.asarray(ref_phase_deg, dtype=float)
    usable = (ref_freqs > 0) & (ref_gain > 0)
    logf_ref = np.log10(ref_freqs[usable])
    ref_g = np.interp(np.log10(f_eval), logf_ref, 20.0 * np.log10(ref_gain[usable]))
    ref_p = np.interp(np.log10(f_eval), logf_ref, ref_phase_deg[usable])
    est_g = 20.0 * np.log10(frf.gain[sel])
    est_p = frf.phase_deg[sel]
    # remove whole-turn offsets that unwrapping conventions introduce
    est_p = est_p - 360.0 * np.round((est_p - ref_p).mean() / 360.0)

    peak_est = f_eval[np.argmax(est_g)]
    rband = (ref_freqs >= f_lo) & (ref_freqs <= f_hi)
    peak_ref = ref_freqs[rband][np.argmax(ref_gain[rband])]
    return ChannelComparison(
        channel=channel,
        overlap_hz=(float(f_lo), float(f_hi)),
        rms_gain_error_db=float(np.sqrt(np.mean((est_g - ref_g) ** 2))),
        rms_phase_error_deg=float(np.sqrt(np.mean((est_p - ref_p) ** 2))),
        peak_freq_error_hz=float(abs(peak_est - peak_ref)),
    )


def compare_to_reference(result: STHTResult, reference_dir) -> dict:
    """Compare every channel that has a matching reference CSV.

    Reference files follow the save_stht_result naming scheme.
    """
    ref = Path(reference_dir)
    report = {}
    for name, frf in result.frfs.items():
        path = ref / f"stht_{result.axis}_{name}.csv"
        if not path.exists():
            continue
        freqs, gain, phase = load_reference_frf(path)
        report[name] = compare_frf(frf, freqs, gain, phase, channel=name)
    if not report:
        raise IoError(f"no matching reference CSVs in {reference_dir}")
    return report
