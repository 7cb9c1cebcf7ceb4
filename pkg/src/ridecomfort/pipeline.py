"""Configuration-driven scenario runner chaining the simulation stages.

A scenario JSON file describes the seat-motion input, the body model and
posture, perception and accumulation parameters, and metric selection.
``run_pipeline`` executes the stages in order (input, body, perception,
sickness, metrics), persists every intermediate trace to the output
directory, and writes a deterministic ``report.json`` plus a volatile
``timing.json`` holding wall clocks and realtime factors.  Keeping timing
out of the report makes two runs of the same scenario byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .body import BodyParams, PostureConfig, build_model
from .body.integrate import simulate
from .comfort import comfort_report, save_comfort_report
from .errors import ConfigError, IoError, RideComfortError, StageError
from .excitation import SEAT_CHANNELS, ExcitationSpec, generate_excitation
from .perception import VestibularParams, VisionParams, perceive
from .sickness import AccumulatorParams, accumulate, save_summary, summarize
from .spectral import WelchParams, detect_peaks, estimate_frf
from .stht import RESPONSE_CHANNELS, default_welch_params
from .timeseries import load_timeseries, save_timeseries

SCHEMA_VERSION = 1

STAGE_ORDER = ("input", "body", "perception", "sickness", "metrics")

# channels scanned for resonance peaks in the run report
_RESONANCE_CHANNELS = (
    "head_acc_x", "head_acc_y", "head_acc_z",
    "head_rotvel_roll", "head_rotvel_pitch", "head_rotvel_yaw",
)
_DEFAULT_RESONANCE_BAND = (0.5, 10.0)
_QUIET_INPUT_RMS = 1e-10


# -- configuration ------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: every field ready for the stage functions."""

    input_kind: str                     # "excitation" | "csv"
    excitation: ExcitationSpec | None
    input_path: Path | None
    body: BodyParams
    posture: PostureConfig
    perception: VestibularParams
    accumulator: AccumulatorParams
    metrics_rms: bool
    metrics_msdv: bool
    metrics_settle_s: float
    stht: dict
    output_dir: Path | None
    seed: int | None


class _Section:
    """Typed key extraction from one config dict, collecting all errors."""

    def __init__(self, raw, path, errors):
        self.raw = raw if isinstance(raw, dict) else {}
        self.path = path
        self.errors = errors
        self.seen = set()
        if raw is not None and not isinstance(raw, dict):
            errors.append((path or "config", "must be a JSON object"))

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def take(self, key, kinds, default=None, required=False):
        self.seen.add(key)
        if key not in self.raw:
            if required:
                self.errors.append((self._name(key), "required key is missing"))
            return default
        value = self.raw[key]
        ok = isinstance(value, kinds)
        if ok and kinds is not bool and isinstance(value, bool) and bool not in (
                kinds if isinstance(kinds, tuple) else (kinds,)):
            ok = False
        if not ok:
            wanted = kinds.__name__ if not isinstance(kinds, tuple) else \
                "/".join(k.__name__ for k in kinds)
            self.errors.append((self._name(key),
                                f"expected {wanted}, got {type(value).__name__}"))
            return default
        return value

    def reject_unknown(self):
        for key in sorted(set(self.raw) - self.seen):
            self.errors.append((self._name(key), "unknown key"))


def _number(section, key, default=None, required=False):
    return section.take(key, (int, float), default, required)


def load_config(path):
    """Read a scenario JSON file; IoError on unreadable, ConfigError on bad JSON."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"not valid JSON: {exc}")]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([("", "top level must be a JSON object")])
    return raw


def apply_cli_overrides(raw, seed=None, axis=None, vision=None):
    """Fold command-line overrides into a raw config dict (returns a copy)."""
    raw = json.loads(json.dumps(raw))
    if seed is not None:
        raw["seed"] = seed
        if isinstance(raw.get("input"), dict) and \
                raw["input"].get("kind") == "excitation":
            raw["input"]["seed"] = seed
    if axis is not None and isinstance(raw.get("input"), dict) and \
            raw["input"].get("kind") == "excitation":
        raw["input"]["axis"] = axis
    if vision is not None:
        per = raw.setdefault("perception", {})
        if isinstance(per, dict):
            vis = per.setdefault("vision", {})
            if isinstance(vis, dict):
                vis["enabled"] = vision == "on"
    return raw


def _validate_input(raw, base_dir, seed_given, errors):
    sec = _Section(raw, "input", errors)
    if raw is None:
        errors.append(("input", "required section is missing"))
        return "excitation", None, None
    kind = sec.take("kind", str, required=True)
    if kind not in ("excitation", "csv"):
        if kind is not None:
            errors.append(("input.kind", "must be 'excitation' or 'csv'"))
        return "excitation", None, None
    if kind == "csv":
        rel = sec.take("path", str, required=True)
        sec.reject_unknown()
        if rel is None:
            return kind, None, None
        path = (base_dir / rel).resolve() if not Path(rel).is_absolute() \
            else Path(rel)
        if not path.is_file():
            errors.append(("input.path", f"file not found: {path}"))
        return kind, None, path
    spec = ExcitationSpec(
        axis=sec.take("axis", str, "z"),
        kind=sec.take("signal", str, "noise"),
        band_hz=tuple(sec.take("band_hz", list, [0.5, 12.0])),
        rms_m_s2=_number(sec, "rms_m_s2", 0.5),
        duration_s=_number(sec, "duration_s", 120.0),
        dt_s=_number(sec, "dt_s", 0.001),
        seed=sec.take("seed", int, 0),
    )
    if "seed" not in sec.raw and not seed_given:
        errors.append(("input.seed",
                       "a seed is required for synthetic excitation "
                       "(here or at the top level)"))
    sec.reject_unknown()
    try:
        spec.validate()
    except (RideComfortError, ValueError) as exc:
        errors.append(("input", str(exc)))
    return kind, spec, None


def _validate_model(raw, errors):
    sec = _Section(raw or {}, "model", errors)
    preset = sec.take("preset", str, "default")
    overrides = sec.take("overrides", dict, {})
    sec.reject_unknown()
    known = set(BodyParams.field_names())
    clean = {}
    for key in sorted(overrides):
        if key not in known:
            errors.append((f"model.overrides.{key}", "unknown field"))
        else:
            clean[key] = overrides[key]
    try:
        return BodyParams.from_preset(preset, clean)
    except ConfigError as exc:
        for path, msg in exc.errors:
            leaf = path.rsplit(".", 1)[-1]
            if leaf in clean and not path.startswith("model.overrides"):
                path = f"model.overrides.{leaf}"
            errors.append((path, msg))
    except (TypeError, ValueError) as exc:
        errors.append(("model.overrides", str(exc)))
    return None


def _validate_posture(raw, errors):
    sec = _Section(raw or {}, "posture", errors)
    posture = PostureConfig(
        posture=sec.take("posture", str, "erect"),
        backrest_contact=sec.take("backrest_contact", str, "high"),
        initial_joint_angles_rad=sec.take("initial_joint_angles_rad", dict),
        locked_coordinates=tuple(sec.take("locked_coordinates", list, [])),
    )
    sec.reject_unknown()
    try:
        posture.validate()
    except ConfigError as exc:
        for path, msg in exc.errors:
            errors.append((f"posture.{path}", msg))
    return posture


def _validate_perception(raw, errors):
    sec = _Section(raw or {}, "perception", errors)
    vis_sec = _Section(sec.take("vision", dict, {}) or {}, "perception.vision",
                       errors)
    vision = VisionParams(
        enabled=vis_sec.take("enabled", bool, False),
        rotation_gain=_number(vis_sec, "rotation_gain", 1.0),
        delay_s=_number(vis_sec, "delay_s", 0.2),
    )
    vis_sec.reject_unknown()
    params = VestibularParams(
        canal_tau_long_s=_number(sec, "canal_tau_long_s", 5.7),
        canal_tau_short_s=_number(sec, "canal_tau_short_s", 0.005),
        otolith_gain=_number(sec, "otolith_gain", 1.0),
        sv_time_constant_s=_number(sec, "sv_time_constant_s", 5.0),
        vision=vision,
    )
    anticipation = sec.take("anticipation", bool, False)
    if anticipation:
        errors.append(("perception.anticipation",
                       "anticipatory expectation is not implemented; "
                       "must be false"))
    sec.reject_unknown()
    try:
        params.validate()
    except ValueError as exc:
        errors.append(("perception", str(exc)))
    return params


def _validate_accumulator(raw, errors):
    sec = _Section(raw or {}, "accumulator", errors)
    params = AccumulatorParams(
        half_saturation_m_s2=_number(sec, "half_saturation_m_s2", 0.5),
        hill_exponent=_number(sec, "hill_exponent", 2.0),
        time_constant_s=_number(sec, "time_constant_s", 720.0),
        ceiling_percent=_number(sec, "ceiling_percent", 85.0),
    )
    sec.reject_unknown()
    try:
        params.validate()
    except ValueError as exc:
        errors.append(("accumulator", str(exc)))
    return params


def _validate_stht(raw, errors):
    if raw is None:
        return {"band_hz": None, "min_prominence": 0.1,
                "welch": None, "channels": None}
    sec = _Section(raw, "stht", errors)
    band = sec.take("band_hz", list)
    if band is not None and not (len(band) == 2 and
                                 all(isinstance(v, (int, float)) and
                                     not isinstance(v, bool) for v in band) and
                                 0 < band[0] < band[1]):
        errors.append(("stht.band_hz", "must be [low, high] with 0 < low < high"))
        band = None
    prominence = _number(sec, "min_prominence", 0.1)
    if prominence is not None and prominence <= 0:
        errors.append(("stht.min_prominence", "must be > 0"))
    welch = None
    raw_welch = sec.take("welch", dict)
    if raw_welch is not None:
        wsec = _Section(raw_welch, "stht.welch", errors)
        seg = wsec.take("segment_length", int, required=True)
        overlap = _number(wsec, "overlap", 0.5)
        window = wsec.take("window", str, "hann")
        wsec.reject_unknown()
        if seg is not None:
            try:
                welch = WelchParams(seg, overlap, window)
            except (RideComfortError, ValueError) as exc:
                errors.append(("stht.welch", str(exc)))
    channels = sec.take("channels", list)
    if channels is not None:
        for ch in channels:
            if ch not in RESPONSE_CHANNELS:
                errors.append(("stht.channels", f"unknown channel {ch!r}"))
    sec.reject_unknown()
    return {"band_hz": tuple(band) if band else None,
            "min_prominence": prominence, "welch": welch,
            "channels": tuple(channels) if channels else None}


def build_config(raw, base_dir="."):
    """Validate a raw config dict; returns (ScenarioConfig | None, errors)."""
    errors = []
    base_dir = Path(base_dir)
    top = _Section(raw, "", errors)
    version = top.take("schema_version", int, required=True)
    if version is not None and version != SCHEMA_VERSION:
        errors.append(("schema_version",
                       f"unsupported version {version}, expected {SCHEMA_VERSION}"))
    seed = top.take("seed", int)
    input_raw = top.take("input", dict, required=True)
    kind, spec, input_path = _validate_input(
        input_raw, base_dir, seed is not None, errors)
    body = _validate_model(top.take("model", dict, {}), errors)
    posture = _validate_posture(top.take("posture", dict, {}), errors)
    perception = _validate_perception(top.take("perception", dict, {}), errors)
    accumulator = _validate_accumulator(top.take("accumulator", dict, {}),
                                        errors)
    metrics_sec = _Section(top.take("metrics", dict, {}) or {}, "metrics",
                           errors)
    metrics_rms = metrics_sec.take("weighted_rms", bool, True)
    metrics_msdv = metrics_sec.take("msdv", bool, True)
    settle = _number(metrics_sec, "settle_s", 0.0)
    if settle is not None and settle < 0:
        errors.append(("metrics.settle_s", "must be >= 0"))
    metrics_sec.reject_unknown()
    stht = _validate_stht(top.take("stht", dict), errors)
    out_dir = top.take("output_dir", str)
    if seed is not None and seed < 0:
        errors.append(("seed", "must be >= 0"))
    top.reject_unknown()
    if errors:
        return None, errors
    if seed is not None and spec is not None and "seed" not in (input_raw or {}):
        spec = replace(spec, seed=seed)
    config = ScenarioConfig(
        input_kind=kind, excitation=spec, input_path=input_path,
        body=body, posture=posture, perception=perception,
        accumulator=accumulator, metrics_rms=metrics_rms,
        metrics_msdv=metrics_msdv, metrics_settle_s=float(settle),
        stht=stht, output_dir=Path(out_dir) if out_dir else None, seed=seed)
    return config, []


def validate_config(path):
    """All validation errors for a config file; empty list means ok."""
    try:
        raw = load_config(path)
    except ConfigError as exc:
        return list(exc.errors)
    _, errors = build_config(raw, Path(path).parent)
    return errors


def parse_config(path, seed=None, axis=None, vision=None):
    """Load, override and validate; raises ConfigError listing every problem."""
    raw = apply_cli_overrides(load_config(path), seed, axis, vision)
    config, errors = build_config(raw, Path(path).parent)
    if errors:
        raise ConfigError(errors)
    return config


# -- stages -------------------------------------------------------------------

def _wrap(stage):
    def deco(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (RideComfortError, ValueError, OSError) as exc:
                if isinstance(exc, StageError):
                    raise
                raise StageError(stage, exc) from exc
        return run
    return deco


@_wrap("input")
def stage_input(config, out_dir):
    """Generate or load the seat motion and persist the normalized record."""
    if config.input_kind == "excitation":
        seat = generate_excitation(config.excitation)
    else:
        seat = load_timeseries(config.input_path, schema=SEAT_CHANNELS)
        seat = seat.select([name for name, _ in SEAT_CHANNELS])
    save_timeseries(seat, Path(out_dir) / "seat_motion.csv")
    return seat


def _resonance_scan(config, seat, body):
    """Peaks of measured head FRFs against the dominant input axis.

    Quiet inputs, or inputs without broadband content, yield no valid bins
    and therefore an empty peak table.
    """
    rms = {axis: float(np.sqrt(np.mean(seat.channel(f"seat_acc_{axis}") ** 2)))
           for axis in ("x", "y", "z")}
    axis = max(rms, key=rms.get)
    if rms[axis] < _QUIET_INPUT_RMS:
        return {"axis_used": None, "band_hz": None, "peaks": {}}
    welch = config.stht["welch"] or default_welch_params(seat.n_samples, seat.dt)
    band = config.stht["band_hz"] or _DEFAULT_RESONANCE_BAND
    x = seat.channel(f"seat_acc_{axis}")
    peaks = {}
    lo, hi = band
    for name in _RESONANCE_CHANNELS:
        frf = estimate_frf(x, body.channel(name), seat.dt, welch,
                           input_channel=f"seat_acc_{axis}",
                           output_channel=name)
        lo_c = max(lo, float(frf.freqs[1]))
        hi_c = min(hi, float(frf.freqs[-1]))
        if lo_c >= hi_c:
            continue
        in_band = frf.band(lo_c, hi_c)
        if np.count_nonzero(frf.valid & in_band) < 0.5 * np.count_nonzero(in_band):
            continue
        found = detect_peaks(frf, (lo_c, hi_c), config.stht["min_prominence"])
        if found:
            peaks[name] = [[f, g] for f, g in found]
    return {"axis_used": axis, "band_hz": [lo, hi], "peaks": peaks}


@_wrap("body")
def stage_body(config, out_dir, seat):
    """Simulate the seated-body response and scan it for resonances."""
    model = build_model(config.body, config.posture)
    body = simulate(model, seat)
    save_timeseries(body, Path(out_dir) / "body_response.csv")
    resonances = _resonance_scan(config, seat, body)
    with open(Path(out_dir) / "resonances.json", "w") as fh:
        json.dump(resonances, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return body, resonances


@_wrap("perception")
def stage_perception(config, out_dir, body):
    perceived, conflict = perceive(body, config.perception)
    save_timeseries(perceived, Path(out_dir) / "perceived.csv")
    save_timeseries(conflict, Path(out_dir) / "conflict.csv")
    return perceived, conflict


@_wrap("sickness")
def stage_sickness(config, out_dir, conflict):
    trace = accumulate(conflict, config.accumulator)
    save_timeseries(trace, Path(out_dir) / "sickness.csv")
    summary = summarize(trace)
    save_summary(summary, Path(out_dir) / "sickness_summary.json")
    return trace, summary


@_wrap("metrics")
def stage_metrics(config, out_dir, seat, body):
    report = comfort_report(seat, body, config.metrics_settle_s,
                            config.metrics_rms, config.metrics_msdv)
    save_comfort_report(report, Path(out_dir) / "comfort.json")
    return report


_STAGE_FILES = {
    "input": ("seat_motion.csv",),
    "body": ("body_response.csv", "resonances.json"),
    "perception": ("perceived.csv", "conflict.csv"),
    "sickness": ("sickness.csv", "sickness_summary.json"),
    "metrics": ("comfort.json",),
}


# -- pipeline -----------------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    """Everything one scenario run produced, plus where and how fast."""

    out_dir: Path
    manifest: dict                      # stage -> relative file names
    summary: dict
    stage_wall_s: dict
    body_realtime_factor: float
    pipeline_realtime_factor: float

    def as_dict(self):
        return {"schema_version": SCHEMA_VERSION,
                "manifest": {k: list(v) for k, v in self.manifest.items()},
                "summary": self.summary}

    def timing_dict(self):
        return {"stage_wall_s": dict(self.stage_wall_s),
                "body_realtime_factor": self.body_realtime_factor,
                "pipeline_realtime_factor": self.pipeline_realtime_factor,
                "faster_than_realtime": self.body_realtime_factor > 1.0}


def run_pipeline(config, out_dir=None):
    """Execute every stage in order and persist all artifacts.

    Returns a RunReport.  ``report.json`` contains only deterministic
    content; wall clocks and realtime factors go to ``timing.json`` so the
    artifact tree is byte-identical across runs of the same scenario.
    """
    out = Path(out_dir) if out_dir is not None else config.output_dir
    if out is None:
        raise ConfigError([("output_dir",
                            "required (config key or --out option)")])
    out.mkdir(parents=True, exist_ok=True)
    wall = {}
    t0 = time.perf_counter()
    seat = stage_input(config, out)
    wall["input"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    body, resonances = stage_body(config, out, seat)
    wall["body"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    _, conflict = stage_perception(config, out, body)
    wall["perception"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    _, sick = stage_sickness(config, out, conflict)
    wall["sickness"] = time.perf_counter() - t3

    t4 = time.perf_counter()
    comfort = stage_metrics(config, out, seat, body)
    wall["metrics"] = time.perf_counter() - t4
    total_wall = time.perf_counter() - t0

    head_rms = {axis: float(np.sqrt(np.mean(
        body.channel(f"head_acc_{axis}") ** 2))) for axis in ("x", "y", "z")}
    summary = {
        "duration_s": seat.duration,
        "head_rms_m_s2": head_rms,
        "resonances": resonances,
        "final_msi_percent": sick.final_percent,
        "peak_msi_percent": sick.peak_percent,
        "comfort": comfort.as_dict(),
    }
    report = RunReport(
        out_dir=out,
        manifest={stage: _STAGE_FILES[stage] for stage in STAGE_ORDER},
        summary=summary,
        stage_wall_s=wall,
        body_realtime_factor=float(body.meta["realtime_factor"]),
        pipeline_realtime_factor=seat.duration / max(total_wall, 1e-12),
    )
    with open(out / "report.json", "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "timing.json", "w") as fh:
        json.dump(report.timing_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
