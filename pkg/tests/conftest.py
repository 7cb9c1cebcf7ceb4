"""Shared fixtures: small scenario configs that keep test runtime low."""

import json
import copy

import pytest

_ACCEPTANCE_LINES = []


def record_verdict(line: str) -> None:
    """Collect acceptance verdicts for the end-of-run summary."""
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

# 6 s of band noise at 500 Hz: long enough for Welch segments and the
# sickness chain, short enough that a pipeline run stays under a second.
TINY_SCENARIO = {
    "schema_version": 1,
    "seed": 42,
    "input": {
        "kind": "excitation",
        "axis": "z",
        "signal": "noise",
        "band_hz": [2.5, 8.0],
        "rms_m_s2": 0.6,
        "duration_s": 6.0,
        "dt_s": 0.002,
    },
    "model": {"preset": "default", "overrides": {}},
    "posture": {"posture": "erect", "backrest_contact": "high"},
    "perception": {"vision": {"enabled": False}},
    "accumulator": {},
    "metrics": {"weighted_rms": True, "msdv": True, "settle_s": 0.5},
}


def make_scenario(**tweaks) -> dict:
    raw = copy.deepcopy(TINY_SCENARIO)
    for key, value in tweaks.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    return raw


@pytest.fixture
def tiny_config(tmp_path):
    """Write the tiny scenario to disk and return its path."""
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(TINY_SCENARIO))
    return path


@pytest.fixture
def write_scenario(tmp_path):
    """Factory writing tweaked scenarios; returns the config path."""
    def _write(name="scenario.json", **tweaks):
        path = tmp_path / name
        path.write_text(json.dumps(make_scenario(**tweaks)))
        return path
    return _write
