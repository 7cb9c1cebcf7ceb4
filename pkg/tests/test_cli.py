"""Command-line entry points, exit codes and stage sequencing."""

import json

from ridecomfort.cli import main
from conftest import make_scenario


def _write(tmp_path, raw, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def test_validate_ok_and_exit_zero(tiny_config, capsys):
    assert main(["validate", "--config", str(tiny_config)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_lists_problems_exit_one(tmp_path, capsys):
    raw = make_scenario()
    raw["model"]["overrides"] = {"bogus_key": 1}
    raw["schema_version"] = 1
    raw["perception"]["anticipation"] = True
    path = _write(tmp_path, raw)
    assert main(["validate", "--config", str(path)]) == 1
    out = capsys.readouterr().out
    assert "model.overrides.bogus_key" in out
    assert "perception.anticipation" in out


def test_bad_config_exit_code_one(tmp_path, capsys):
    path = _write(tmp_path, {"schema_version": 1})
    assert main(["pipeline", "--config", str(path),
                 "--out", str(tmp_path / "o")]) == 1
    assert "input" in capsys.readouterr().err


def test_pipeline_single_run(tiny_config, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["pipeline", "--config", str(tiny_config),
                 "--out", str(out)]) == 0
    assert (out / "report.json").exists()
    assert "final MSI" in capsys.readouterr().out


def test_stage_sequence_equals_pipeline(tiny_config, tmp_path):
    pipe_dir = tmp_path / "pipe"
    stage_dir = tmp_path / "stages"
    assert main(["pipeline", "--config", str(tiny_config),
                 "--out", str(pipe_dir)]) == 0
    for cmd in ("simulate", "perceive", "sickness", "metrics"):
        assert main([cmd, "--config", str(tiny_config),
                     "--out", str(stage_dir)]) == 0, cmd

    for name in ("seat_motion.csv", "body_response.csv", "perceived.csv",
                 "conflict.csv", "sickness.csv", "sickness_summary.json",
                 "comfort.json"):
        assert (pipe_dir / name).read_bytes() == \
            (stage_dir / name).read_bytes(), name


def test_stage_missing_artifact_exit_two(tiny_config, tmp_path, capsys):
    # perceive before simulate: the body response is absent
    assert main(["perceive", "--config", str(tiny_config),
                 "--out", str(tmp_path / "empty")]) == 2
    err = capsys.readouterr().err
    assert "body_response.csv" in err


def test_seed_override_changes_output(tiny_config, tmp_path):
    a, b, c = (tmp_path / n for n in ("a", "b", "c"))
    main(["pipeline", "--config", str(tiny_config), "--out", str(a)])
    main(["pipeline", "--config", str(tiny_config), "--out", str(b),
          "--seed", "7"])
    main(["pipeline", "--config", str(tiny_config), "--out", str(c),
          "--seed", "7"])
    seat = "seat_motion.csv"
    assert (a / seat).read_bytes() != (b / seat).read_bytes()
    assert (b / seat).read_bytes() == (c / seat).read_bytes()


def test_axis_override_routes_channel(tiny_config, tmp_path):
    out = tmp_path / "y_run"
    main(["pipeline", "--config", str(tiny_config), "--out", str(out),
          "--axis", "y"])
    report = json.loads((out / "report.json").read_text())
    assert report["manifest"]["input"] == ["seat_motion.csv"]
    head = report["summary"]["head_rms_m_s2"]
    assert head["y"] > head["z"]


def test_vision_override_reaches_perception(tiny_config, tmp_path):
    off_dir, on_dir = tmp_path / "off", tmp_path / "on"
    main(["pipeline", "--config", str(tiny_config), "--out", str(off_dir),
          "--axis", "y"])
    main(["pipeline", "--config", str(tiny_config), "--out", str(on_dir),
          "--axis", "y", "--vision", "on"])
    c_off = (off_dir / "conflict.csv").read_bytes()
    c_on = (on_dir / "conflict.csv").read_bytes()
    assert c_off != c_on


def test_batch_runs_every_config(tiny_config, write_scenario, tmp_path, capsys):
    other = write_scenario("second.json", seed=11)
    out = tmp_path / "batch"
    assert main(["pipeline", "--config", str(tiny_config),
                 "--config", str(other), "--out", str(out),
                 "--jobs", "2"]) == 0
    assert (out / "scenario" / "report.json").exists()
    assert (out / "second" / "report.json").exists()
    assert capsys.readouterr().out.count("->") == 2


def test_stht_subcommand_writes_frf_files(tiny_config, tmp_path):
    out = tmp_path / "stht"
    assert main(["stht", "--config", str(tiny_config), "--out", str(out),
                 "--axis", "z"]) == 0
    assert (out / "stht_z_resonances.json").exists()
    assert (out / "stht_z_head_acc_z.csv").exists()


def test_stht_rejects_csv_input(tmp_path):
    raw = make_scenario()
    csv_path = tmp_path / "seat.csv"
    csv_path.write_text(
        "time_s,seat_acc_x[m/s^2],seat_acc_y[m/s^2],seat_acc_z[m/s^2]\n"
        + "".join(f"{i * 0.002},0,0,0\n" for i in range(1000)))
    raw["input"] = {"kind": "csv", "path": str(csv_path)}
    path = _write(tmp_path, raw)
    assert main(["stht", "--config", str(path),
                 "--out", str(tmp_path / "o")]) == 1


def test_metrics_needs_some_artifact(tiny_config, tmp_path, capsys):
    assert main(["metrics", "--config", str(tiny_config),
                 "--out", str(tmp_path / "nothing")]) == 2
