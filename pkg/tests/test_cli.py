import json
import subprocess
import sys
from pathlib import Path

FIXTURE = Path(__file__).resolve().parent.parent / "scenarios" / "basic.json"


def cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "trust_ladder.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


def test_run_writes_three_artifacts(tmp_path):
    result = cli("run", "--scenario", str(FIXTURE), "--seed", "7",
                 "--ticks", "20", "--out", str(tmp_path / "out"))
    assert result.returncode == 0, result.stderr
    for name in ("events.jsonl", "trajectory.json", "metrics.csv"):
        assert (tmp_path / "out" / name).exists()
    assert "system_trust=" in result.stdout
    assert "gate=" in result.stdout


def test_identical_invocations_byte_identical(tmp_path):
    cli("run", "--scenario", str(FIXTURE), "--seed", "3", "--ticks", "15",
        "--out", str(tmp_path / "a"))
    cli("run", "--scenario", str(FIXTURE), "--seed", "3", "--ticks", "15",
        "--out", str(tmp_path / "b"))
    for name in ("events.jsonl", "trajectory.json", "metrics.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replay_verifies_and_detects_tampering(tmp_path):
    out = tmp_path / "out"
    assert cli("run", "--scenario", str(FIXTURE), "--seed", "7", "--ticks", "12",
               "--out", str(out)).returncode == 0

    ok = cli("replay", "--scenario", str(FIXTURE), "--seed", "7",
             "--log", str(out / "events.jsonl"),
             "--trajectory", str(out / "trajectory.json"))
    assert ok.returncode == 0, ok.stderr

    lines = (out / "events.jsonl").read_text().strip().split("\n")
    doc = json.loads(lines[10])
    doc["outcome"] = "failure" if doc["outcome"] == "success" else "success"
    lines[10] = json.dumps(doc)
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join(lines) + "\n")

    bad = cli("replay", "--scenario", str(FIXTURE), "--seed", "7",
              "--log", str(tampered),
              "--trajectory", str(out / "trajectory.json"))
    assert bad.returncode == 1
    assert "mismatch" in bad.stderr


def test_export_converts_trajectory(tmp_path):
    out = tmp_path / "out"
    cli("run", "--scenario", str(FIXTURE), "--seed", "7", "--ticks", "8", "--out", str(out))
    result = cli("export", "--trajectory", str(out / "trajectory.json"),
                 "--format", "csv", "--out", str(tmp_path / "exported"))
    assert result.returncode == 0
    assert (tmp_path / "exported" / "metrics.csv").read_bytes() == (out / "metrics.csv").read_bytes()


def test_missing_scenario_flag_is_usage_error():
    result = cli("run", "--ticks", "5")
    assert result.returncode == 2
    assert "scenario" in result.stderr


def test_bad_scenario_file_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"width": 2, "height": 2}, "agents": [],
                               "goals": [], "tasks": [], "seed": 1, "oops": True}))
    result = cli("run", "--scenario", str(bad), "--out", str(tmp_path / "out"))
    assert result.returncode == 2
    assert "oops" in result.stderr


def test_out_dir_env_default(tmp_path):
    import os

    env = dict(os.environ, TRUST_LADDER_OUT=str(tmp_path / "envout"))
    result = subprocess.run(
        [sys.executable, "-m", "trust_ladder.cli", "run", "--scenario", str(FIXTURE),
         "--seed", "7", "--ticks", "3"],
        capture_output=True, text=True, env=env,
    )
    assert result.returncode == 0
    assert (tmp_path / "envout" / "trajectory.json").exists()
