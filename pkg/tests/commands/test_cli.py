import json
import math
import socket
from pathlib import Path

import pytest
from click.testing import CliRunner
from typer.testing import CliRunner as TyperRunner

from commands.channel import ber, corrupt_cmd, payload
from commands.report import report
from commands.score import metrics, trial
from commands.sweep import fixtures, sweep

FIXTURES = Path(__file__).resolve().parents[2] / "fixtures" / "dataset"


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    for name in ("AQUASEM_CONFIG", "AQUASEM_BACKEND_URL", "AQUASEM_TOKEN", "AQUASEM_VERBOSE",
                 "AQUASEM_JOBS", "AQUASEM_DEBUG_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _error(result) -> dict:
    return json.loads(result.output.strip().splitlines()[-1])


def _free_port() -> int:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_corrupt_zero_ratio_is_identity(runner):
    result = runner.invoke(corrupt_cmd, ["--type", "1", "--ratio", "0", "--seed", "1", "--text", "abc"])
    assert result.exit_code == 0
    assert json.loads(result.output) == {
        "corrupted": "abc", "realized_ratio": 0.0, "affected_units": 0, "total_units": 3,
    }


def test_corrupt_reads_stdin_and_is_deterministic(runner):
    args = ["--type", "3", "--ratio", "0.5", "--seed", "9", "--stdin"]
    first = runner.invoke(corrupt_cmd, args, input="a dim scene with blue upper left\n")
    second = runner.invoke(corrupt_cmd, args, input="a dim scene with blue upper left\n")
    assert first.exit_code == 0
    assert first.output == second.output
    data = json.loads(first.output)
    assert data["total_units"] == 7
    assert data["affected_units"] == 4
    assert len(data["corrupted"].split()) == 3


def test_corrupt_usage_errors(runner):
    result = runner.invoke(corrupt_cmd, ["--type", "1", "--ratio", "0.1"])
    assert result.exit_code == 2
    assert _error(result)["error"] == "usage"

    result = runner.invoke(corrupt_cmd, ["--type", "1", "--ratio", "1.5", "--text", "abc"])
    assert result.exit_code == 2
    assert _error(result) == {"error": "domain", "message": _error(result)["message"], "exit_code": 2}


def test_ber(runner):
    result = runner.invoke(ber, ["--cer", "0.5"])
    assert result.exit_code == 0
    assert json.loads(result.output) == {"lower": 0.0625, "upper": 0.5}

    result = runner.invoke(ber, ["--cer", "2"])
    assert result.exit_code == 2
    assert _error(result)["error"] == "domain"


def test_payload_with_text(runner):
    image = FIXTURES / "harbor.ppm"
    result = runner.invoke(payload, ["--image", str(image), "--text", "a red boat"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    size = image.stat().st_size
    assert data["image_bytes"] == size
    assert data["text_bytes"] == 10
    assert data["ratio_defined"] is True
    assert data["compression_ratio"] == pytest.approx(size / 10)
    assert data["airtime_text_s"] == pytest.approx(0.08)
    assert data["airtime_image_s"] == pytest.approx(size * 8 / 1000)


def test_payload_with_mock_caption(runner):
    result = runner.invoke(payload, ["--image", str(FIXTURES / "harbor.ppm"), "--mock-caption"])
    assert result.exit_code == 0
    assert json.loads(result.output)["caption"] == (
        "a dim scene with blue upper left green upper right red lower left and yellow lower right"
    )


def test_metrics_identical_images(runner):
    image = str(FIXTURES / "reef.ppm")
    result = runner.invoke(metrics, ["--a", image, "--b", image, "--embedder", "mock"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data["psnr_db"] == "inf"
    assert data["ssim"] == pytest.approx(1.0)
    assert data["clip_score_pct"] == pytest.approx(100.0)


def test_metrics_shape_mismatch_needs_resize(runner, tmp_path):
    runner.invoke(fixtures, ["--out", str(tmp_path / "fx"), "--count", "1", "--size", "32"])
    small = str(tmp_path / "fx" / "dataset" / "scene_000.ppm")
    big = str(FIXTURES / "reef.ppm")

    result = runner.invoke(metrics, ["--a", big, "--b", small])
    assert result.exit_code == 2
    assert _error(result)["error"] == "domain"

    result = runner.invoke(metrics, ["--a", big, "--b", small, "--resize"])
    assert result.exit_code == 0
    assert math.isfinite(json.loads(result.output)["psnr_db"])


def test_missing_image_is_io_error(runner, tmp_path):
    result = runner.invoke(metrics, ["--a", str(tmp_path / "nope.ppm"), "--b", str(tmp_path / "nope.ppm")])
    assert result.exit_code == 2
    assert _error(result)["error"] == "io"


def test_trial_with_mock_backends(runner, tmp_path):
    runner.invoke(fixtures, ["--out", str(tmp_path / "fx"), "--count", "1"])
    args = ["--image", str(FIXTURES / "harbor.ppm"), "--control", str(tmp_path / "fx" / "control.ppm"),
            "--type", "2", "--ratio", "0.1", "--seed", "4", "--gen-seed", "1",
            "--backends", "mock", "--width", "64", "--height", "64"]
    result = runner.invoke(trial, args)
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert data["image_id"] == "harbor"
    assert data["status"] == "ok"
    assert data["caption_clean"].startswith("a dim scene")
    assert data["generation_size"] == [64, 64]

    again = json.loads(runner.invoke(trial, args).output)
    data.pop("timings")
    again.pop("timings")
    assert again == data


def test_trial_unreachable_backend_exits_3(runner):
    image = str(FIXTURES / "harbor.ppm")
    result = runner.invoke(trial, ["--image", image, "--control", image, "--type", "1", "--ratio", "0.1",
                                   "--backends", f"http://127.0.0.1:{_free_port()}", "--width", "64",
                                   "--height", "64"])
    assert result.exit_code == 3
    data = json.loads(result.output.strip().splitlines()[0])
    assert data["status"] == "failed:caption"
    assert data["error_kind"] == "unreachable"


def _sweep_args(out: Path) -> list[str]:
    return ["--mock", "--dataset", str(FIXTURES), "--out", str(out), "--types", "1,3",
            "--ratios", "0,0.2", "--generations", "2", "--width", "64", "--height", "64",
            "--jobs", "2", "--quiet"]


def test_sweep_is_reproducible(runner, tmp_path):
    first = runner.invoke(sweep, _sweep_args(tmp_path / "a"))
    assert first.exit_code == 0, first.output
    summary = json.loads(first.output)
    assert summary["counts"] == {"records": 16, "ok": 16, "failed": 0, "cells_resumed": 0}
    assert set(summary["providers"].values()) == {"mock"}

    second = runner.invoke(sweep, _sweep_args(tmp_path / "b") + ["--jobs", "1"])
    assert second.exit_code == 0
    for name in ("records.csv", "aggregates.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "manifest.json").exists()


def test_sweep_resumes_finished_cells(runner, tmp_path):
    out = tmp_path / "run"
    runner.invoke(sweep, _sweep_args(out))
    before = (out / "records.csv").read_bytes()
    result = runner.invoke(sweep, _sweep_args(out))
    assert result.exit_code == 0
    assert json.loads(result.output)["counts"]["cells_resumed"] == 4
    assert (out / "records.csv").read_bytes() == before


def test_sweep_config_file_and_flag_precedence(runner, tmp_path):
    config = tmp_path / "grid.yaml"
    config.write_text(f"dataset_dir: {FIXTURES}\nratios: [0.0, 0.5]\nerror_types: [2]\ngenerations_per_caption: 3\n"
                      "generation_width: 32\ngeneration_height: 32\n")
    result = runner.invoke(sweep, ["--config", str(config), "--mock", "--generations", "1",
                                   "--out", str(tmp_path / "out"), "--quiet"])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["counts"]["records"] == 2 * 2 * 1


def test_sweep_invalid_grid_is_usage_error(runner, tmp_path):
    result = runner.invoke(sweep, ["--mock", "--dataset", str(FIXTURES), "--out", str(tmp_path / "o"),
                                   "--ratios", "0.3,0.1", "--quiet"])
    assert result.exit_code == 2
    assert _error(result)["error"] == "usage"

    result = runner.invoke(sweep, ["--mock", "--dataset", str(FIXTURES), "--ratios", "a,b", "--quiet"])
    assert result.exit_code == 2


def test_report_from_sweep(runner, tmp_path):
    out = tmp_path / "run"
    runner.invoke(sweep, _sweep_args(out))
    result = runner.invoke(report, ["--aggregates", str(out / "aggregates.csv"), "--out", str(out / "charts"),
                                    "--quiet"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert sorted(Path(p).name for p in data["charts"]) == sorted(
        f"{m}_type{t}.svg" for m in ("psnr_db", "ssim", "clip_score_pct") for t in (1, 3)
    )
    assert data["warnings"] == []

    only = runner.invoke(report, ["--aggregates", str(out / "aggregates.csv"), "--out", str(out / "c2"),
                                  "--metric", "ssim", "--quiet"])
    assert len(json.loads(only.output)["charts"]) == 2


def test_report_missing_file(runner, tmp_path):
    result = runner.invoke(report, ["--aggregates", str(tmp_path / "none.csv"), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert _error(result)["error"] == "io"


def test_fixtures_command(runner, tmp_path):
    result = runner.invoke(fixtures, ["--out", str(tmp_path / "fx"), "--count", "3", "--size", "16"])
    assert result.exit_code == 0
    data = json.loads(result.output)
    assert [Path(p).name for p in data["dataset"]] == ["scene_000.ppm", "scene_001.ppm", "scene_002.ppm"]
    assert Path(data["control"]).exists()


def test_typer_app_forwards_to_commands():
    import aquasem

    typer_runner = TyperRunner()
    result = typer_runner.invoke(aquasem.app, ["ber", "--cer", "0.25", "--bits", "5"])
    assert result.exit_code == 0
    assert json.loads(result.output) == {"lower": 0.05, "upper": 0.25}

    result = typer_runner.invoke(aquasem.app, ["corrupt", "--type", "7", "--ratio", "0.1", "--text", "abc"])
    assert result.exit_code == 2

    result = typer_runner.invoke(aquasem.app, ["version"])
    assert result.exit_code == 0
