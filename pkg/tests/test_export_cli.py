import json
import re

import pytest

from uavbeam.cli import cli_main
from uavbeam.experiment import episode_seed, run_episode
from uavbeam.export import (
    RATE_COLUMNS,
    TRAJECTORY_COLUMNS,
    CsvParseError,
    emit_rate_csv,
    emit_trajectory_csv,
    read_csv,
    render_plot,
)
from uavbeam.lrnet.io import save_model
from uavbeam.lrnet.model import init_model, zero_model
from uavbeam.scenario import ScenarioConfig


@pytest.fixture(scope="module")
def records():
    return run_episode(zero_model(), ScenarioConfig(), episode_seed(0, 0))


def test_csv_shape_and_header(tmp_path, records):
    p = tmp_path / "rate.csv"
    emit_rate_csv(records, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 201
    assert lines[0] == ",".join(RATE_COLUMNS)
    t = tmp_path / "traj.csv"
    emit_trajectory_csv(records, t)
    assert t.read_text().splitlines()[0] == ",".join(TRAJECTORY_COLUMNS)
    header, rows = read_csv(t)
    assert len(rows) == 200


def test_csv_rerun_identical(tmp_path, records):
    emit_rate_csv(records, tmp_path / "a.csv")
    emit_rate_csv(run_episode(zero_model(), ScenarioConfig(), episode_seed(0, 0)), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_plot_rate_and_trajectory(tmp_path, records):
    emit_rate_csv(records, tmp_path / "rate.csv")
    render_plot(tmp_path / "rate.csv", tmp_path / "rate.svg")
    svg = (tmp_path / "rate.svg").read_text()
    assert svg.count("<polyline") == 3
    emit_trajectory_csv(records, tmp_path / "traj.csv")
    render_plot(tmp_path / "traj.csv", tmp_path / "traj.svg")
    assert 'data-equal-aspect="true"' in (tmp_path / "traj.svg").read_text()


def test_plot_errors(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text(",".join(RATE_COLUMNS) + "\n")
    with pytest.raises(CsvParseError):
        render_plot(p, tmp_path / "x.svg")
    p.write_text(",".join(RATE_COLUMNS) + "\n0,1,2,3,4\n1,1,2,oops,4\n")
    with pytest.raises(CsvParseError, match=":3:"):
        read_csv(p)


@pytest.fixture(scope="module")
def model_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("m") / "model.json"
    save_model(init_model(0), p)
    return p


def test_cli_gradcheck(capsys):
    assert cli_main(["gradcheck", "--seed", "7", "--full", "0"]) == 0
    out = capsys.readouterr().out
    err = float(re.search(r"^max relative error (\S+)$", out, re.M).group(1))
    assert err < 1e-6


def test_cli_simulate_needs_model(tmp_path):
    assert cli_main(["simulate", "--out-dir", str(tmp_path)]) == 1
    assert cli_main(["simulate", "--model", str(tmp_path / "missing.json")]) == 1


def test_cli_usage_errors():
    assert cli_main(["frobnicate"]) == 1
    assert cli_main(["compare", "--no-such-flag"]) == 1


def test_cli_bad_config(tmp_path, model_file, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k_slots": 100, "warp": 9, "train": {"epochz": 1}}))
    assert cli_main(["simulate", "--model", str(model_file), "--config", str(cfg)]) == 2
    assert "warp" in capsys.readouterr().err
    cfg.write_text("{not json")
    assert cli_main(["simulate", "--model", str(model_file), "--config", str(cfg)]) == 2


def test_cli_degenerate_geometry(tmp_path, model_file):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"uav_start": [0.1, 0.0]}))
    assert cli_main(["simulate", "--model", str(model_file), "--config", str(cfg),
                     "--out-dir", str(tmp_path)]) == 3


def test_cli_simulate_failover_plot(tmp_path, model_file):
    out = tmp_path / "out"
    assert cli_main(["simulate", "--model", str(model_file), "--out-dir", str(out), "--seed", "2"]) == 0
    assert (out / "episode_000_rate.csv").exists()
    assert cli_main(["failover", "--model", str(model_file), "--blackout", "100-104",
                     "--out-dir", str(out)]) == 0
    assert cli_main(["failover", "--model", str(model_file), "--blackout", "3-4", "--out-dir", str(out)]) == 2
    assert cli_main(["plot", str(out / "episode_000_rate.csv")]) == 0
    assert (out / "episode_000_rate.svg").exists()


def test_cli_generate_and_train(tmp_path):
    data = tmp_path / "t.json"
    assert cli_main(["generate", "--trajectories", "2", "--out", str(data), "--seed", "4"]) == 0
    assert len(json.loads(data.read_text())["trajectories"]) == 2
    model = tmp_path / "m.json"
    loss = tmp_path / "loss.csv"
    assert cli_main(["train", "--data", str(data), "--epochs", "1", "--out", str(model),
                     "--loss-csv", str(loss)]) == 0
    assert len(loss.read_text().splitlines()) == 3
    assert cli_main(["plot", str(loss)]) == 0


def test_cli_compare_with_model(tmp_path, model_file, capsys):
    args = ["compare", "--episodes", "2", "--seed", "1", "--model", str(model_file)]
    assert cli_main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    first = capsys.readouterr().out
    assert cli_main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    assert capsys.readouterr().out == first
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_help_documents_flags(capsys):
    assert cli_main(["compare", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--episodes", "--seed", "--config", "--far", "--model", "--kalman-mode"):
        assert flag in out
