"""Command-line interface: argument handling, output, exit codes."""

import dataclasses
import json

import pytest

from pinnrt import default_config, render_config
from pinnrt.cli import main


def write_custom_config(tmp_path, **over):
    cfg = dataclasses.replace(default_config("custom"), out_dir=str(tmp_path / "out"), **over)
    path = tmp_path / "config.json"
    path.write_text(render_config(cfg))
    return path, cfg


def test_run_prints_metrics_and_artifacts(tmp_path, capsys):
    cfg_path, cfg = write_custom_config(tmp_path)
    rc = main(["run", "custom", "--config", str(cfg_path)])
    out, err = capsys.readouterr()
    assert rc == 0
    lines = out.splitlines()
    metric_lines = [l for l in lines if " = " in l]
    artifact_lines = [l for l in lines if l.startswith("artifact ")]
    assert metric_lines and artifact_lines
    assert metric_lines == sorted(metric_lines)
    assert any(l.startswith("loss_best = ") for l in metric_lines)
    # timing goes to stderr only, keeping stdout deterministic
    assert "elapsed" not in out
    assert "elapsed:" in err


def test_run_out_and_seed_overrides(tmp_path, capsys):
    cfg_path, _ = write_custom_config(tmp_path)
    out_dir = tmp_path / "elsewhere"
    rc = main(["run", "custom", "--config", str(cfg_path), "--out", str(out_dir), "--seed", "3"])
    assert rc == 0
    capsys.readouterr()
    echoed = json.loads((out_dir / "config.json").read_text())
    assert echoed["out_dir"] == str(out_dir)
    assert echoed["seed"] == 3


def test_run_without_config_uses_defaults(tmp_path, capsys):
    rc = main(["run", "custom", "--out", str(tmp_path / "d")])
    assert rc == 0
    capsys.readouterr()
    assert (tmp_path / "d" / "metrics.txt").is_file()


def test_config_case_mismatch_is_an_error(tmp_path, capsys):
    cfg_path, _ = write_custom_config(tmp_path)
    rc = main(["run", "patch_vertical", "--config", str(cfg_path)])
    out, err = capsys.readouterr()
    assert rc == 2
    assert "error:" in err and "custom" in err


def test_unknown_case_rejected_by_argparse(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", "nonsense"])
    assert exc.value.code == 2


def test_missing_config_file(tmp_path, capsys):
    rc = main(["run", "custom", "--config", str(tmp_path / "nope.json")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "error:" in err


def test_invalid_config_value(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"case": "custom", "alpha_t": -1}')
    rc = main(["run", "custom", "--config", str(path)])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "alpha_l" in err


def test_oracle_requires_out(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["oracle", "patch_vertical"])


def test_oracle_writes_reference(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    cfg = dataclasses.replace(default_config("patch_vertical"), oracle_n=17, grid_n=5)
    path.write_text(render_config(cfg))
    rc = main(["oracle", "patch_vertical", "--config", str(path), "--out", str(tmp_path / "o")])
    out, _ = capsys.readouterr()
    assert rc == 0
    names = sorted(l.split()[1].rstrip(":") for l in out.splitlines())
    assert names == ["analytic_p", "analytic_vx", "analytic_vy", "fd_p", "fd_vx", "fd_vy"]
    assert (tmp_path / "o" / "fd_p.csv").is_file()


def test_oracle_for_case_without_reference(tmp_path, capsys):
    rc = main(["oracle", "reaction_uniform", "--out", str(tmp_path / "o")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "no reference solution" in err


def test_check_reports_threshold_lines(tmp_path, capsys):
    # the tiny custom case has no thresholds; check must refuse it cleanly
    rc = main(["check", "custom", "--out", str(tmp_path / "c")])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "no acceptance thresholds" in err


def test_divergent_run_exits_with_stage_error(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    cfg = dataclasses.replace(
        default_config("custom"), learning_rate=1e4, epochs=300, out_dir=str(tmp_path / "x")
    )
    path.write_text(render_config(cfg))
    rc = main(["run", "custom", "--config", str(path)])
    _, err = capsys.readouterr()
    assert rc == 2
    assert "error: [flow]" in err
