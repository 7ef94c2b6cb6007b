import json

import pytest

from qmeasure.cli import build_parser, main


def _write_config(tmp_path, mapping, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(mapping))
    return str(path)


def test_missing_subcommand():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([])
    assert info.value.code == 2


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_engine(capsys):
    assert main(["run", "--engines", "A,Q"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_step_filter_needs_engine_c(capsys):
    assert main(["run", "--engines", "B", "--filter", "step"]) == 2
    err = capsys.readouterr().err
    assert "step" in err


def test_run_writes_outputs(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "engines": ["A"],
        "plan": {"measurements": 3},
        "output": {"directory": str(tmp_path / "out")},
    })
    code = main(["run", "--config", cfg, "--formats", "csv,json,svg"])
    out = capsys.readouterr().out
    assert code == 0
    for suffix in ("csv", "json", "svg"):
        assert (tmp_path / "out" / f"run.{suffix}").exists()
    assert "engine A: 3 records" in out
    assert "wrote" in out


def test_validate_reports_agreement(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "engines": ["A", "C"],
        "plan": {"measurements": 8},
        "output": {"directory": str(tmp_path / "out"), "formats": ["json"]},
    })
    code = main(["validate", "--config", cfg])
    out = capsys.readouterr().out
    assert code == 0
    assert "A/C" in out and "[ok]" in out
    assert out.strip().endswith("PASS")
    doc = json.loads((tmp_path / "out" / "validate.json").read_text())
    assert doc["validation"]["passed"] is True


def test_distribution_prints_summary(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "engines": ["C"],
        "plan": {"measurements": 2},
        "output": {"directory": str(tmp_path / "out"), "formats": ["csv"]},
    })
    code = main(["distribution", "--config", cfg])
    out = capsys.readouterr().out
    assert code == 0
    assert "a_tilde" in out
    assert (tmp_path / "out" / "distribution.csv").exists()


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "engines": ["C"],
        "plan": {"measurements": 2},
        "numerics": {"levels": 20},
        "output": {"directory": str(tmp_path / "out")},
    })
    assert main(["run", "--config", cfg]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_out_override(tmp_path, capsys):
    cfg = _write_config(tmp_path, {
        "engines": ["A"],
        "plan": {"measurements": 2},
        "output": {"directory": str(tmp_path / "ignored"), "formats": ["csv"]},
    })
    target = tmp_path / "elsewhere"
    assert main(["run", "--config", cfg, "--out", str(target)]) == 0
    capsys.readouterr()
    assert (target / "run.csv").exists()
    assert not (tmp_path / "ignored").exists()
