import json
from pathlib import Path

import pandas as pd
import pytest

from core.commands import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION
from core.plotting import plot_variable
from main import main

from conftest import MODELS_DIR

OUTPUTS = ("result.csv", "metrics.json", "summary.txt", "summary.md", "truth.csv", "evidence.csv")


def test_validate_prints_parent_sets(capsys):
    assert main(["validate", str(MODELS_DIR / "lotka.ode")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "parents {X, Y, a, b}" in out
    assert "[OK] model is valid" in out


def test_validate_reports_syntax_errors(tmp_path, capsys):
    model = tmp_path / "bad.ode"
    model.write_text("var X = 1\neq dX/dt = a + * X\n")
    assert main(["validate", str(model)]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "line 2" in err


def test_validate_missing_file_is_an_io_error(tmp_path):
    assert main(["validate", str(tmp_path / "absent.ode")]) == EXIT_IO


def test_simulate_writes_the_truth(small_lv_config, tmp_path):
    out = tmp_path / "truth.csv"
    assert main(["simulate", "--config", str(small_lv_config), "--out", str(out)]) == EXIT_OK
    df = pd.read_csv(out)
    assert list(df.columns) == ["t", "X", "Y"]
    assert len(df) == 101
    assert df.loc[0, "X"] == 5.0


def test_simulate_defaults_to_the_output_dir(small_lv_config, tmp_path):
    assert main(["simulate", "--config", str(small_lv_config)]) == EXIT_OK
    assert (tmp_path / "out" / "truth.csv").exists()


def test_filter_writes_all_outputs(small_lv_config, tmp_path, capsys):
    assert main(["filter", "--config", str(small_lv_config)]) == EXIT_OK
    for name in OUTPUTS:
        assert (tmp_path / "out" / name).exists()
    assert "RMSE" in capsys.readouterr().out


def _filter_outputs(config, *extra):
    assert main(["filter", "--config", str(config), *extra]) == EXIT_OK
    out_dir = Path(json.loads(config.read_text())["output_dir"])
    return {name: (out_dir / name).read_bytes() for name in OUTPUTS}


def test_filter_reruns_are_byte_identical(small_lv_config):
    first = _filter_outputs(small_lv_config)
    assert _filter_outputs(small_lv_config) == first
    assert _filter_outputs(small_lv_config, "--threads", "4") == first


def test_seed_override_changes_the_result(small_lv_config):
    first = _filter_outputs(small_lv_config)
    other = _filter_outputs(small_lv_config, "--seed", "8")
    assert other["result.csv"] != first["result.csv"]
    assert other["truth.csv"] == first["truth.csv"]


def test_unknown_config_key_exits_with_validation_code(write_config):
    path = write_config({"model_path": "m.ode", "grid": {"t_start": 0, "t_end": 1, "dt": 0.1},
                         "colour": "red"})
    assert main(["filter", "--config", str(path)]) == EXIT_VALIDATION


def test_evidence_outside_the_grid_exits_with_validation_code(write_config, tmp_path):
    (tmp_path / "ev.csv").write_text("t,variable,value\n5.0,X,1.0\n")
    path = write_config({
        "model_path": str(MODELS_DIR / "lotka.ode"),
        "grid": {"t_start": 0.0, "t_end": 1.0, "dt": 0.01},
        "filter": {"n_particles": 20},
        "truth": {"source": "generate_rk4"},
        "evidence": {"source": "file", "path": "ev.csv"},
        "true_params": {"a": 2.0, "b": 1.0, "c": 4.0, "d": 1.0},
        "output_dir": "out",
    })
    assert main(["filter", "--config", str(path)]) == EXIT_VALIDATION


def test_blow_up_exits_with_numeric_code(write_config, tmp_path):
    model = tmp_path / "blowup.ode"
    model.write_text("var X = 1\nparam k ~ N(1, 0.1) in (0, inf)\neq dX/dt = k*X^2\n")
    path = write_config({
        "model_path": "blowup.ode",
        "grid": {"t_start": 0.0, "t_end": 20.0, "dt": 0.5},
        "true_params": {"k": 1.0},
        "output_dir": "out",
    })
    assert main(["simulate", "--config", str(path)]) == EXIT_NUMERIC


def test_missing_config_exits_with_io_code(tmp_path):
    assert main(["filter", "--config", str(tmp_path / "absent.json")]) == EXIT_IO


def test_plot_writes_a_deterministic_svg(small_lv_config, tmp_path):
    assert main(["filter", "--config", str(small_lv_config)]) == EXIT_OK
    out_dir = tmp_path / "out"
    args = ["plot", "--result", str(out_dir / "result.csv"), "--truth", str(out_dir / "truth.csv"),
            "--evidence", str(out_dir / "evidence.csv"), "--var", "X"]
    assert main(args + ["--out", str(tmp_path / "x1.svg")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "x2.svg")]) == EXIT_OK
    svg = (tmp_path / "x1.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    assert (tmp_path / "x1.svg").read_bytes() == (tmp_path / "x2.svg").read_bytes()


def test_plot_a_parameter_with_its_true_value(small_lv_config, tmp_path):
    assert main(["filter", "--config", str(small_lv_config)]) == EXIT_OK
    out_dir = tmp_path / "out"
    code = main(["plot", "--result", str(out_dir / "result.csv"), "--truth", str(out_dir / "truth.csv"),
                 "--var", "a", "--true-value", "2.0", "--out", str(tmp_path / "a.svg")])
    assert code == EXIT_OK
    assert (tmp_path / "a.svg").exists()


def test_plot_unknown_variable_exits_with_validation_code(small_lv_config, tmp_path):
    assert main(["filter", "--config", str(small_lv_config)]) == EXIT_OK
    out_dir = tmp_path / "out"
    code = main(["plot", "--result", str(out_dir / "result.csv"), "--truth", str(out_dir / "truth.csv"),
                 "--var", "Z", "--out", str(tmp_path / "z.svg")])
    assert code == EXIT_VALIDATION


def test_plot_variable_requires_mean_and_sd_columns(tmp_path):
    frame = pd.DataFrame({"t": [0.0, 1.0], "X_mean": [1.0, 2.0], "ess": [10.0, 10.0]})
    with pytest.raises(ValueError):
        plot_variable(frame, "X", tmp_path / "x.svg")


@pytest.mark.parametrize("source, fragment", [
    ("var X = 1\neq dX/dt = -q*X\n", "q"),
    ("var X = 1\nvar Y = 1\neq dX/dt = -X\n", "Y"),
])
def test_validate_names_the_problem(tmp_path, capsys, source, fragment):
    model = tmp_path / "m.ode"
    model.write_text(source)
    assert main(["validate", str(model)]) == EXIT_VALIDATION
    assert fragment in capsys.readouterr().err


def test_plot_with_empty_evidence(small_lv_config, tmp_path):
    assert main(["filter", "--config", str(small_lv_config)]) == EXIT_OK
    out_dir = tmp_path / "out"
    empty = tmp_path / "empty.csv"
    empty.write_text("t,variable,value\n")
    code = main(["plot", "--result", str(out_dir / "result.csv"), "--truth", str(out_dir / "truth.csv"),
                 "--evidence", str(empty), "--var", "Y", "--out", str(tmp_path / "y.svg")])
    assert code == EXIT_OK
