import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dspe import cli
from dspe.cli import ScenarioConfig, UsageError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_no_args_lists_scenarios_and_usage(capsys):
    code, out, _ = run(capsys)
    assert code == 0
    for name in cli.SCENARIOS:
        assert name in out
    assert "usage:" in out


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0 and out.strip() == cli.list_scenarios()
    assert set(cli.SCENARIOS) == {"state", "fig2", "loss-sweep", "coupling-sweep", "sensitivity", "noon", "experiment", "measure"}


def test_unknown_scenario_suggests_nearest(capsys):
    code, _, err = run(capsys, "fgi2")
    assert code == cli.EXIT_USAGE
    assert "fig2" in err
    code, _, err = run(capsys, "experimnt")
    assert "did you mean 'experiment'" in err


@pytest.mark.parametrize("name", list(cli.SCENARIOS))
def test_help_lists_every_parameter_with_units(capsys, name):
    code, out, _ = run(capsys, name, "--help")
    assert code == 0
    for key in cli.DEFAULTS[name]:
        assert "--" + key.replace("_", "-") in out
    assert "[" in out  # units in brackets


def test_fig2_csv_header_and_values(capsys):
    code, out, _ = run(capsys, "fig2", "--alpha2", "1,10", "--variance-max", "0.02", "--steps", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha2,variance,negativity_numeric,bound_oracle,bound_gaussian"
    rows = list(csv.reader(lines[1:]))
    assert len(rows) == 6
    first = [float(x) for x in rows[0]]
    assert first[:3] == [1.0, 0.0, pytest.approx(0.5, abs=1e-12)]
    # 17 significant digits
    assert all(len(x.split("e")[0].replace("-", "").replace(".", "")) == 17 for x in rows[1])


def test_variance_unit_rad_squares_the_grid(capsys):
    _, out, _ = run(capsys, "fig2", "--alpha2", "1", "--variance-max", "0.2", "--steps", "2", "--variance-unit", "rad")
    variances = [float(r.split(",")[1]) for r in out.splitlines()[1:]]
    assert variances == pytest.approx([0.0, 0.01, 0.04])


def test_output_is_deterministic(capsys):
    args = ("fig2", "--alpha2", "2", "--variance-max", "0.05", "--steps", "2")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_experiment_json(capsys):
    code, out, _ = run(capsys, "experiment", "--eta-c", "0.5", "--eta-t", "0.6", "--visibility", "0.99996", "--alpha", "28")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["concurrence_bound"] == pytest.approx(0.013, abs=5e-4)
    assert doc["photons"] == 1569
    assert doc["max_alpha"] == pytest.approx(28.916, abs=1e-3)


def test_state_at_zero_amplitude(capsys):
    code, out, _ = run(capsys, "state", "--alpha", "0", "--dim", "8")
    assert code == 0
    doc = json.loads(out)
    assert doc["mode_dims"] == [8, 8]
    amps = np.array([complex(*c) for c in doc["amplitudes"]]).reshape(8, 8)
    expected = np.zeros((8, 8))
    expected[1, 0], expected[0, 1] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    np.testing.assert_allclose(amps, expected, atol=1e-15)


def test_state_truncation_failure_is_flagged(capsys):
    code, out, _ = run(capsys, "state", "--alpha", "3", "--dim", "5")
    assert code == cli.EXIT_FLAGGED
    assert json.loads(out)["leakage"] > 1e-8


def test_invalid_parameter_names_the_key(capsys):
    code, _, err = run(capsys, "experiment", "--eta-t", "1.5")
    assert code == cli.EXIT_USAGE and "--eta-t" in err
    code, _, err = run(capsys, "sensitivity", "--eta", "0.5,1.2")
    assert code == cli.EXIT_USAGE and "eta" in err
    code, _, err = run(capsys, "fig2", "--alpha2", "1,x")
    assert code == cli.EXIT_USAGE and "--alpha2" in err
    code, _, err = run(capsys, "measure", "--alpha", "9")
    assert code == cli.EXIT_USAGE


def test_scenario_config_rejects_unknown_keys():
    with pytest.raises(UsageError, match="colour"):
        ScenarioConfig("noon", {"colour": 1})
    with pytest.raises(UsageError, match="fig2"):
        ScenarioConfig("fig3")
    with pytest.raises(UsageError):
        ScenarioConfig("experiment", fmt="csv")
    assert ScenarioConfig("noon").params == cli.DEFAULTS["noon"]


def test_flagged_points_give_partial_output_and_nonzero_exit(capsys, tmp_path):
    path = tmp_path / "fig2.csv"
    code, _, err = run(capsys, "fig2", "--alpha2", "1,100", "--variance-max", "0.1", "--steps", "1",
                       "--max-cutoff", "30", "--output", str(path))
    assert code == cli.EXIT_FLAGGED
    assert "flagged" in err
    rows = path.read_text().splitlines()[1:]
    assert len(rows) == 4
    assert rows[3].split(",")[2] == "nan"
    assert float(rows[1].split(",")[2]) > 0  # unflagged row kept


def test_env_output_dir_and_schema_sidecar(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    code, out, _ = run(capsys, "noon")
    assert code == 0 and out == ""
    data = (tmp_path / "noon.csv").read_text()
    assert data.startswith("n_photons,eta_threshold,max_loss\n")
    schema = json.loads((tmp_path / "noon.csv.schema.json").read_text())
    assert schema["schema_version"] == cli.SCHEMA_VERSION
    assert [c["name"] for c in schema["columns"]] == ["n_photons", "eta_threshold", "max_loss"]


def test_json_format_for_sweeps(capsys):
    code, out, _ = run(capsys, "loss-sweep", "--eta-steps", "2", "--format", "json")
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    assert doc["columns"][0] == "eta_t"
    assert [r[1] for r in doc["rows"]] == pytest.approx([0.0, 0.25, 0.5], abs=1e-8)


@pytest.mark.parametrize(
    "argv",
    [
        ("loss-sweep", "--eta-steps", "2"),
        ("coupling-sweep", "--eta-steps", "2"),
        ("sensitivity", "--eta", "1.0"),
        ("noon",),
        ("fig2", "--alpha2", "1", "--steps", "1", "--variance-max", "0.01"),
    ],
)
def test_every_csv_column_is_documented(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    header = out.splitlines()[0].split(",")
    assert all(c in cli.COLUMNS for c in header)
    assert "-0.0" not in out


def test_sweeps_agree_with_closed_forms(capsys):
    _, out, _ = run(capsys, "coupling-sweep", "--eta-steps", "4")
    for row in csv.reader(io.StringIO(out).readlines()[1:]):
        assert float(row[1]) == pytest.approx(float(row[2]), abs=1e-8)


def test_measure_json(capsys):
    code, out, _ = run(capsys, "measure", "--alpha", "0.8", "--eta-t", "0.6")
    doc = json.loads(out)
    assert code == 0
    assert doc["chou_bound"] == pytest.approx(math.sqrt(0.6), abs=1e-6)
    assert doc["tomogram"]["V"] == pytest.approx(doc["visibility"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dspe", "noon", "--n", "100"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("100,")
