import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trgc import io
from trgc.cli import main
from trgc.errors import ConfigError, SchemaError
from trgc.granger import REPORT_KEYS
from trgc.var_core import TimeSeries, VarModel

MODEL = {"p": 1, "d": 2, "A": [[[0.7, 0.0], [-0.12, 0.9]]], "Sigma": [[1.0, 0.6], [0.6, 1.0]]}
SVAR = {"Gamma0": [[0, 0], [0.6, 0]], "A": [[[0.7, 0], [-0.54, 0.9]]], "Sigma": [[1, 0], [0, 0.64]]}
CONFIG = """\
scenario: additive-noise
seed: 4
n_reps: 3
T: 400
methods: [standard-gc, net-gc, diff-trgc]
inference:
  order: 2
  n_boot: 100
grid:
  gamma: [0.0, 0.5]
"""


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, obj in (("model", MODEL), ("svar", SVAR)):
        paths[name] = tmp_path / f"{name}.json"
        paths[name].write_text(json.dumps(obj))
    paths["config"] = tmp_path / "exp.yaml"
    paths["config"].write_text(CONFIG)
    return paths


class TestSeriesCsv:
    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False, width=64),
                              st.floats(allow_nan=False, allow_infinity=False, width=64)),
                    min_size=1, max_size=30))
    def test_round_trip_lossless(self, rows):
        ts = TimeSeries(np.array(rows, dtype=float))
        back = io.parse_series_csv(io.format_series_csv(ts, "seed=1"))
        np.testing.assert_array_equal(back.data, ts.data)

    def test_header_and_comment(self):
        text = io.format_series_csv(TimeSeries(np.zeros((2, 2))), "seed=7")
        assert text.splitlines()[:2] == ["# seed=7", "t,x,y"]
        assert "\r" not in text

    def test_missing_column_named(self):
        with pytest.raises(SchemaError, match="'y'"):
            io.parse_series_csv("t,x,z\n0,1.0,2.0\n")

    def test_column_selection(self):
        ts = io.parse_series_csv("t,a,b,c\n0,1,2,3\n1,4,5,6\n", ["c", "a"])
        assert ts.names == ("c", "a")
        np.testing.assert_array_equal(ts.data, [[3, 1], [6, 4]])

    def test_malformed_value(self):
        with pytest.raises(SchemaError):
            io.parse_series_csv("t,x,y\n0,1.0,abc\n")


class TestJson:
    def test_shortest_round_trip_floats(self):
        text = io.dumps({"v": 0.1 + 0.2})
        assert json.loads(text)["v"] == 0.1 + 0.2
        assert "0.30000000000000004" in text

    def test_non_finite_becomes_null(self):
        assert json.loads(io.dumps({"v": float("nan")}))["v"] is None


class TestConfig:
    def test_parses_example(self, files):
        plan = io.read_experiment_config(files["config"])
        assert plan.scenario.scenario == "additive-noise"
        assert plan.inference.order == 2 and plan.grid == {"gamma": [0.0, 0.5]}
        assert plan.text == CONFIG

    def test_overrides(self, files):
        plan = io.read_experiment_config(files["config"], {"seed": 9, "inference": {"alpha": 0.1}})
        assert plan.scenario.seed == 9
        assert plan.inference.alpha == 0.1 and plan.inference.n_boot == 100

    @pytest.mark.parametrize("raw", [
        {"scenario": "linear-mixing", "colour": "red"},
        {"seed": 1},
        {"scenario": "linear-mixing", "methods": ["oracle"]},
        {"scenario": "linear-mixing", "grid": {"methods": [1]}},
        {"scenario": "linear-mixing", "inference": {"order": "aic"}},
    ])
    def test_rejects_bad_configs(self, raw):
        with pytest.raises(ConfigError):
            io.plan_from_dict(raw)


def run_cli(*args):
    return main([str(a) for a in args])


class TestCli:
    def test_simulate_writes_seeded_csv(self, files, tmp_path):
        out = tmp_path / "x.csv"
        assert run_cli("simulate", files["model"], "-T", 50, "--seed", 3, "--out", out) == 0
        text = out.read_text()
        assert text.startswith("# seed=3")
        assert io.read_series_csv(out).length == 50

    def test_simulate_unstable(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"A": [[[1.2, 0], [0, 0.1]]], "Sigma": [[1, 0], [0, 1]]}))
        assert run_cli("simulate", bad) != 0
        assert "error[unstable-model]" in capsys.readouterr().err

    def test_unreadable_model(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("simulate", bad) != 0
        assert "error[schema]" in capsys.readouterr().err

    def test_reverse_twice_is_identity(self, files, tmp_path):
        once, twice = tmp_path / "r1.json", tmp_path / "r2.json"
        assert run_cli("reverse", files["model"], "--out", once) == 0
        assert run_cli("reverse", once, "--out", twice) == 0
        back = io.read_model(twice)
        np.testing.assert_allclose(back.coeffs, np.array(MODEL["A"]), atol=1e-12)
        np.testing.assert_allclose(back.resid_cov, np.array(MODEL["Sigma"]), atol=1e-12)

    def test_reverse_diagonal_fixed_point(self, tmp_path):
        src, out = tmp_path / "d.json", tmp_path / "o.json"
        src.write_text(json.dumps(VarModel(np.diag([0.5, 0.2]), np.diag([1.0, 2.0])).to_dict()))
        assert run_cli("reverse", src, "--out", out) == 0
        np.testing.assert_allclose(io.read_model(out).coeffs[0], np.diag([0.5, 0.2]), atol=1e-14)

    def test_analyze_report(self, files, tmp_path):
        series = tmp_path / "x.csv"
        run_cli("simulate", files["model"], "-T", 600, "--seed", 1, "--out", series)
        out1, out2 = tmp_path / "a1.json", tmp_path / "a2.json"
        for out in (out1, out2):
            assert run_cli("analyze", series, "--order", "bic", "--boot", 100, "--seed", 5, "--out", out) == 0
        assert out1.read_bytes() == out2.read_bytes()
        report = json.loads(out1.read_text())
        assert set(REPORT_KEYS) <= set(report["scores"])
        assert set(report["decisions"]) == {"standard-gc", "net-gc", "diff-trgc"}

    def test_analyze_missing_column(self, files, tmp_path, capsys):
        series = tmp_path / "x.csv"
        series.write_text("t,x,q\n" + "".join(f"{i},{i % 3},{i % 5}\n" for i in range(50)))
        assert run_cli("analyze", series) != 0
        assert "error[schema]" in capsys.readouterr().err

    def test_convert_svar(self, files, tmp_path):
        out = tmp_path / "v.json"
        assert run_cli("convert", files["svar"], "--out", out) == 0
        var = io.read_model(out)
        np.testing.assert_allclose(var.coeffs[0], [[0.7, 0.0], [-0.12, 0.9]], atol=1e-12)
        np.testing.assert_allclose(var.resid_cov, [[1.0, 0.6], [0.6, 1.0]], atol=1e-12)

    def test_convert_rejects_nonzero_diagonal(self, tmp_path, capsys):
        src = tmp_path / "s.json"
        src.write_text(json.dumps(dict(SVAR, Gamma0=[[0.2, 0], [0.6, 0]])))
        assert run_cli("convert", src) != 0
        assert "error[invalid-model]" in capsys.readouterr().err

    def test_convert_rejects_singular_mixing(self, tmp_path, capsys):
        src = tmp_path / "m.json"
        src.write_text(json.dumps({"M": [[1, 2], [2, 4]], "A": [[[0.5, 0], [0, 0.5]]], "Sigma": [[1, 0], [0, 1]]}))
        assert run_cli("convert", src) != 0
        assert "error[singular-matrix]" in capsys.readouterr().err

    def test_experiment_outputs(self, files, tmp_path):
        prefix = tmp_path / "res"
        assert run_cli("experiment", files["config"], "--out", prefix) == 0
        rows = (tmp_path / "res.csv").read_text().splitlines()
        assert rows[0] == "scenario,method,condition,tpr,fpr,n"
        assert len(rows) == 1 + 3 * 2
        doc = json.loads((tmp_path / "res.json").read_text())
        assert doc["config_text"] == CONFIG
        assert doc["n_failed"] == 0 and len(doc["conditions"]) == 2

    def test_missing_input_fails_before_work(self, tmp_path, capsys):
        assert run_cli("experiment", tmp_path / "nope.yaml", "--out", tmp_path / "r") != 0
        assert "error[missing-input]" in capsys.readouterr().err

    def test_module_entry_point(self, files):
        proc = subprocess.run([sys.executable, "-m", "trgc", "convert", str(files["svar"])],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["p"] == 1
