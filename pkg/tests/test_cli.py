import json
import os

import numpy as np
import pytest

from qsysid.cli import main
from qsysid.simulate import load_dataset_csv


def run_cli(argv):
    return main(argv)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def simulate_tiny(out="data.csv", quantizer="binary:1", extra=()):
    argv = ["simulate", "--samples", "60", "--order", "5", "--seed", "3",
            "--zero-pairs", "2", "--pole-pairs", "2",
            "--quantizer", quantizer, "--out", out, *extra]
    assert run_cli(argv) == 0


class TestSimulate:
    def test_writes_dataset_and_manifest(self, workdir):
        simulate_tiny()
        dataset = load_dataset_csv("data.csv")
        assert len(dataset.u) == 60
        assert set(np.unique(dataset.y)) <= {-1.0, 1.0}
        assert dataset.z_true is None  # latent column off by default
        manifest = json.loads((workdir / "data.csv.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["config"]["samples"] == 60
        assert manifest["config"]["seed"] == 3
        assert manifest["artifacts"] == ["data.csv"]

    def test_include_z_column(self, workdir):
        simulate_tiny(extra=["--include-z"])
        dataset = load_dataset_csv("data.csv")
        assert dataset.z_true is not None
        assert len(dataset.z_true) == 60

    def test_rerun_is_byte_identical(self, workdir):
        simulate_tiny(out="a.csv")
        simulate_tiny(out="a.csv")  # overwrite with same settings
        first = (workdir / "a.csv").read_bytes()
        simulate_tiny(out="b.csv")
        assert (workdir / "b.csv").read_bytes() == first

    def test_config_file_with_flag_override(self, workdir):
        (workdir / "cfg.json").write_text(json.dumps({"seed": 1, "samples": 70}))
        assert run_cli(["simulate", "--config", "cfg.json", "--seed", "2",
                        "--order", "5", "--out", "d.csv"]) == 0
        manifest = json.loads((workdir / "d.csv.manifest.json").read_text())
        assert manifest["config"]["seed"] == 2  # flag beats config file
        assert manifest["config"]["samples"] == 70

    def test_unknown_config_key(self, workdir, capsys):
        (workdir / "cfg.json").write_text(json.dumps({"smaples": 70}))
        assert run_cli(["simulate", "--config", "cfg.json"]) == 2
        assert "smaples" in capsys.readouterr().err

    def test_malformed_config_json(self, workdir):
        (workdir / "cfg.json").write_text("{not json")
        assert run_cli(["simulate", "--config", "cfg.json"]) == 2

    def test_missing_config_file(self, workdir):
        assert run_cli(["simulate", "--config", "nope.json"]) == 3

    def test_bad_quantizer_text(self, workdir):
        assert run_cli(["simulate", "--quantizer", "binary:abc"]) == 2

    def test_bad_snr(self, workdir):
        assert run_cli(["simulate", "--snr", "-2", "--out", "d.csv"]) == 2


class TestIdentify:
    def identify_args(self, data="data.csv", out="est.csv", order="5",
                      iterations="150", burn_in="50"):
        return ["identify", data, "--quantizer", "binary:1", "--order", order,
                "--iterations", iterations, "--burn-in", burn_in,
                "--beta", "0.7", "--seed", "1", "--out", out]

    def test_pipeline(self, workdir):
        simulate_tiny()
        assert run_cli(self.identify_args()) == 0
        lines = (workdir / "est.csv").read_text().splitlines()
        assert lines[0] == "k,g_hat"
        assert len(lines) == 6
        ks = [int(line.split(",")[0]) for line in lines[1:]]
        assert ks == [1, 2, 3, 4, 5]
        for line in lines[1:]:
            float(line.split(",")[1])  # parses
        manifest = json.loads((workdir / "est.csv.manifest.json").read_text())
        diag = manifest["diagnostics"]
        assert diag["beta_used"] == 0.7
        assert {"mean", "q25", "median", "q75"} <= set(diag["lambda"])
        assert {"mean", "q25", "median", "q75"} <= set(diag["sigma2"])
        assert "max_normalized_gap" in diag and "converged" in diag
        assert manifest["config"]["data"] == "data.csv"

    def test_rerun_is_byte_identical(self, workdir):
        simulate_tiny()
        assert run_cli(self.identify_args(out="e1.csv")) == 0
        assert run_cli(self.identify_args(out="e2.csv")) == 0
        assert (workdir / "e1.csv").read_bytes() == (workdir / "e2.csv").read_bytes()

    def test_incompatible_levels_exit_4(self, workdir, capsys):
        simulate_tiny(quantizer="identity")  # continuous y
        code = run_cli(self.identify_args())
        err = capsys.readouterr().err
        assert code == 4
        assert "rows" in err and "60" in err  # every row flagged, count shown

    def test_missing_data_file_exit_3(self, workdir):
        assert run_cli(self.identify_args(data="absent.csv")) == 3

    def test_order_too_large_exit_5(self, workdir):
        simulate_tiny()
        assert run_cli(self.identify_args(order="60")) == 5

    def test_iterations_not_above_burn_in_exit_2(self, workdir):
        simulate_tiny()
        assert run_cli(self.identify_args(iterations="50", burn_in="50")) == 2

    def test_quantizer_required(self, workdir, capsys):
        simulate_tiny()
        argv = ["identify", "data.csv", "--order", "5", "--iterations", "150",
                "--burn-in", "50", "--out", "e.csv"]
        assert run_cli(argv) == 2
        assert "quantizer" in capsys.readouterr().err


class TestBenchmark:
    def bench_args(self, out, extra=()):
        return ["benchmark", "--runs", "3", "--samples", "50", "--order", "5",
                "--zero-pairs", "2", "--pole-pairs", "2",
                "--iterations", "40", "--burn-in", "10", "--beta", "0.7",
                "--estimators", "BQGS,LS", "--seed", "0", "--out", out, *extra]

    def test_writes_artifacts(self, workdir):
        assert run_cli(self.bench_args("bench")) == 0
        results = (workdir / "bench" / "results.csv").read_text()
        lines = results.splitlines()
        assert lines[0] == "run,seed,estimator,fit,wall_time_s,beta_used"
        assert len(lines) == 1 + 3 * 2
        summary = json.loads((workdir / "bench" / "summary.json").read_text())
        assert summary["runs"] == 3
        assert set(summary["estimators"]) == {"BQGS", "LS"}
        manifest = json.loads((workdir / "bench" / "manifest.json").read_text())
        assert manifest["artifacts"] == ["results.csv", "summary.json"]

    def test_wall_time_blank_without_timings(self, workdir):
        assert run_cli(self.bench_args("bench")) == 0
        for line in (workdir / "bench" / "results.csv").read_text().splitlines()[1:]:
            assert line.split(",")[4] == ""

    def test_timings_fill_wall_time(self, workdir):
        assert run_cli(self.bench_args("bench", extra=["--timings"])) == 0
        for line in (workdir / "bench" / "results.csv").read_text().splitlines()[1:]:
            assert float(line.split(",")[4]) >= 0.0

    def test_rerun_and_threads_do_not_change_bytes(self, workdir):
        assert run_cli(self.bench_args("b1")) == 0
        assert run_cli(self.bench_args("b2")) == 0
        assert run_cli(self.bench_args("b3", extra=["--threads", "4"])) == 0
        for name in ("results.csv", "summary.json"):
            a = (workdir / "b1" / name).read_bytes()
            assert (workdir / "b2" / name).read_bytes() == a
            assert (workdir / "b3" / name).read_bytes() == a
        # manifests record the invocation, so only the exact rerun matches
        m1 = json.loads((workdir / "b1" / "manifest.json").read_text())
        m2 = json.loads((workdir / "b2" / "manifest.json").read_text())
        assert {k: v for k, v in m1["config"].items() if k != "out"} == \
               {k: v for k, v in m2["config"].items() if k != "out"}

    def test_bad_estimator_exit_2(self, workdir, capsys):
        assert run_cli(self.bench_args("bench", extra=["--estimators", "LS,MAP"])) == 2
        assert "MAP" in capsys.readouterr().err

    def test_manifest_has_no_timestamps(self, workdir):
        assert run_cli(self.bench_args("bench")) == 0
        manifest = (workdir / "bench" / "manifest.json").read_text()
        assert "time" not in json.loads(manifest)
        assert "date" not in manifest and "stamp" not in manifest
