import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from poissonproj.cli import load_config, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(*argv):
    return main([str(a) for a in argv])


class TestSimulate:
    def test_zero_intensity(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run("simulate", "--n", 5, "--design", "iid", "--intensity", "const:0", "--seed", 7, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x,y" and len(lines) == 6
        assert all(line.endswith(",0") for line in lines[1:])

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run("simulate", "--n", 50, "--design", "mixing", "--seed", 3, "--out", path)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes().endswith(b"\n")

    def test_round_trip_precision(self, tmp_path):
        from poissonproj.cli import read_dataset
        from poissonproj.sampler import CovariateProcessSpec, simulate_dataset, test_intensity

        out = tmp_path / "d.csv"
        run("simulate", "--n", 40, "--seed", 11, "--out", out)
        back = read_dataset(str(out))
        ref = simulate_dataset(test_intensity(), CovariateProcessSpec(), 40, 11)
        assert back.xs.tobytes() == ref.xs.tobytes()
        assert back.ys.tolist() == ref.ys.tolist()

    @pytest.mark.parametrize(
        "argv",
        [
            ("simulate", "--n", "0"),
            ("simulate", "--n", "5", "--design", "weird"),
            ("simulate", "--n", "5", "--intensity", "const:-1"),
            ("simulate",),
            ("nonsense",),
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(*argv) == 2
        assert capsys.readouterr().err


class TestFit:
    @pytest.fixture
    def paper_csv(self, tmp_path):
        path = tmp_path / "paper.csv"
        run("simulate", "--n", 1024, "--seed", 5, "--out", path)
        return path

    def test_paper_defaults(self, paper_csv, tmp_path):
        out = tmp_path / "fit.json"
        rc = run("fit", "--data", paper_csv, "--family", "hist", "--penalty", "practical",
                 "--kappa", 0.09, "--xi", 10, "--out", out)
        assert rc == 0
        report = json.loads(out.read_text())
        assert 0 <= report["chosen_index"] <= 10
        assert len(report["table"]) == 11
        assert len(report["coefficients"]) == 2 ** report["chosen_index"]
        assert report["mu_hat"] is None

    def test_plugin_reports_mu(self, paper_csv, tmp_path):
        out = tmp_path / "fit.json"
        assert run("fit", "--data", paper_csv, "--penalty", "plugin", "--out", out) == 0
        assert json.loads(out.read_text())["mu_hat"] >= 1.0

    def test_zero_counts(self, tmp_path):
        data = tmp_path / "z.csv"
        run("simulate", "--n", 30, "--intensity", "const:0", "--out", data)
        out = tmp_path / "fit.json"
        for fam in ("hist", "trig"):
            assert run("fit", "--data", data, "--family", fam, "--penalty", "practical",
                       "--kappa", 0.09, "--xi", 10, "--out", out) == 0
            assert json.loads(out.read_text())["chosen_dimension"] == 1

    def test_missing_kappa(self, paper_csv):
        assert run("fit", "--data", paper_csv, "--penalty", "practical", "--xi", 10) == 2

    @pytest.mark.parametrize("content", ["x,y\n", "x,y\n0.5,abc\n", "a,b\n0.1,2\n", "x,y\n1.5,2\n", "x,y\n0.5,1.5\n"])
    def test_bad_data(self, tmp_path, content):
        data = tmp_path / "bad.csv"
        data.write_text(content)
        assert run("fit", "--data", data, "--penalty", "known-xi", "--xi", 1) == 2

    def test_missing_file(self, tmp_path):
        assert run("fit", "--data", tmp_path / "nope.csv", "--penalty", "plugin") == 2


class TestConfig:
    def test_flat_and_json_agree(self):
        assert load_config(str(CONFIGS / "table1_n1024.conf")) == load_config(str(CONFIGS / "table1_n1024.json"))

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "c.conf"
        cfg.write_text("n = 100\nbogus = 1\n")
        assert run("benchmark", "--config", cfg) == 2

    @pytest.mark.parametrize("text", ["n = 1\n", "n = 100\nreplicates = 0\n", "n = abc\n", "n 100\n",
                                      "n = 100\nkappa = -1\n", "n = 100\ndesign = other\n"])
    def test_validation(self, tmp_path, text):
        cfg = tmp_path / "c.conf"
        cfg.write_text(text)
        assert run("benchmark", "--config", cfg) == 2

    def test_inline_overrides_config(self, tmp_path):
        out = tmp_path / "r.json"
        assert run("benchmark", "--config", CONFIGS / "table1_n1024.conf", "--replicates", 1,
                   "--threads", 1, "--out", out) == 0
        data = json.loads(out.read_text())
        assert data["config"]["replicates"] == 1 and data["sd_error"] == 0


class TestBenchmarkCommands:
    def test_table1_config(self, tmp_path):
        out = tmp_path / "t1.json"
        assert run("benchmark", "--config", CONFIGS / "table1_n1024.conf", "--threads", 1, "--out", out) == 0
        data = json.loads(out.read_text())
        tol = 0.15 * 1.1901 + 3 * data["sd_error"] / math.sqrt(500)
        assert abs(data["mean_error"] - 1.1901) <= tol

    def test_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("benchmark", "--n", 256, "--replicates", 8, "--threads", 1, "--out", a)
        run("benchmark", "--n", 256, "--replicates", 8, "--threads", 2, "--out", b)
        assert a.read_bytes() == b.read_bytes()

    def test_bands(self, tmp_path):
        out = tmp_path / "b.csv"
        assert run("bands", "--n", 256, "--replicates", 10, "--grid", 17, "--threads", 1, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x,q01,q25,q50,q75,q99" and len(lines) == 18

    def test_rates(self, tmp_path):
        out = tmp_path / "r.json"
        assert run("rates", "--ns", "256,512,1024", "--replicates", 5, "--threads", 1, "--out", out) == 0
        assert "slope" in json.loads(out.read_text())

    def test_rates_need_ns(self):
        assert run("rates", "--replicates", 5) == 2

    def test_env_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("POISSONPROJ_THREADS", "2")
        out = tmp_path / "e.json"
        assert run("benchmark", "--n", 128, "--replicates", 4, "--out", out) == 0


def test_module_entry_point(tmp_path):
    out = tmp_path / "d.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "poissonproj", "simulate", "--n", "3", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and len(out.read_text().splitlines()) == 4
    proc = subprocess.run([sys.executable, "-m", "poissonproj", "fit"], capture_output=True, text=True)
    assert proc.returncode == 2
