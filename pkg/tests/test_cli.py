import subprocess
import sys

import pytest

from rmstop.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, SEED_ENV, main, resolve_seed
from rmstop.errors import ConfigError
from rmstop.harness import load_metadata, load_table
from rmstop.ingest import read_trace
from rmstop.uncertainty import all_failure_threshold


@pytest.fixture
def clean_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    return monkeypatch


class TestThreshold:
    def test_prints_299(self, capsys):
        assert main(["threshold", "--alpha", "0.05", "--epsilon", "0.01"]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "299" == str(all_failure_threshold(0.05, 0.01))
        assert "(299)" in out[1] and "(298)" in out[2]

    def test_invalid(self, capsys):
        assert main(["threshold", "--alpha", "1.5", "--epsilon", "0.01"]) == EXIT_CONFIG


class TestStudy:
    def test_deterministic(self, tmp_path, clean_env):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path, workers in zip(paths, ("1", "2")):
            argv = ["study", "--id", "3", "--reps", "10", "--seed", "7", "--out", str(path),
                    "--workers", workers]
            assert main(argv) == EXIT_OK
        assert paths[0].read_bytes() == paths[1].read_bytes()
        meta = load_metadata(paths[0])
        assert meta["master_seed"] == 7 and meta["reps"] == 10
        assert load_table(paths[0])[0].study == 3

    def test_json(self, tmp_path, clean_env):
        out = tmp_path / "s.json"
        assert main(["study", "--id", "7", "--reps", "2", "--out", str(out), "--format", "json"]) == EXIT_OK
        assert len(load_table(out)) == 27

    def test_seed_from_environment(self, tmp_path, clean_env):
        clean_env.setenv(SEED_ENV, "11")
        out = tmp_path / "s.csv"
        assert main(["study", "--id", "1", "--reps", "1", "--out", str(out)]) == EXIT_OK
        assert load_metadata(out)["master_seed"] == 11

    def test_unwritable_output(self, tmp_path, clean_env):
        out = tmp_path / "missing" / "s.csv"
        assert main(["study", "--id", "1", "--reps", "1", "--out", str(out)]) == EXIT_IO

    @pytest.mark.parametrize("argv", [
        ["study", "--id", "9", "--out", "x"],
        ["study", "--id", "1", "--reps", "0", "--out", "x"],
        ["study", "--id", "1", "--workers", "0", "--out", "x"],
        ["study", "--bogus"],
        ["frobnicate"],
        [],
    ])
    def test_config_errors(self, argv, clean_env, capsys):
        assert main(argv) == EXIT_CONFIG


class TestSeedResolution:
    def test_precedence(self, clean_env):
        assert resolve_seed(None, default=4) == 4
        clean_env.setenv(SEED_ENV, "9")
        assert resolve_seed(None, default=4) == 9
        assert resolve_seed(3, default=4) == 3

    def test_bad_environment(self, clean_env):
        clean_env.setenv(SEED_ENV, "abc")
        with pytest.raises(ConfigError):
            resolve_seed(None)


class TestMonitor:
    def test_bll_fallback(self, tmp_path, clean_env, capsys):
        out = tmp_path / "bll.csv"
        argv = ["monitor", "--input", str(tmp_path / "nhanes.csv"), "--model", "bll", "--out", str(out)]
        assert main(argv) == EXIT_OK
        assert "synthetic" in capsys.readouterr().err
        _, _, meta = read_trace(out)
        assert meta["data"]["source"] == "synthetic"
        assert meta["data"]["seed"] == 1
        assert meta["data"]["generator"] == "gen_bll_series"
        assert meta["config"]["epsilon"] == 1.5
        assert meta["stops"]["boundary_only"] < meta["stops"]["rm"]

    def test_ili_requires_epsilon(self, tmp_path, clean_env):
        assert main(["monitor", "--model", "ili", "--out", str(tmp_path / "t.csv")]) == EXIT_CONFIG

    def test_ili_fallback_seed(self, tmp_path, clean_env):
        out = tmp_path / "ili.csv"
        assert main(["monitor", "--model", "ili", "--epsilon", "25", "--seed", "3", "--out", str(out)]) == EXIT_OK
        _, _, meta = read_trace(out)
        assert meta["data"]["seed"] == 3 and meta["data"]["input"] is None

    def test_real_input(self, tmp_path, clean_env):
        data = tmp_path / "ili.csv"
        data.write_text("year,week,rate\n2019,1,0\n2019,2,1\n2019,3,0\n")
        out = tmp_path / "t.csv"
        argv = ["monitor", "--input", str(data), "--model", "ili", "--epsilon", "2", "--n-min", "1",
                "--out", str(out)]
        assert main(argv) == EXIT_OK
        scores, _, meta = read_trace(out)
        assert meta["data"]["source"] == "real"
        assert list(scores.n) == [1, 2, 3]

    def test_parse_error_exit_2(self, tmp_path, clean_env, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("value\n1.0\n-2\n")
        argv = ["monitor", "--input", str(data), "--model", "bll", "--out", str(tmp_path / "t.csv")]
        assert main(argv) == EXIT_IO
        assert "line 3" in capsys.readouterr().err

    def test_generic_model_needs_input(self, tmp_path, clean_env):
        argv = ["monitor", "--model", "gaussian_mean", "--epsilon", "1", "--out", str(tmp_path / "t.csv")]
        assert main(argv) == EXIT_CONFIG

    def test_generic_model_missing_file(self, tmp_path, clean_env):
        argv = ["monitor", "--model", "gaussian_mean", "--epsilon", "1", "--input",
                str(tmp_path / "none.csv"), "--out", str(tmp_path / "t.csv")]
        assert main(argv) == EXIT_IO

    def test_study_five_routes_to_monitor(self, tmp_path, clean_env):
        out = tmp_path / "s5.csv"
        assert main(["study", "--id", "5", "--epsilon", "25", "--out", str(out)]) == EXIT_OK
        _, _, meta = read_trace(out)
        assert all(v is None for v in meta["stops"].values())


class TestCalibrate:
    def test_poisson_unattainable_note(self, capsys):
        argv = ["calibrate-cusum", "--model", "poisson", "--lam0", "0.005", "--runs", "200"]
        assert main(argv) == EXIT_OK
        assert "not attainable" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rmstop.cli", "threshold", "--alpha", "0.05",
                           "--epsilon", "0.01"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "299"
