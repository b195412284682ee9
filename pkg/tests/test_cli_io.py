import json
import math

import numpy as np
import pytest

from dtcsim import cli
from dtcsim.io import (RunManifest, atomic_write_text, load_config, read_csv, read_series_csv,
                       write_csv, write_manifest)
from dtcsim.model import ConfigError


@pytest.fixture(autouse=True)
def output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("DTCSIM_OUTPUT_ROOT", str(tmp_path / "root"))
    return tmp_path / "root"


class TestIo:
    def test_csv_round_trip_exact(self, tmp_path):
        x = np.random.default_rng(0).normal(size=50)
        write_csv(tmp_path / "a.csv", {"n": np.arange(50), "x": x})
        back = read_csv(tmp_path / "a.csv")
        assert np.array_equal(back["x"], x)
        assert np.array_equal(back["n"], np.arange(50))

    def test_unequal_columns_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "a.csv", {"a": [1, 2], "b": [1]})

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        atomic_write_text(tmp_path / "sub" / "f.txt", "hello")
        assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]

    def test_series_reader(self, tmp_path):
        write_csv(tmp_path / "s.csv", {"n": [0, 1, 2], "magnetization": [1.0, -0.5, 0.25]})
        s = read_series_csv(tmp_path / "s.csv")
        assert s.initial == 1.0 and list(s.values) == [-0.5, 0.25]
        write_csv(tmp_path / "t.csv", {"a": [0.1, 0.2], "b": [0.3, 0.4]})
        with pytest.raises(ValueError, match="column"):
            read_series_csv(tmp_path / "t.csv")
        assert list(read_series_csv(tmp_path / "t.csv", "b").values) == [0.3, 0.4]

    def test_manifest_json(self, tmp_path):
        m = RunManifest("psos", {"JT": 1}, {"JT": 1.0}, "meanfield", ["psos.csv"],
                        summary={"x": math.inf})
        write_manifest(tmp_path / "m.json", m)
        data = json.loads((tmp_path / "m.json").read_text())
        assert data["subcommand"] == "psos" and data["summary"]["x"] == "inf"
        assert data["tool_version"] and data["timestamp"]

    def test_config_loading(self, tmp_path):
        (tmp_path / "c.toml").write_text("JT = 1.0\nepsilonT = 0.05\n")
        assert load_config(tmp_path / "c.toml") == {"JT": 1.0, "epsilonT": 0.05}
        (tmp_path / "n.toml").write_text("[model]\nJT = 1\n")
        with pytest.raises(ConfigError, match="flat"):
            load_config(tmp_path / "n.toml")
        (tmp_path / "bad.toml").write_text("JT = = 1\n")
        with pytest.raises(ConfigError):
            load_config(tmp_path / "bad.toml")
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.toml")


class TestCli:
    def test_psos_from_config(self, tmp_path):
        cfg = tmp_path / "fig1b.toml"
        cfg.write_text("JT = 1.0\nlambdaT = 0.05\nepsilonT = 0.05\nn_periods = 10\n"
                       "seeds_p = 4\nseeds_q = 3\n")
        out = tmp_path / "out"
        assert cli.run(["psos", "--config", str(cfg), "--out", str(out)]) == 0
        data = read_csv(out / "psos.csv")
        assert list(data) == ["seed_P", "seed_Q", "n", "P", "Q"]
        assert len(data["n"]) == 12 * 11
        orbit = read_csv(out / "orbit.csv")
        assert orbit["sigma_y"][0] == pytest.approx(1.0)
        m = json.loads((out / "manifest.json").read_text())
        assert m["config"]["JT"] == 1.0 and m["parameters"]["lambdaT"] == pytest.approx(0.05)

    def test_unknown_key_is_fatal(self, tmp_path, capsys):
        cfg = tmp_path / "c.toml"
        cfg.write_text("JT = 1.0\nlamdaT = 0.05\n")
        assert cli.run(["psos", "--config", str(cfg)]) == 2
        assert "lamdaT" in capsys.readouterr().err

    def test_stage_named_on_failure(self, capsys):
        code = cli.run(["mps-evolve", "--set", "N=4", "--set", "M=1", "--set", "JT=1",
                        "--set", "dt_over_T=0.05", "--set", "n_periods=2", "--set", "budget=1e-9"])
        assert code == 1
        assert "evolve" in capsys.readouterr().err

    def test_spectrum_of_constant_series(self, tmp_path):
        write_csv(tmp_path / "constant.csv", {"n": np.arange(9), "magnetization": np.ones(9)})
        out = tmp_path / "spec"
        assert cli.run(["spectrum", "--input", str(tmp_path / "constant.csv"),
                        "--out", str(out)]) == 0
        data = read_csv(out / "spectrum.csv")
        assert list(data) == ["omega_over_omega_drive", "magnitude_sq"]
        assert data["magnitude_sq"][0] == pytest.approx(1.0)
        assert len(data["magnitude_sq"]) == 8  # the n = 0 row is the initial value
        assert data["omega_over_omega_drive"][4] == 0.5
        assert data["magnitude_sq"][4] == pytest.approx(0.0, abs=1e-30)

    def test_rerun_from_manifest_is_bit_identical(self, tmp_path):
        a = tmp_path / "a"
        assert cli.run(["mps-evolve", "--set", "N=4", "--set", "M=4", "--set", "JT=0.5",
                        "--set", "epsilonT=0.05", "--set", "lambdaT=0.05",
                        "--set", "dt_over_T=0.01", "--set", "n_periods=4", "--out", str(a)]) == 0
        b = tmp_path / "b"
        assert cli.run(["mps-evolve", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
        for name in ("series.csv", "spectrum.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        assert read_csv(a / "series.csv")["magnetization"][0] == pytest.approx(1.0)

    def test_default_output_root(self, output_root):
        assert cli.run(["mf-evolve", "--set", "n_periods=4"]) == 0
        runs = list((output_root / "mf-evolve").iterdir())
        assert len(runs) == 1 and (runs[0] / "manifest.json").exists()

    def test_ed_and_mps_csv_schema_match(self, tmp_path):
        args = ["--set", "N=4", "--set", "dt_over_T=0.01", "--set", "n_periods=2"]
        assert cli.run(["ed-evolve", *args, "--out", str(tmp_path / "e")]) == 0
        assert cli.run(["mps-evolve", *args, "--set", "M=4", "--out", str(tmp_path / "m")]) == 0
        e = read_csv(tmp_path / "e" / "series.csv")
        m = read_csv(tmp_path / "m" / "series.csv")
        assert list(e) == list(m) == ["n", "magnetization", "cumulative_truncation_weight"]
        assert np.allclose(e["magnetization"], m["magnetization"], atol=1e-5)

    def test_scan(self, tmp_path):
        out = tmp_path / "scan"
        assert cli.run(["scan-delta", "--set", "JT=0", "--set", "n_periods=100",
                        "--set", "deltas=[0.0, 0.05]", "--out", str(out)]) == 0
        data = read_csv(out / "scan.csv")
        assert list(data) == ["delta", "peak"]
        assert list(data["delta"]) == [0.0, 0.05]
        assert data["peak"][0] == pytest.approx(1.0, abs=1e-8)
        assert cli.run(["scan-delta", "--set", "epsilonT=0.1"]) == 2
        assert cli.run(["scan-delta", "--set", "deltas=[0.1]", "--set", "delta_min=0"]) == 2

    def test_reproduce_small(self, tmp_path):
        out = tmp_path / "fig4"
        assert cli.run(["reproduce", "fig4", "--sites", "4", "--bond", "4", "--periods", "4",
                        "--dt-over-T", "0.01", "--out", str(out)]) == 0
        bundle = json.loads((out / "manifest.json").read_text())
        assert bundle["criterion"] == [1, 2, 3, 7]
        assert len(bundle["outputs"]) == 3
        for d in bundle["outputs"]:
            assert (out / d / "series.csv").exists() and (out / d / "spectrum.csv").exists()

    def test_reproduce_semiclassical(self, tmp_path):
        out = tmp_path / "fig2"
        assert cli.run(["reproduce", "fig2", "--periods", "20", "--convention", "spin",
                        "--out", str(out)]) == 0
        bundle = json.loads((out / "manifest.json").read_text())
        assert bundle["outputs"] == ["JT1", "JT3", "JT4"]
        m = json.loads((out / "JT1" / "manifest.json").read_text())
        assert m["config"]["convention"] == "spin" and m["config"]["n_periods"] == 20

    def test_reproduce_site_study_member(self, tmp_path):
        out = tmp_path / "fig7"
        assert cli.run(["reproduce", "fig7", "--sites", "4", "--bond", "4", "--periods", "2",
                        "--dt-over-T", "0.05", "--out", str(out)]) == 0
        bundle = json.loads((out / "manifest.json").read_text())
        assert bundle["outputs"] == ["N4_JT1_eps0.05_lam0.05"]

    @pytest.mark.parametrize("argv", [["reproduce", "fig9"],
                                      ["reproduce", "fig2", "--engine", "mps"],
                                      ["reproduce", "fig1b", "--sites", "8"],
                                      ["reproduce", "fig4", "--convention", "spin"]])
    def test_reproduce_errors(self, argv):
        assert cli.run(argv) == 2

    def test_bad_invocation(self):
        assert cli.run(["nonsense"]) == 2
        assert cli.run(["psos", "--set", "novalue"]) == 2
