import hashlib
import json
import re

import numpy as np
import pytest

from skyrmion_optics import cli, ingest
from skyrmion_optics.cli import RunConfig, UsageError, main


def digest(directory):
    h = {}
    for p in sorted(directory.rglob("*")):
        if p.is_file():
            h[str(p.relative_to(directory))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return h


@pytest.fixture(scope="module")
def d2_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "d2"
    assert main(["synth", "--l1", "0", "--l2", "2", "--grid", "512", "--extent", "4", "--out", str(out)]) == 0
    return out


class TestSynth:
    def test_writes_six_images(self, d2_dir):
        names = {p.name for p in d2_dir.iterdir()}
        assert {f"I{k}.csv" for k in ("x1", "x2", "y1", "y2", "z1", "z2")} <= names
        assert {"meta.json", "config.json"} <= names
        ms = ingest(d2_dir)
        x, y = ms.grid.coords()
        # default V configuration: the z2 frame is the bare Gaussian
        np.testing.assert_allclose(ms["z2"], 2 / np.pi * np.exp(-2 * (x**2 + y**2)), atol=1e-14)

    def test_uniform(self, tmp_path, capsys):
        assert main(["synth", "--l1", "0", "--l2", "0", "--grid", "64", "--out", str(tmp_path / "u")]) == 0
        assert main(["analyze", str(tmp_path / "u")]) == 0
        n = float(re.search(r"N = (\S+)", capsys.readouterr().out).group(1))
        assert abs(n) < 1e-4

    def test_byte_identical_reruns(self, tmp_path):
        args = ["synth", "--l1", "0", "--l2", "2", "--noise", "0.01", "--bits", "8", "--seed", "7", "--grid", "128"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        da, db = digest(tmp_path / "a"), digest(tmp_path / "b")
        # the echoed config differs only by its output path
        assert da.pop("config.json") != db.pop("config.json")
        assert da == db

    def test_pgm(self, tmp_path):
        out = tmp_path / "p"
        assert main(["synth", "--grid", "64", "--bits", "16", "--format", "pgm", "--out", str(out)]) == 0
        assert ingest(out).bit_depth == 16

    def test_pgm_needs_bits(self, tmp_path, capsys):
        assert main(["synth", "--grid", "64", "--format", "pgm", "--out", str(tmp_path / "p")]) == 2
        assert "--bits" in capsys.readouterr().err

    def test_refuses_existing_output(self, d2_dir, capsys):
        assert main(["synth", "--grid", "64", "--out", str(d2_dir)]) == 2
        assert "--force" in capsys.readouterr().err

    def test_force_overwrites(self, tmp_path):
        out = tmp_path / "f"
        assert main(["synth", "--grid", "64", "--out", str(out)]) == 0
        assert main(["synth", "--grid", "64", "--l2", "3", "--out", str(out), "--force"]) == 0
        assert json.loads((out / "config.json").read_text())["l2"] == 3

    def test_invalid_grid_is_computation_error(self, tmp_path):
        assert main(["synth", "--grid", "4", "--out", str(tmp_path / "g")]) == 1


class TestAnalyze:
    def test_prints_n(self, d2_dir, tmp_path, capsys):
        out = tmp_path / "an"
        assert main(["analyze", str(d2_dir), "--out", str(out)]) == 0
        line = capsys.readouterr().out.strip().splitlines()[-1]
        m = re.match(r"N = (\S+) ± (\S+)", line)
        assert m
        assert float(m.group(1)) == pytest.approx(2.0, rel=0.01)
        assert json.loads((out / "result.json").read_text())["n_skyrmion"] == pytest.approx(2.0, rel=0.01)
        assert (out / "config.json").exists()

    def test_inner_radius_warns(self, d2_dir, tmp_path, capsys):
        assert main(["analyze", str(d2_dir), "--radius", "0.1", "--out", str(tmp_path / "r")]) == 0
        cap = capsys.readouterr()
        assert float(re.search(r"N = (\S+)", cap.out).group(1)) < 0.2
        assert "coverage" in cap.err

    def test_missing_directory(self, tmp_path, capsys):
        missing = tmp_path / "does-not-exist"
        assert main(["analyze", str(missing)]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_stage_error_exit_one(self, tmp_path, capsys):
        src = tmp_path / "d"
        assert main(["synth", "--grid", "64", "--out", str(src)]) == 0
        assert main(["analyze", str(src), "--radius", "0.01", "--out", str(tmp_path / "o")]) == 1
        assert "[skyrmion_number]" in capsys.readouterr().err

    def test_no_calibrate_flag(self, tmp_path, capsys):
        src = tmp_path / "d1"
        assert main(["synth", "--l2", "1", "--grid", "256", "--out", str(src)]) == 0
        assert main(["analyze", str(src), "--no-calibrate", "--out", str(tmp_path / "o")]) == 0
        cap = capsys.readouterr()
        assert float(re.search(r"N = (\S+)", cap.out).group(1)) > 0.9
        assert "calibration moved" not in cap.err

    def test_needs_input(self, capsys):
        assert main(["analyze"]) == 2


class TestReproduce:
    def test_single_row(self, tmp_path, capsys):
        out = tmp_path / "rep"
        assert main(["reproduce", "--deltas", "2", "--grid", "256", "--out", str(out)]) == 0
        rows = (out / "fig3.csv").read_text().strip().splitlines()
        assert rows[0] == "delta_l,N_ideal,N_degraded,uncertainty"
        assert len(rows) == 2
        dl, ideal, degraded, unc = (float(v) for v in rows[1].split(","))
        assert dl == 2 and ideal == pytest.approx(2, rel=0.01) and degraded == pytest.approx(2, rel=0.1)
        assert "fig3.csv" in (out / "fig3.gp").read_text()
        assert json.loads((out / "failures.json").read_text()) == {}
        assert len(capsys.readouterr().out.strip().splitlines()) == 2

    @pytest.mark.slow
    def test_default_table(self, tmp_path):
        out = tmp_path / "full"
        assert main(["reproduce", "--out", str(out)]) == 0
        table = np.loadtxt(out / "fig3.csv", delimiter=",", skiprows=1)
        np.testing.assert_array_equal(table[:, 0], [2, 4, 6, 8, 10, 12])
        assert np.all(np.abs(table[:, 1] - table[:, 0]) <= 0.01 * table[:, 0])
        assert np.all(np.abs(table[:, 2] - table[:, 0]) <= 0.1 * table[:, 0])

    def test_failed_row_recorded(self, tmp_path, capsys):
        out = tmp_path / "rep"
        # an extent too small for the larger order makes that row fail
        code = main(["reproduce", "--deltas", "2,12", "--grid", "128", "--extent", "4", "--out", str(out)])
        assert code == 1
        fails = json.loads((out / "failures.json").read_text())
        assert list(fails) == ["12"]
        assert len((out / "fig3.csv").read_text().strip().splitlines()) == 3

    def test_rerun_from_echoed_config(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SKYRM_THREADS", "2")
        a = tmp_path / "a"
        assert main(["reproduce", "--deltas", "2,4", "--grid", "128", "--out", str(a)]) == 0
        cfg = json.loads((a / "config.json").read_text())
        b = tmp_path / "b"
        assert main(["reproduce", "--config", str(a / "config.json"), "--out", str(b)]) == 0
        assert cfg["deltas"] == [2, 4]
        da, db = digest(a), digest(b)
        da.pop("config.json"), db.pop("config.json")
        assert da == db


class TestConfig:
    def test_flags_override_config(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"l2": 5, "grid": 64}))
        ns = cli.build_parser().parse_args(["synth", "--config", str(p), "--grid", "32"])
        cfg = cli.resolve_config(ns)
        assert (cfg.l2, cfg.grid) == (5, 32)

    def test_unknown_key(self):
        with pytest.raises(UsageError):
            RunConfig.from_dict({"l3": 1})

    def test_unreadable_config(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 2

    def test_json_roundtrip(self):
        cfg = RunConfig(l2=4, radii=[1.0, 2.0], noise_rel=0.01)
        assert RunConfig.from_dict(json.loads(cfg.to_json())) == cfg
