"""CLI contracts: formats, exit codes, determinism, config handling."""

import json
from pathlib import Path

import numpy as np
import pytest

from gaussbound.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, main


def run_cli(args):
    return main(list(args))


def read_json(path):
    return json.loads(Path(path).read_text())


@pytest.fixture()
def sample_csv(tmp_path):
    path = tmp_path / "pair.csv"
    assert run_cli(["gen", "--model", "gm1d", "--n", "600", "--seed", "5", "--out", str(path)]) == 0
    return path


class TestGen:
    def test_csv_layout(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run_cli(["gen", "--model", "exp_gamma", "--d", "3", "--n", "50", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x0,x1,x2,y0,y1,y2"
        assert len(lines) == 51

    def test_gm1d_header(self, sample_csv):
        assert sample_csv.read_text().splitlines()[0] == "x0,y0"

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert run_cli(["gen", "--model", "gm1d", "--n", "100", "--seed", "9", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_sidecar_metadata(self, tmp_path):
        out = tmp_path / "s.csv"
        run_cli(["gen", "--model", "mv_gaussian_scramble", "--d", "2", "--n", "80", "--seed", "2", "--out", str(out)])
        meta = read_json(str(out) + ".meta.json")
        assert meta["schema"] == 1
        assert abs(meta["true_mi_bits"] - 1.0) <= 1e-9
        assert meta["scramble"]["mirror"] == [-1.0, 1.0]

    def test_unwritable_path(self, sample_csv):
        # a path below an existing *file* cannot be created
        assert run_cli(["gen", "--model", "gm1d", "--n", "10", "--out", str(sample_csv / "x.csv")]) == EXIT_IO


class TestBound:
    def test_report_fields_and_units(self, sample_csv, tmp_path):
        report_path = tmp_path / "r.json"
        code = run_cli(
            ["bound", "--input", str(sample_csv), "--method", "naive", "--seed", "3", "--out", str(report_path)]
        )
        assert code == 0
        report = read_json(report_path)
        assert report["schema"] == 1
        assert report["method"] == "naive"
        lb_nats, lb_bits = report["lower_bound_nats"], report["lower_bound_bits"]
        assert abs(lb_nats / np.log(2.0) - lb_bits) <= 1e-9
        assert report["ace_upper_bound_nats"] >= lb_nats
        assert "w2_diagnostics" in report

    def test_determinism_modulo_timing(self, sample_csv, tmp_path):
        paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
        for p in paths:
            assert (
                run_cli(["bound", "--input", str(sample_csv), "--method", "offshelf", "--seed", "11", "--out", str(p)])
                == 0
            )
        reports = [read_json(p) for p in paths]
        for r in reports:
            r.pop("timing")
        assert json.dumps(reports[0], sort_keys=True) == json.dumps(reports[1], sort_keys=True)

    def test_model_source_sets_lemma_flag(self, tmp_path):
        p = tmp_path / "r.json"
        code = run_cli(
            ["bound", "--model", "gm1d", "--n", "2000", "--method", "naive", "--seed", "7", "--out", str(p)]
        )
        assert code == 0
        report = read_json(p)
        assert report["no_lossless_gaussian_embedding"] is True
        assert report["true_mi_nats"] > 1.0

    def test_multivariate_agce_rejected(self, tmp_path):
        code = run_cli(
            ["bound", "--model", "mv_gaussian_scramble", "--d", "2", "--n", "500", "--method", "agce"]
        )
        assert code == EXIT_CONFIG

    def test_both_sources_rejected(self, sample_csv):
        assert (
            run_cli(["bound", "--input", str(sample_csv), "--model", "gm1d", "--method", "naive"])
            == EXIT_CONFIG
        )


class TestCsvValidation:
    def test_bad_header(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        assert run_cli(["bound", "--input", str(bad), "--method", "naive"]) == EXIT_CONFIG

    def test_bad_float_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x0,y0\n1.0,2.0\n1.0,oops\n")
        assert run_cli(["bound", "--input", str(bad), "--method", "naive"]) == EXIT_CONFIG
        assert "line 3" in capsys.readouterr().err

    def test_dimension_mismatch_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("x0,y0\n1.0,2.0\n1.0\n")
        assert run_cli(["bound", "--input", str(bad), "--method", "naive"]) == EXIT_CONFIG
        assert "line 3" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert run_cli(["bound", "--input", str(tmp_path / "nope.csv"), "--method", "naive"]) == EXIT_IO

    def test_numerical_failure_exit_code(self, tmp_path):
        # duplicated predictor column makes the raw covariance singular, so
        # the curve pipeline cannot build a spectrum from the raw blocks
        rng = np.random.default_rng(31)
        x = rng.standard_normal(300)
        y = rng.standard_normal(300)
        path = tmp_path / "dup.csv"
        rows = ["x0,x1,y0"] + [
            f"{float(a)!r},{float(a)!r},{float(b)!r}" for a, b in zip(x, y)
        ]
        path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "curves"
        code = run_cli(["curve", "--input", str(path), "--method", "naive", "--seed", "1", "--out-dir", str(out)])
        assert code == EXIT_NUMERIC


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n = 500\nseed = 21\nmethod = naive\n")
        p1 = tmp_path / "r1.json"
        assert run_cli(["bound", "--model", "gm1d", "--config", str(cfg), "--out", str(p1)]) == 0
        r1 = read_json(p1)
        assert r1["seed"] == 21 and r1["method"] == "naive"
        p2 = tmp_path / "r2.json"
        assert (
            run_cli(["bound", "--model", "gm1d", "--config", str(cfg), "--seed", "99", "--out", str(p2)]) == 0
        )
        assert read_json(p2)["seed"] == 99

    def test_env_seed_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GB_SEED", "123")
        p = tmp_path / "r.json"
        assert run_cli(["bound", "--model", "gm1d", "--n", "300", "--method", "naive", "--out", str(p)]) == 0
        assert read_json(p)["seed"] == 123

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nonsense line\n")
        assert run_cli(["bound", "--model", "gm1d", "--config", str(cfg)]) == EXIT_CONFIG


class TestCurve:
    def test_emits_curves_and_manifest(self, tmp_path):
        out = tmp_path / "curves"
        code = run_cli(
            [
                "curve",
                "--model",
                "gm1d",
                "--n",
                "2000",
                "--method",
                "offshelf",
                "--seed",
                "5",
                "--quad-m",
                "16",
                "--out-dir",
                str(out),
            ]
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["schema"] == 1
        assert set(manifest["files"]) == {"method_curve", "raw_gib_curve", "reference_curve"}
        header = (out / "method_curve.csv").read_text().splitlines()[0]
        assert header == "beta,i_tx_bits,i_ty_bits"
        ref = np.loadtxt(out / "reference_curve.csv", delimiter=",", skiprows=1)
        method = np.loadtxt(out / "method_curve.csv", delimiter=",", skiprows=1)
        assert ref[:, 2].max() > method[:, 2].max()  # reference sits above

    def test_no_reference_on_csv_input(self, sample_csv, tmp_path):
        out = tmp_path / "curves"
        code = run_cli(
            ["curve", "--input", str(sample_csv), "--method", "naive", "--seed", "2", "--out-dir", str(out)]
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert "reference_curve" not in manifest["files"]

    def test_independent_input_stays_at_origin(self, tmp_path):
        rng = np.random.default_rng(30)
        path = tmp_path / "indep.csv"
        rows = ["x0,y0"] + [
            f"{float(a)!r},{float(b)!r}"
            for a, b in zip(rng.standard_normal(3000), rng.standard_normal(3000))
        ]
        path.write_text("\n".join(rows) + "\n")
        report_path = tmp_path / "r.json"
        assert (
            run_cli(["bound", "--input", str(path), "--method", "naive", "--seed", "1", "--out", str(report_path)])
            == 0
        )
        report = read_json(report_path)
        assert report["lower_bound_bits"] <= 0.02
        assert report["no_lossless_gaussian_embedding"] is None  # true MI unknown for CSVs
        out = tmp_path / "curves"
        assert (
            run_cli(["curve", "--input", str(path), "--method", "naive", "--seed", "1", "--out-dir", str(out)]) == 0
        )
        curve = np.loadtxt(out / "method_curve.csv", delimiter=",", skiprows=1)
        assert np.all(curve[:, 2] <= 0.02)


class TestReproduce:
    def test_unknown_id_lists_valid(self, capsys):
        assert run_cli(["reproduce", "bogus"]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "sec4.4" in err and "sec6.1-gm" in err

    def test_table_rendering(self, capsys):
        # small-n smoke of the table path; values are not asserted here
        assert run_cli(["reproduce", "sec5.4-gm", "--n", "2000"]) == 0
        out = capsys.readouterr().out
        assert "check" in out and "gm-d1" in out
        assert "PASS" in out or "FAIL" in out
