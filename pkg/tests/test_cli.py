import json

import numpy as np
import pytest

from addlssvm.cli import main
from addlssvm.lssvm import load_model


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def gen_files(tmp_path):
    out = tmp_path / "train"
    assert run(["gen", "--n", 100, "--seed", 7, "--out", out]) == 0
    return out


class TestGen:
    def test_shape_and_truth(self, tmp_path, gen_files):
        lines = (tmp_path / "train.csv").read_text().strip().splitlines()
        assert len(lines) == 101
        assert lines[0] == "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,y"
        assert all(len(l.split(",")) == 11 for l in lines[1:])
        truth = json.loads((tmp_path / "train.truth.json").read_text())
        assert truth["true_components"] == [1, 2, 3, 4]
        assert len(truth["noiseless"]) == 100

    def test_same_seed_byte_identical(self, tmp_path):
        run(["gen", "--n", 50, "--seed", 3, "--out", tmp_path / "a"])
        run(["gen", "--n", 50, "--seed", 3, "--out", tmp_path / "b"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (
            (tmp_path / "a.truth.json").read_bytes()
            == (tmp_path / "b.truth.json").read_bytes()
        )

    def test_zero_noise_matches_noiseless(self, tmp_path):
        run(["gen", "--n", 30, "--noise-sd", 0, "--seed", 1, "--out", tmp_path / "c"])
        truth = json.loads((tmp_path / "c.truth.json").read_text())
        rows = (tmp_path / "c.csv").read_text().strip().splitlines()[1:]
        ys = [float(r.split(",")[-1]) for r in rows]
        assert np.allclose(ys, truth["noiseless"], atol=0)


class TestFit:
    def test_l1_recovering_run(self, tmp_path):
        out = tmp_path / "t"
        run(["gen", "--n", 100, "--seed", 1, "--out", out])
        code = run(
            ["fit", "--data", tmp_path / "t.csv", "--method", "l1",
             "--xi", 0.3, "--sigma", 0.8, "--out", tmp_path / "fit1"]
        )
        assert code == 0
        metrics = json.loads((tmp_path / "fit1.metrics.json").read_text())
        assert metrics["S_D"] == [1, 2, 3, 4]
        assert "component_l1_norms" in metrics
        assert metrics["metrics"]["train"]["l2"] > 0

    def test_cv_records_best_gamma(self, tmp_path, gen_files):
        code = run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "lssvm",
             "--cv", 5, "--gamma-grid", "0.1,1,10", "--sigma", 0.6,
             "--out", tmp_path / "fit2"]
        )
        assert code == 0
        metrics = json.loads((tmp_path / "fit2.metrics.json").read_text())
        assert metrics["selected"]["gamma"] in (0.1, 1.0, 10.0)
        assert (tmp_path / "fit2.cv.csv").exists()

    def test_missing_xi_is_usage_error(self, tmp_path, gen_files):
        code = run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "l1",
             "--sigma", 0.5, "--out", tmp_path / "bad"]
        )
        assert code == 2

    def test_component_curves_file(self, tmp_path, gen_files):
        run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "lssvm",
             "--gamma", 1, "--sigma", 0.6, "--out", tmp_path / "fit3"]
        )
        lines = (tmp_path / "fit3.components.csv").read_text().strip().splitlines()
        assert lines[0] == "component,x,value"
        assert len(lines) == 1 + 10 * 200     # every component retained

    def test_deterministic_outputs_modulo_timestamp(self, tmp_path, gen_files):
        for name in ("r1", "r2"):
            run(
                ["fit", "--data", tmp_path / "train.csv", "--method", "stp",
                 "--lam", 15, "--a", 0.2, "--sigma", 0.8, "--out", tmp_path / name]
            )
        assert (
            (tmp_path / "r1.model.json").read_bytes()
            == (tmp_path / "r2.model.json").read_bytes()
        )
        m1 = json.loads((tmp_path / "r1.metrics.json").read_text())
        m2 = json.loads((tmp_path / "r2.metrics.json").read_text())
        m1["meta"].pop("created")
        m2["meta"].pop("created")
        m1["config"].pop("out")
        m2["config"].pop("out")
        assert m1 == m2

    def test_fusion_needs_val(self, tmp_path, gen_files):
        code = run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "fuse-areg",
             "--xi", 1, "--sigma", 0.8, "--out", tmp_path / "f"]
        )
        assert code == 2

    def test_fuse_eta_end_to_end(self, tmp_path, gen_files):
        run(["gen", "--n", 60, "--seed", 17, "--out", tmp_path / "val"])
        code = run(
            ["fit", "--data", tmp_path / "train.csv", "--val", tmp_path / "val.csv",
             "--method", "fuse-eta", "--gamma-grid", "0.1,1,10", "--sigma", 0.8,
             "--out", tmp_path / "fe"]
        )
        assert code == 0
        assert (tmp_path / "fe.trace.csv").exists()
        metrics = json.loads((tmp_path / "fe.metrics.json").read_text())
        assert "val" in metrics["metrics"]


class TestPredict:
    def test_round_trip_matches_model(self, tmp_path, gen_files):
        run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "lssvm",
             "--gamma", 2, "--sigma", 0.6, "--out", tmp_path / "m"]
        )
        code = run(
            ["predict", "--model", tmp_path / "m.model.json",
             "--data", tmp_path / "train.csv", "--target", "y",
             "--out", tmp_path / "preds.csv"]
        )
        assert code == 0
        preds = [
            float(l.split(",")[0])
            for l in (tmp_path / "preds.csv").read_text().strip().splitlines()[1:]
        ]
        model = load_model(tmp_path / "m.model.json")
        assert np.abs(np.asarray(preds) - model.predict(model.X)).max() <= 1e-10

    def test_constant_model_predicts_intercept(self, tmp_path):
        import csv

        csv_path = tmp_path / "c.csv"
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "y"])
            for i in range(12):
                w.writerow([i / 12, 5.0])
        run(
            ["fit", "--data", csv_path, "--method", "lssvm", "--gamma", 1,
             "--sigma", 0.5, "--out", tmp_path / "cm"]
        )
        run(
            ["predict", "--model", tmp_path / "cm.model.json", "--data", csv_path,
             "--target", "y", "--out", tmp_path / "cp.csv"]
        )
        preds = [
            float(l) for l in (tmp_path / "cp.csv").read_text().strip().splitlines()[1:]
        ]
        assert np.allclose(preds, 5.0, atol=1e-8)

    def test_empty_input_gives_empty_output(self, tmp_path, gen_files):
        run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "lssvm",
             "--gamma", 1, "--sigma", 0.5, "--out", tmp_path / "m2"]
        )
        empty = tmp_path / "empty.csv"
        empty.write_text("x1,x2,x3,x4,x5,x6,x7,x8,x9,x10\n")
        code = run(
            ["predict", "--model", tmp_path / "m2.model.json", "--data", empty,
             "--out", tmp_path / "ep.csv"]
        )
        assert code == 0
        assert (tmp_path / "ep.csv").read_text().strip() == "prediction"

    def test_dimension_mismatch_names_expected(self, tmp_path, gen_files, capsys):
        run(
            ["fit", "--data", tmp_path / "train.csv", "--method", "lssvm",
             "--gamma", 1, "--sigma", 0.5, "--out", tmp_path / "m3"]
        )
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,x2\n0.1,0.2\n")
        code = run(
            ["predict", "--model", tmp_path / "m3.model.json", "--data", bad,
             "--out", tmp_path / "bp.csv"]
        )
        assert code == 2
        assert "D=10" in capsys.readouterr().err

    def test_missing_file_is_io_error(self, tmp_path):
        code = run(
            ["predict", "--model", tmp_path / "nope.json", "--data", tmp_path / "x.csv",
             "--out", tmp_path / "o.csv"]
        )
        assert code == 4
