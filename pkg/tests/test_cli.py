import json
import os

import numpy as np
import pytest

from qepitope import cli
from qepitope.datasets import bundled_path
from qepitope.encode import load_feature_table, split_indices
from qepitope.qkernel import read_kernel_dump

SAMPLE = bundled_path("sample_epitopes.csv")
SYNTH = bundled_path("synthetic_separable.csv")


def run(*argv):
    return cli.main([str(a) for a in argv])


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def small_angles(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (12, 2))
    y = np.where(X[:, 0] > 0, 1, -1)
    y[:2] = [1, -1]
    p = tmp_path / "angles.csv"
    p.write_text("x0,x1,label\n" + "".join(f"{float(a)!r},{float(b)!r},{l}\n" for (a, b), l in zip(X, y)))
    return str(p)


class TestConfig:
    def test_seed_required(self, capsys):
        assert run("train", "--data", SAMPLE) == 2
        assert "seed" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path, capsys):
        assert run("kernel", "--data", tmp_path / "nope.csv", "--seed", 1) == 2
        assert "not found" in capsys.readouterr().err

    def test_bad_shots_flag(self):
        with pytest.raises(SystemExit) as info:
            run("train", "--seed", 1, "--shots", "lots")
        assert info.value.code == 2

    def test_precedence(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps({"seed": 3, "depth": 1, "model": "vqc", "max_epochs": 9}))
        args = cli.build_parser().parse_args(["train", "--config", str(cfg_path), "--depth", "2"])
        cfg = cli.resolve_config(args)
        assert (cfg.seed, cfg.depth, cfg.model, cfg.max_epochs) == (3, 2, "vqc", 9)
        assert cfg.n_qubits == 2 and cfg.C == 1.0

    def test_unknown_config_key(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps({"seed": 3, "colour": "red"}))
        assert run("train", "--config", cfg_path) == 2

    def test_invalid_json(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text("{not json")
        assert run("train", "--config", cfg_path) == 2

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
        cfg = cli.RunConfig(seed=5, model="vqc")
        assert cfg.run_dir() == os.path.join(str(tmp_path), "vqc-seed5")

    def test_validation(self):
        for bad in (dict(test_fraction=1.0), dict(C=0.0), dict(model="svm"), dict(model="vqc", n_qubits=1)):
            with pytest.raises(cli.ValidationError):
                cli.RunConfig(seed=1, **bad).validate()

    def test_infinite_C_echo(self):
        assert cli.RunConfig(seed=1, C=float("inf")).echo()["C"] == "inf"


class TestKernelCommand:
    def test_exact_dump(self, tmp_path, capsys):
        out = tmp_path / "k"
        assert run("kernel", "--seed", 2, "--out", out) == 0
        K = read_kernel_dump(out / "kernel.txt")
        np.testing.assert_array_equal(np.diag(K.values), 1.0)
        assert capsys.readouterr().out.startswith(f"t={K.size} mode=exact")

    def test_shots_repeatable(self, tmp_path):
        for d in ("a", "b"):
            assert run("kernel", "--seed", 2, "--shots", 64, "--out", tmp_path / d) == 0
        assert read(tmp_path / "a" / "kernel.txt") == read(tmp_path / "b" / "kernel.txt")

    def test_empty_dataset(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("sequence,label\n")
        assert run("kernel", "--seed", 1, "--data", p, "--out", tmp_path / "o") == 1

    def test_one_class(self, tmp_path):
        p = tmp_path / "one.csv"
        p.write_text("sequence,label\nACDE,1\nKKLL,1\nGGGG,1\nWWWW,1\n")
        assert run("kernel", "--seed", 1, "--data", p, "--out", tmp_path / "o") == 1

    def test_parse_error_exit(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("sequence,label\nACDE,1\nAC#Z,1\n")
        assert run("kernel", "--seed", 1, "--data", p, "--out", tmp_path / "o") == 2
        assert ":3:" in capsys.readouterr().err


class TestTrain:
    def test_qsvm_report(self, tmp_path):
        out = tmp_path / "q"
        assert run("train", "--model", "qsvm", "--shots", "exact", "--seed", 7, "--out", out) == 0
        rep = cli.RunReport.from_json((out / "report.json").read_text())
        e = rep.evaluation
        assert 0 <= e.acc <= 1 and 0 <= e.auc <= 1 and -1 <= e.mcc <= 1
        assert rep.artifacts["kernel_dump"] == "kernel.txt"
        assert (out / "model.txt").exists() and (out / "timings.json").exists()
        assert rep.config["seed"] == 7
        assert [r["acc"] for r in rep.reference_rows][-2:] == ["70%", "73%"]

    def test_vqc_one_epoch(self, tmp_path):
        out = tmp_path / "v"
        assert run("train", "--model", "vqc", "--epochs", 1, "--seed", 7, "--out", out) == 0
        lines = (out / "loss_trace.txt").read_text().splitlines()
        assert len(lines) == 1 and lines[0].startswith("1 ")

    def test_report_round_trip(self, tmp_path):
        out = tmp_path / "v"
        run("train", "--model", "vqc", "--epochs", 3, "--seed", 1, "--out", out)
        text = (out / "report.json").read_text()
        assert cli.RunReport.from_json(text).to_json() == text

    @pytest.mark.parametrize("model", ["qsvm", "vqc"])
    def test_deterministic(self, tmp_path, model):
        extra = ["--shots", 128] if model == "qsvm" else ["--epochs", 5, "--shots", 256]
        for d in ("a", "b"):
            assert run("train", "--model", model, "--seed", 11, "--out", tmp_path / d, *extra) == 0
        for name in os.listdir(tmp_path / "a"):
            if name == "report.json":
                a, b = (json.loads((tmp_path / d / name).read_text()) for d in ("a", "b"))
                a["config"].pop("output_dir"), b["config"].pop("output_dir")
                assert a == b
            elif name != "timings.json":
                assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name), name

    def test_report_reproducible_from_echo(self, tmp_path):
        out = tmp_path / "a"
        run("train", "--model", "qsvm", "--seed", 4, "--c", 2.5, "--out", out)
        echo = json.loads((out / "report.json").read_text())["config"]
        echo["output_dir"] = str(tmp_path / "b")
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(echo))
        assert run("train", "--config", cfg_path) == 0
        for name in ("model.txt", "kernel.txt"):
            assert read(out / name) == read(tmp_path / "b" / name)

    def test_angle_data_width_mismatch(self, tmp_path, small_angles):
        assert run("train", "--data", small_angles, "--qubits", 3, "--seed", 1, "--out", tmp_path / "o") == 2


class TestEval:
    def test_train_split_accuracy_reproduced(self, tmp_path, small_angles, capsys):
        out = tmp_path / "m"
        assert run("train", "--data", small_angles, "--seed", 3, "--c", "inf", "--out", out) == 0
        rep = cli.RunReport.from_json((out / "report.json").read_text())
        table = load_feature_table(small_angles)
        tr, _ = split_indices(table.y, 0.3, 3)
        sub = tmp_path / "train.csv"
        sub.write_text("x0,x1,label\n" + "".join(
            f"{float(table.X[i, 0])!r},{float(table.X[i, 1])!r},{table.y[i]}\n" for i in tr))
        capsys.readouterr()
        assert run("eval", out / "model.txt", "--data", sub, "--out", tmp_path / "e") == 0
        ev = cli.RunReport.from_json(capsys.readouterr().out)
        assert ev.evaluation.acc == pytest.approx(rep.train_accuracy, abs=1e-12)
        assert (tmp_path / "e" / "eval_report.json").exists()
        assert len(ev.reference_rows) == 11

    def test_peptide_model_on_peptides(self, tmp_path, capsys):
        out = tmp_path / "m"
        run("train", "--model", "vqc", "--epochs", 2, "--seed", 3, "--out", out)
        capsys.readouterr()
        assert run("eval", out / "model.txt", "--data", SAMPLE) == 0
        assert json.loads(capsys.readouterr().out)["model_kind"] == "vqc"

    def test_width_mismatch(self, tmp_path, small_angles):
        out = tmp_path / "m"
        run("train", "--data", small_angles, "--seed", 3, "--out", out)
        wide = tmp_path / "wide.csv"
        wide.write_text("x0,x1,x2,label\n0,0,0,1\n1,1,1,-1\n")
        assert run("eval", out / "model.txt", "--data", wide) == 2

    def test_kind_mismatch(self, tmp_path, small_angles):
        out = tmp_path / "m"
        run("train", "--data", small_angles, "--seed", 3, "--out", out)
        assert run("eval", out / "model.txt", "--data", SAMPLE) == 2

    def test_missing_model(self, tmp_path):
        assert run("eval", tmp_path / "none.txt", "--data", SAMPLE) == 2

    def test_corrupt_model(self, tmp_path):
        p = tmp_path / "model.txt"
        p.write_text("model = qsvm\nn_qubits = two\n")
        assert run("eval", p, "--data", SAMPLE) == 2


class TestReport:
    def test_one_run(self, tmp_path, capsys):
        run("train", "--model", "qsvm", "--seed", 1, "--out", tmp_path / "runs" / "q")
        capsys.readouterr()
        assert run("report", tmp_path / "runs") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["method", "ACC", "AUC", "MCC"]
        body = lines[2:]
        assert len(body) == 1 + 11
        assert body[0].startswith("qsvm [q]")
        assert any(line.startswith("VQC (reference) (2025)") and "0.148" in line for line in body)

    def test_corrupt_report_named(self, tmp_path, capsys):
        run("train", "--model", "qsvm", "--seed", 1, "--out", tmp_path / "runs" / "q")
        bad = tmp_path / "runs" / "broken"
        bad.mkdir()
        (bad / "report.json").write_text("{oops")
        capsys.readouterr()
        assert run("report", tmp_path / "runs") == 0
        captured = capsys.readouterr()
        assert "broken" in captured.err and "report.json" in captured.err
        assert "qsvm [q]" in captured.out

    def test_same_seed_same_rows(self, tmp_path, capsys):
        for d in ("a", "b"):
            run("train", "--model", "qsvm", "--seed", 9, "--out", tmp_path / "runs" / d)
        capsys.readouterr()
        run("report", tmp_path / "runs")
        rows = capsys.readouterr().out.splitlines()[2:4]
        assert rows[0].split()[2:] == rows[1].split()[2:]

    def test_empty_dir(self, tmp_path):
        assert run("report", tmp_path) == 1
