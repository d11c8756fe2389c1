import json

import numpy as np
import pytest

from immunokit.cli import main
from immunokit.seqdata import write_records

from conftest import benchmark_records


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def benchmark_csv(tmp_path):
    path = tmp_path / "benchmark.csv"
    write_records(benchmark_records(), path)
    return path


class TestGen:
    def test_writes_requested_rows(self, tmp_path):
        out = tmp_path / "corpus.csv"
        assert run("gen", "--n", 200, "--seed", 7, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 201  # header + rows

    def test_missing_out_is_usage_error(self):
        assert run("gen", "--n", 10, "--seed", 1) == 2

    def test_missing_seed_is_usage_error(self, tmp_path):
        assert run("gen", "--n", 10, "--out", tmp_path / "x.csv") == 2

    def test_rerun_identical(self, tmp_path):
        out = tmp_path / "corpus.csv"
        run("gen", "--n", 150, "--seed", 3, "--out", out)
        first = out.read_bytes()
        snapshot = tmp_path / "corpus.cfg"
        assert snapshot.exists()
        assert run("gen", "--config", snapshot) == 0
        assert out.read_bytes() == first

    def test_bad_n_is_validation_error(self, tmp_path):
        assert run("gen", "--n", 2, "--seed", 1, "--out", tmp_path / "x.csv") == 2


class TestTrain:
    def test_model1_run_and_artifacts(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 200, "--seed", 7, "--out", corpus)
        out = tmp_path / "run"
        code = run("train", "--model", "model1", "--data", corpus, "--out", out,
                   "--seed", 7, "--epochs", 3)
        assert code == 0
        report = (out / "report.csv").read_text().splitlines()
        assert report[0] == "epoch,train_loss,val_loss,train_acc,val_acc"
        assert len(report) - 1 <= 3
        assert (out / "checkpoint" / "manifest.json").exists()
        assert (out / "summary.json").exists()
        assert (out / "run.cfg").exists()

    def test_epoch_budget_respected(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 120, "--seed", 2, "--out", corpus)
        out = tmp_path / "run"
        run("train", "--model", "cnn", "--data", corpus, "--out", out,
            "--seed", 2, "--epochs", 100, "--patience", 3, "--tol", "1e9")
        report = (out / "report.csv").read_text().splitlines()
        assert len(report) - 1 <= 100

    def test_zero_epochs_usage_error(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 60, "--seed", 2, "--out", corpus)
        assert run("train", "--model", "cnn", "--data", corpus,
                   "--out", tmp_path / "run", "--seed", 2, "--epochs", 0) == 2

    def test_rerun_identical_report(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 150, "--seed", 5, "--out", corpus)
        out = tmp_path / "run"
        run("train", "--model", "model1", "--data", corpus, "--out", out,
            "--seed", 5, "--epochs", 2)
        first_report = (out / "report.csv").read_bytes()
        first_params = (out / "checkpoint" / "params.bin").read_bytes()
        assert run("train", "--config", out / "run.cfg") == 0
        assert (out / "report.csv").read_bytes() == first_report
        assert (out / "checkpoint" / "params.bin").read_bytes() == first_params

    def test_diverging_run_exits_3(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 100, "--seed", 1, "--out", corpus)
        with np.errstate(all="ignore"):
            code = run("train", "--model", "model1", "--data", corpus,
                       "--out", tmp_path / "run", "--seed", 1, "--epochs", 2,
                       "--learning-rate", "1e200")
        assert code == 3

    def test_gan_writes_candidates_fasta(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 600, "--seed", 3, "--out", corpus)
        out = tmp_path / "gan"
        assert run("train", "--model", "gan", "--data", corpus, "--out", out,
                   "--seed", 3, "--epochs", 2, "--candidates", 4) == 0
        fasta = (out / "candidates.fasta").read_text().splitlines()
        assert sum(1 for l in fasta if l.startswith(">")) == 4
        assert all("realism=" in l for l in fasta if l.startswith(">"))


class TestEval:
    def test_from_counts(self, tmp_path):
        out = tmp_path / "ev"
        assert run("eval", "--from-counts", "2434,2448,53,65", "--out", out) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert abs(metrics["accuracy"] - 0.9764) < 1e-4
        assert abs(metrics["precision"] - 0.9787) < 1e-4
        assert abs(metrics["recall"] - 0.9740) < 1e-4
        assert abs(metrics["f1"] - 0.9763) < 1e-4

    def test_confusion_counts_sum_to_test_size(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 200, "--seed", 7, "--out", corpus)
        out = tmp_path / "run"
        run("train", "--model", "cnn", "--data", corpus, "--out", out,
            "--seed", 7, "--epochs", 2)
        ev = tmp_path / "ev"
        assert run("eval", "--checkpoint", out / "checkpoint", "--data", corpus,
                   "--split", "test", "--seed", 7, "--out", ev) == 0
        metrics = json.loads((ev / "metrics.json").read_text())
        assert metrics["tp"] + metrics["tn"] + metrics["fp"] + metrics["fn"] == 40
        assert (ev / "roc.csv").exists() and (ev / "pr.csv").exists()

    def test_needs_inputs(self, tmp_path):
        assert run("eval", "--out", tmp_path / "ev") == 2


class TestRank:
    def test_benchmark_ordering(self, tmp_path, benchmark_csv):
        out = tmp_path / "ranked.csv"
        assert run("rank", "--data", benchmark_csv, "--out", out) == 0
        rows = [line.split(",")[0] for line in out.read_text().splitlines()[1:]]
        assert rows[0] == "YLQPRTFLL"
        assert set(rows[-2:]) == {"LSPRWYFYI", "SPRWYFYLL"}

    def test_empty_pool_exit_2(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("peptide,hla_allele,affinity_nm,conservation_pct,immunogenic\n")
        assert run("rank", "--data", empty, "--out", tmp_path / "r.csv") == 2

    def test_unscored_pool_needs_selector_checkpoint(self, tmp_path):
        corpus = tmp_path / "corpus.csv"
        run("gen", "--n", 120, "--seed", 4, "--out", corpus)
        # without a selector, unscored records are a validation error
        assert run("rank", "--data", corpus, "--out", tmp_path / "r.csv") == 2
        # with a trained autoencoder checkpoint the pool gets scored
        out = tmp_path / "ae"
        assert run("train", "--model", "autoencoder", "--data", corpus,
                   "--out", out, "--seed", 4, "--epochs", 3) == 0
        assert run("rank", "--data", corpus, "--checkpoint", out / "checkpoint",
                   "--out", tmp_path / "r.csv") == 0
        rows = (tmp_path / "r.csv").read_text().splitlines()
        assert len(rows) == 121


class TestAssemble:
    def test_full_coverage(self, tmp_path, benchmark_csv, capsys):
        out = tmp_path / "candidate.json"
        assert run("assemble", "--data", benchmark_csv, "--k", 4, "--out", out) == 0
        printed = capsys.readouterr().out
        assert "MISSING" not in printed
        candidate = json.loads(out.read_text())
        assert candidate["missing"] == []
        assert len(candidate["epitopes"]) == 4

    def test_k_respected(self, tmp_path, benchmark_csv):
        out = tmp_path / "candidate.json"
        run("assemble", "--data", benchmark_csv, "--k", 2, "--out", out)
        candidate = json.loads(out.read_text())
        assert len(candidate["epitopes"]) == 2


class TestSimulate:
    def test_cd8_fixed_point(self, tmp_path):
        out = tmp_path / "flat.csv"
        assert run("simulate", "--model", "cd8", "--v0", 0, "--i0", 0,
                   "--days", 2, "--out", out) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "t,T,I,E,V"
        first = rows[1].split(",")[1:]
        assert all(row.split(",")[1:] == first for row in rows[1:])

    def test_convergence_flag(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        assert run("simulate", "--model", "cd8", "--days", 5, "--step", 0.02,
                   "--check-convergence", "--out", out) == 0
        line = next(l for l in capsys.readouterr().out.splitlines()
                    if "convergence ratio" in l)
        ratio = float(line.rsplit(":", 1)[1])
        assert 12.0 <= ratio <= 20.0

    def test_svg_emitted(self, tmp_path):
        out = tmp_path / "traj.csv"
        run("simulate", "--model", "prolif", "--antigen", 0.5, "--days", 2,
            "--out", out, "--svg")
        svg = out.with_suffix(".svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg


class TestSweep:
    def test_two_h_curves_ordering(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run("sweep", "--h", 0.01, "--h", 0.1, "--rho", 1, "--days", 7,
                   "--out", out) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "antigen,final_T_h0.01,final_T_h0.1"
        for row in rows[1:]:
            _, low_h, high_h = (float(x) for x in row.split(","))
            assert low_h >= high_h  # lower h responds at lower antigen

    def test_single_h_schema(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run("sweep", "--h", 0.01, "--out", out)
        assert out.read_text().splitlines()[0] == "antigen,final_T"

    def test_rerun_identical(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run("sweep", "--h", 0.01, "--h", 0.1, "--out", out, "--svg")
        first_csv = out.read_bytes()
        first_svg = out.with_suffix(".svg").read_bytes()
        assert run("sweep", "--config", out.with_suffix(".cfg")) == 0
        assert out.read_bytes() == first_csv
        assert out.with_suffix(".svg").read_bytes() == first_svg
