import math

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from immunokit.seqdata import (
    Dataset,
    EpitopeRecord,
    generate_synthetic,
    load_records,
    parse_fasta,
    split_dataset,
    validate_peptide,
    write_records,
)


class TestPeptide:
    def test_normalizes_case(self):
        assert validate_peptide("ylqprtfll") == "YLQPRTFLL"

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="empty"):
            validate_peptide("   ")

    def test_rejects_non_canonical_with_position(self):
        with pytest.raises(ValueError, match="position 3"):
            validate_peptide("YLBPR")


class TestParseFasta:
    def test_single_entry(self):
        assert parse_fasta(">a\nYLQPRTFLL\n") == ["YLQPRTFLL"]

    def test_empty_input(self):
        assert parse_fasta("") == []

    def test_normalizes_whitespace_and_case(self):
        # oracle: manual normalization of the raw text
        raw = "ylq prt\nfll"
        expected = "".join(raw.upper().split())
        assert parse_fasta(">a\nylq prt\nfll") == [expected]

    def test_multiple_entries_preserve_order(self):
        text = ">one\nACDE\n>two\nFGHI\nKLMN\n"
        assert parse_fasta(text) == ["ACDE", "FGHIKLMN"]

    def test_sequence_before_header(self):
        with pytest.raises(ValueError, match="before any '>' header"):
            parse_fasta("YLQPRTFLL\n>late\nACDE\n")

    def test_bad_residue_reports_record(self):
        with pytest.raises(ValueError, match="record 1"):
            parse_fasta(">a\nACDE\n>b\nAXJE\n")


class TestRecordsIO:
    def test_record_invariants(self):
        with pytest.raises(ValueError, match="affinity_nm"):
            EpitopeRecord("ACDEF", "HLA-A*02:01", -1.0, 50.0, 1)
        with pytest.raises(ValueError, match="conservation_pct"):
            EpitopeRecord("ACDEF", "HLA-A*02:01", 10.0, 101.0, 1)
        with pytest.raises(ValueError, match="immunogenic"):
            EpitopeRecord("ACDEF", "HLA-A*02:01", 10.0, 50.0, 2)

    def test_csv_row_preserved(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text(
            "peptide,hla_allele,affinity_nm,conservation_pct,immunogenic\n"
            "YLQPRTFLL,HLA-A*02:01,35.7,94.5,1\n",
            encoding="utf-8",
        )
        data = load_records(path)
        rec = data.records[0]
        assert rec.peptide == "YLQPRTFLL"
        assert rec.hla_allele == "HLA-A*02:01"
        assert rec.affinity_nm == 35.7
        assert rec.conservation_pct == 94.5
        assert rec.immunogenic == 1

    def test_count_preserved(self, tmp_path):
        data = generate_synthetic(5, "LQR", 0.9, seed=1)
        path = tmp_path / "five.csv"
        write_records(data, path)
        assert len(load_records(path)) == 5

    def test_bad_row_names_row_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "peptide,hla_allele,affinity_nm,conservation_pct,immunogenic\n"
            "ACDEFACDE,HLA-A*02:01,10.0,50.0,1\n"
            "ACDEFACDF,HLA-A*02:01,-1,50.0,1\n",
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="row 2"):
            load_records(path)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "nohla.csv"
        path.write_text("peptide,affinity_nm,conservation_pct,immunogenic\nACDEF,1,1,1\n",
                        encoding="utf-8")
        with pytest.raises(ValueError, match="hla_allele"):
            load_records(path)

    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_round_trip_exact(self, tmp_path, fmt):
        data = generate_synthetic(64, "LQR", 0.7, seed=9)
        path = tmp_path / f"rt.{fmt}"
        write_records(data, path, fmt=fmt)
        back = load_records(path, fmt=fmt)
        for a, b in zip(data.records, back.records):
            assert a.peptide == b.peptide
            assert a.hla_allele == b.hla_allele
            # repr round-trips floats exactly
            assert a.affinity_nm == b.affinity_nm
            assert a.conservation_pct == b.conservation_pct
            assert a.immunogenic == b.immunogenic


class TestSplit:
    def test_80_20(self):
        data = generate_synthetic(100, "LQR", 0.9, seed=2)
        split = split_dataset(data, 0.8, seed=7)
        assert len(split.train_idx) == 80
        assert len(split.test_idx) == 20

    def test_deterministic(self):
        data = generate_synthetic(50, "LQR", 0.9, seed=2)
        a = split_dataset(data, 0.8, seed=5)
        b = split_dataset(data, 0.8, seed=5)
        assert a.train_idx == b.train_idx and a.test_idx == b.test_idx

    def test_every_record_lands_in_some_test_set(self):
        # brute force over seeds 1..50
        data = generate_synthetic(10, "LQR", 0.9, seed=2)
        seen = set()
        for seed in range(1, 51):
            seen.update(split_dataset(data, 0.8, seed=seed).test_idx)
        assert seen == set(range(10))

    def test_partition_property(self):
        rng = np.random.default_rng(0)
        for trial in range(25):
            n = int(rng.integers(4, 60))
            data = generate_synthetic(n, "LQR", 0.8, seed=trial)
            fraction = float(rng.uniform(0.2, 0.8))
            split = split_dataset(data, fraction, seed=trial)
            train, test = set(split.train_idx), set(split.test_idx)
            assert train | test == set(range(n))
            assert train & test == set()
            assert len(split.train_idx) == int(round(fraction * n))

    def test_rejects_bad_fraction(self):
        data = generate_synthetic(10, "LQR", 0.9, seed=2)
        with pytest.raises(ValueError, match="train_fraction"):
            split_dataset(data, 1.0, seed=1)

    def test_rejects_empty_side(self):
        data = generate_synthetic(4, "LQR", 0.9, seed=2)
        with pytest.raises(ValueError, match="empty split"):
            split_dataset(data, 0.01, seed=1)

    def test_rejects_duplicates(self):
        rec = EpitopeRecord("ACDEFGHIK", "HLA-A*02:01", 10.0, 50.0, 1)
        dup = EpitopeRecord("ACDEFGHIK", "HLA-A*02:01", 99.0, 10.0, 0)
        other = EpitopeRecord("KIHGFEDCA", "HLA-A*02:01", 10.0, 50.0, 1)
        with pytest.raises(ValueError, match="duplicate"):
            split_dataset(Dataset([rec, other, dup]), 0.5, seed=1)


class TestGenerateSynthetic:
    def test_degenerate_signal(self):
        data = generate_synthetic(1000, "LQR", 1.0, seed=4)
        for r in data.records:
            assert ("LQR" in r.peptide) == (r.immunogenic == 1)

    def test_signal_half_is_chance(self):
        data = generate_synthetic(1000, "LQR", 0.5, seed=11)
        table = np.zeros((2, 2))
        for r in data.records:
            table[r.immunogenic, int("LQR" in r.peptide)] += 1
        _, p, _, _ = chi2_contingency(table)
        assert p > 0.01

    def test_scale(self):
        data = generate_synthetic(5000, "LQR", 0.9, seed=7)
        split = split_dataset(data, 0.8, seed=7)
        assert len(split.test_idx) == 1000

    def test_affinity_brackets(self):
        data = generate_synthetic(400, "LQR", 0.9, seed=3)
        pos = [r.affinity_nm for r in data.records if r.immunogenic == 1]
        neg = [r.affinity_nm for r in data.records if r.immunogenic == 0]
        assert max(pos) <= 100.0 and min(pos) >= 10.0
        assert min(neg) >= 500.0 and max(neg) <= 50000.0

    def test_conservation_correlates_with_label(self):
        data = generate_synthetic(400, "LQR", 0.9, seed=3)
        pos = np.mean([r.conservation_pct for r in data.records if r.immunogenic == 1])
        neg = np.mean([r.conservation_pct for r in data.records if r.immunogenic == 0])
        assert pos > neg

    def test_reproducible_byte_for_byte(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records(generate_synthetic(200, "LQR", 0.7, seed=21), a)
        write_records(generate_synthetic(200, "LQR", 0.7, seed=21), b)
        assert a.read_bytes() == b.read_bytes()

    def test_motif_label_mutual_information_monotone(self):
        def mutual_information(data):
            table = np.zeros((2, 2))
            for r in data.records:
                table[r.immunogenic, int("LQR" in r.peptide)] += 1
            joint = table / table.sum()
            mi = 0.0
            for i in range(2):
                for j in range(2):
                    if joint[i, j] > 0:
                        mi += joint[i, j] * math.log(
                            joint[i, j] / (joint[i].sum() * joint[:, j].sum())
                        )
            return mi

        values = [mutual_information(generate_synthetic(2000, "LQR", s, seed=13))
                  for s in (0.5, 0.7, 0.9, 1.0)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_validation(self):
        with pytest.raises(ValueError, match="n >= 4"):
            generate_synthetic(3, "LQR", 0.9, seed=1)
        with pytest.raises(ValueError, match="empty"):
            generate_synthetic(10, "", 0.9, seed=1)
        with pytest.raises(ValueError, match="motif length"):
            generate_synthetic(10, "ACDEFGHIK", 0.9, seed=1, length=9)
