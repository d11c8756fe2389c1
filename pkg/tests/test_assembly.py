from itertools import combinations

import numpy as np
import pytest

from immunokit.assembly import (
    DEFAULT_ALLELE_MAP,
    SupertypeRequirement,
    assemble,
    coverage_report,
)
from immunokit.pipeline import SelectorScore, score_epitopes
from immunokit.seqdata import AMINO_ACIDS, EpitopeRecord

from conftest import benchmark_records


def make_score(peptide, allele, priority):
    rec = EpitopeRecord(peptide, allele, 10.0, 50.0, 1, score=None)
    return SelectorScore(epitope=rec, priority=priority, components={})


def random_pool(rng, n):
    alleles = list(DEFAULT_ALLELE_MAP) + ["HLA-C*07:01"]  # one unmapped allele
    pool = []
    peptides = set()
    while len(pool) < n:
        pep = "".join(rng.choice(list(AMINO_ACIDS), size=9))
        if pep in peptides:
            continue
        peptides.add(pep)
        allele = alleles[int(rng.integers(0, len(alleles)))]
        pool.append(make_score(pep, allele, float(np.round(rng.uniform(0, 10), 3))))
    return pool


def exhaustive_best(pool, req, k):
    """Brute-force objective: max coverage count, then max total priority."""
    best = (-1, -np.inf)
    for size in range(1, min(k, len(pool)) + 1):
        for subset in combinations(pool, size):
            peps = [s.epitope.peptide for s in subset]
            if len(set(peps)) != len(peps):
                continue
            covered = {req.supertype_of(s.epitope.hla_allele) for s in subset}
            covered &= set(req.required)
            objective = (len(covered), sum(s.priority for s in subset))
            if objective > best:
                best = objective
    return best


class TestAssembleExamples:
    def test_forced_gap(self):
        pool = [make_score("ACDEFGHIK", "HLA-A*02:01", 5.0),
                make_score("CDEFGHIKL", "HLA-A*02:01", 4.0)]
        req = SupertypeRequirement(required=frozenset({"A2", "A3", "B7"}))
        candidate = assemble(pool, req, k=3)
        assert candidate.missing == {"A3", "B7"}
        assert set(candidate.coverage) == {"A2"}

    def test_benchmark_full_coverage(self, benchmark_pool):
        # A*02:01 -> A2, B*07:02 -> B7, A*03:01 -> A3: all three covered
        scores = score_epitopes(None, benchmark_pool)
        req = SupertypeRequirement()
        candidate = assemble(scores, req, k=3)
        assert candidate.missing == set()
        assert len(candidate.epitopes) == 3
        peps = set(candidate.peptides())
        assert {"YLQPRTFLL", "TTDPNFLGRY", "NQKLIANQF"} == peps

    def test_k1_takes_best_coverage_pick(self, benchmark_pool):
        # brute force over all k=1 choices: greedy maximizes coverage, then
        # priority
        scores = score_epitopes(None, benchmark_pool)
        req = SupertypeRequirement()
        candidate = assemble(scores, req, k=1)
        assert len(candidate.epitopes) == 1
        assert len(candidate.missing) == len(req.required) - 1
        best_priority = max(s.priority for s in scores)
        assert candidate.epitopes[0].priority == best_priority

    def test_total_priority_invariant(self, benchmark_pool):
        scores = score_epitopes(None, benchmark_pool)
        candidate = assemble(scores, SupertypeRequirement(), k=4)
        assert abs(candidate.total_priority
                   - sum(s.priority for s in candidate.epitopes)) < 1e-9

    def test_validation(self):
        with pytest.raises(ValueError, match="empty"):
            assemble([], SupertypeRequirement(), k=1)
        with pytest.raises(ValueError, match="k must be"):
            assemble([make_score("ACDEFGHIK", "HLA-A*02:01", 1.0)],
                     SupertypeRequirement(), k=0)


class TestGreedyOptimality:
    def test_matches_exhaustive_on_200_random_pools(self):
        rng = np.random.default_rng(42)
        req = SupertypeRequirement()
        for trial in range(200):
            pool = random_pool(rng, int(rng.integers(1, 9)))
            k = int(rng.integers(1, 5))
            candidate = assemble(pool, req, k)
            covered = len(set(candidate.coverage))
            greedy_obj = (covered, candidate.total_priority)
            best_obj = exhaustive_best(pool, req, k)
            assert greedy_obj[0] == best_obj[0], f"trial {trial}: coverage"
            assert abs(greedy_obj[1] - best_obj[1]) < 1e-9, f"trial {trial}: priority"

    def test_never_exceeds_k_never_duplicates(self):
        rng = np.random.default_rng(43)
        req = SupertypeRequirement()
        for trial in range(100):
            pool = random_pool(rng, int(rng.integers(1, 12)))
            k = int(rng.integers(1, 6))
            candidate = assemble(pool, req, k)
            assert len(candidate.epitopes) <= k
            peps = candidate.peptides()
            assert len(peps) == len(set(peps))

    def test_adding_epitope_never_increases_missing(self):
        # monotone coverage: a larger pool never covers fewer supertypes
        # (the particular covered set may shift when k is tight)
        rng = np.random.default_rng(44)
        req = SupertypeRequirement()
        for trial in range(50):
            pool = random_pool(rng, int(rng.integers(1, 8)))
            k = int(rng.integers(1, 5))
            base_missing = assemble(pool, req, k).missing
            extra = random_pool(rng, 1)
            grown_missing = assemble(pool + extra, req, k).missing
            assert len(grown_missing) <= len(base_missing)


class TestCoverageReport:
    def test_full_coverage_no_missing_rows(self):
        scores = score_epitopes(None, benchmark_records())
        req = SupertypeRequirement()
        candidate = assemble(scores, req, k=3)
        text = coverage_report(candidate, req)
        assert "MISSING" not in text
        assert "YLQPRTFLL" in text
        assert "total_priority" in text

    def test_all_missing_when_nothing_covers(self):
        pool = [make_score("ACDEFGHIK", "HLA-C*07:01", 1.0)]  # unmapped allele
        req = SupertypeRequirement()
        candidate = assemble(pool, req, k=1)
        text = coverage_report(candidate, req)
        assert text.count("MISSING") == len(req.required)

    def test_uncoverable_reporting(self):
        req = SupertypeRequirement(required=frozenset({"A2", "A24"}))
        assert req.uncoverable() == {"A24"}
