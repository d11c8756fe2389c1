import pytest

from immunokit.seqdata import EpitopeRecord

# Benchmark set of five well-characterized CD8+ epitopes with precomputed
# immunogenicity scores; YLQPRTFLL (A*02:01, 35.7 nM, 94.5% conserved) is the
# strongest, the two ~0.88-0.89 entries the weakest.
BENCHMARK_EPITOPES = [
    ("YLQPRTFLL", "HLA-A*02:01", 35.7, 94.5, 1, 0.98),
    ("TTDPNFLGRY", "HLA-B*07:02", 22.1, 90.0, 1, 0.92),
    ("NQKLIANQF", "HLA-A*03:01", 40.0, 88.0, 1, 0.91),
    ("LSPRWYFYI", "HLA-A*02:01", 55.0, 85.0, 1, 0.89),
    ("SPRWYFYLL", "HLA-A*02:01", 60.0, 84.0, 1, 0.88),
]


def benchmark_records():
    return [
        EpitopeRecord(peptide=p, hla_allele=a, affinity_nm=aff,
                      conservation_pct=cons, immunogenic=y, score=s)
        for p, a, aff, cons, y, s in BENCHMARK_EPITOPES
    ]


@pytest.fixture
def benchmark_pool():
    return benchmark_records()
