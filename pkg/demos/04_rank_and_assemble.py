"""Rank a small benchmark pool of CD8+ epitopes and assemble a candidate
covering the A2 / A3 / B7 HLA supertypes.

The pool carries precomputed immunogenicity scores, so no trained selector
is needed: priority = w_imm * score + w_cons * conservation - w_rec *
reconstruction error (zero here). Assembly is greedy and coverage-first.
"""

from immunokit import EpitopeRecord, SupertypeRequirement, assemble, coverage_report, score_epitopes

pool = [
    EpitopeRecord("YLQPRTFLL", "HLA-A*02:01", 35.7, 94.5, 1, score=0.98),
    EpitopeRecord("TTDPNFLGRY", "HLA-B*07:02", 22.1, 90.0, 1, score=0.92),
    EpitopeRecord("NQKLIANQF", "HLA-A*03:01", 40.0, 88.0, 1, score=0.91),
    EpitopeRecord("LSPRWYFYI", "HLA-A*02:01", 55.0, 85.0, 1, score=0.89),
    EpitopeRecord("SPRWYFYLL", "HLA-A*02:01", 60.0, 84.0, 1, score=0.88),
]

scores = score_epitopes(None, pool)
print("ranking (priority = immunogenicity + 0.5 * conservation):")
for s in scores:
    print(f"  {s.epitope.peptide:<11} priority={s.priority:.4f} "
          f"imm={s.components['immunogenicity']:.2f} "
          f"cons={s.components['conservation']:.3f}")

req = SupertypeRequirement()  # A2, A3, B7 with the bundled allele table
candidate = assemble(scores, req, k=4)
print("\nassembled candidate:")
print(coverage_report(candidate, req))
print("candidate JSON:")
print(candidate.to_json())
