"""Multi-epitope candidate assembly under HLA-supertype coverage.

Selection is greedy and coverage-first: while slots remain, pick the
highest-priority epitope that covers a still-uncovered required supertype;
once every coverable supertype is handled, fill remaining slots by priority.
Each epitope is restricted by exactly one allele, so the greedy choice is
provably optimal for the (coverage count, then total priority) objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .pipeline import SelectorScore

# Editable allele -> supertype table seeded with common class I supertype
# members; extend it for other cohorts.
DEFAULT_ALLELE_MAP = {
    "HLA-A*02:01": "A2",
    "HLA-A*02:02": "A2",
    "HLA-A*02:06": "A2",
    "HLA-A*68:02": "A2",
    "HLA-A*03:01": "A3",
    "HLA-A*11:01": "A3",
    "HLA-A*31:01": "A3",
    "HLA-A*33:01": "A3",
    "HLA-A*68:01": "A3",
    "HLA-B*07:02": "B7",
    "HLA-B*35:01": "B7",
    "HLA-B*51:01": "B7",
    "HLA-B*53:01": "B7",
    "HLA-B*54:01": "B7",
}

DEFAULT_REQUIRED = frozenset({"A2", "A3", "B7"})


@dataclass
class SupertypeRequirement:
    required: frozenset[str] = DEFAULT_REQUIRED
    allele_map: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_ALLELE_MAP))

    def __post_init__(self):
        self.required = frozenset(self.required)
        if not self.required:
            raise ValueError("required supertype set is empty")

    def supertype_of(self, allele: str) -> str | None:
        return self.allele_map.get(allele)

    def uncoverable(self) -> set[str]:
        """Required supertypes no allele in the map can provide."""
        reachable = set(self.allele_map.values())
        return set(self.required) - reachable


@dataclass
class VaccineCandidate:
    epitopes: list  # selected SelectorScore entries, in pick order
    coverage: dict[str, list[int]]  # supertype -> indices into epitopes
    missing: set[str]
    total_priority: float

    def peptides(self) -> list[str]:
        return [s.epitope.peptide for s in self.epitopes]

    def to_dict(self) -> dict:
        return {
            "epitopes": [
                {
                    "peptide": s.epitope.peptide,
                    "hla_allele": s.epitope.hla_allele,
                    "priority": s.priority,
                }
                for s in self.epitopes
            ],
            "coverage": {k: v for k, v in sorted(self.coverage.items())},
            "missing": sorted(self.missing),
            "total_priority": self.total_priority,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def assemble(pool: list[SelectorScore], req: SupertypeRequirement, k: int) -> VaccineCandidate:
    """Pick up to k epitopes, covering required supertypes first.

    Ties break lexicographically by peptide; a peptide is never selected
    twice. Supertypes left uncovered by the selection are listed in
    `missing`.
    """
    if not pool:
        raise ValueError("empty epitope pool")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")

    ranked = sorted(pool, key=lambda s: (-s.priority, s.epitope.peptide))
    chosen: list[SelectorScore] = []
    chosen_peptides: set[str] = set()
    covered: set[str] = set()

    def supertype(score: SelectorScore) -> str | None:
        return req.supertype_of(score.epitope.hla_allele)

    # coverage pass: best epitope covering any still-uncovered supertype
    while len(chosen) < k:
        pick = next(
            (s for s in ranked
             if s.epitope.peptide not in chosen_peptides
             and supertype(s) in (set(req.required) - covered)),
            None,
        )
        if pick is None:
            break
        chosen.append(pick)
        chosen_peptides.add(pick.epitope.peptide)
        covered.add(supertype(pick))

    # fill pass: best remaining epitopes regardless of coverage
    for s in ranked:
        if len(chosen) >= k:
            break
        if s.epitope.peptide in chosen_peptides:
            continue
        chosen.append(s)
        chosen_peptides.add(s.epitope.peptide)

    coverage: dict[str, list[int]] = {}
    for i, s in enumerate(chosen):
        st = supertype(s)
        if st in req.required:
            coverage.setdefault(st, []).append(i)
    missing = set(req.required) - set(coverage)
    total = float(sum(s.priority for s in chosen))
    return VaccineCandidate(epitopes=chosen, coverage=coverage, missing=missing,
                            total_priority=total)


def coverage_report(candidate: VaccineCandidate, req: SupertypeRequirement) -> str:
    """Aligned plain-text table: one row per required supertype."""
    rows = []
    for st in sorted(req.required):
        if st in candidate.coverage:
            idx = candidate.coverage[st][0]
            score = candidate.epitopes[idx]
            rows.append((st, score.epitope.peptide, score.epitope.hla_allele,
                         f"{score.priority:.4f}"))
        else:
            rows.append((st, "MISSING", "-", "-"))
    headers = ("supertype", "peptide", "allele", "priority")
    widths = [max(len(headers[c]), max(len(r[c]) for r in rows)) for c in range(4)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    lines.append(f"total_priority: {candidate.total_priority:.4f}")
    return "\n".join(lines) + "\n"
