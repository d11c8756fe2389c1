"""Peptide dataset handling: parsing, serialization, splitting, synthesis.

Peptides are plain uppercase strings over the 20 canonical one-letter amino
acid codes; validation happens at every ingestion boundary. An
:class:`EpitopeRecord` bundles one peptide with its HLA restriction, binding
affinity (nM, lower = stronger), conservation percentage, and binary
immunogenicity label. A :class:`Dataset` is an ordered record list plus an
optional train/test index split.

Every operation here is a pure function of its inputs plus an explicit
seed; there is no shared mutable state, so concurrent calls are safe.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
AA_INDEX = {aa: i for i, aa in enumerate(AMINO_ACIDS)}

DEFAULT_PEPTIDE_LENGTH = 9  # canonical CD8+ epitope length
MIN_PEPTIDE_LENGTH = 8
MAX_PEPTIDE_LENGTH = 15

# synthetic affinity brackets (nM): strong binders well below weak ones
POSITIVE_AFFINITY_RANGE = (10.0, 100.0)
NEGATIVE_AFFINITY_RANGE = (500.0, 50000.0)

DEFAULT_ALLELES = ("HLA-A*02:01", "HLA-A*03:01", "HLA-B*07:02")

# residues enriched in synthetic positives (anchor-like hydrophobic set);
# the enrichment scales with |signal - 0.5| and vanishes at signal 0.5
ANCHOR_RESIDUES = "FILMVY"
ANCHOR_TILT = 1.2

Peptide = str  # validated uppercase string over AMINO_ACIDS


def validate_peptide(text: str, where: str = "peptide") -> str:
    pep = text.strip().upper()
    if not pep:
        raise ValueError(f"{where}: empty peptide")
    for pos, ch in enumerate(pep, start=1):
        if ch not in AA_INDEX:
            raise ValueError(f"{where}: non-canonical residue {ch!r} at position {pos}")
    return pep


def encode_peptides(peptides: list[str]) -> np.ndarray:
    """Uniform-length peptide batch -> (N, L) int index array."""
    if not peptides:
        raise ValueError("empty peptide batch")
    length = len(peptides[0])
    if any(len(p) != length for p in peptides):
        raise ValueError("encode_peptides requires uniform-length peptides")
    return np.array([[AA_INDEX[ch] for ch in p] for p in peptides], dtype=np.int64)


def decode_indices(idx) -> str:
    return "".join(AMINO_ACIDS[i] for i in idx)


@dataclass
class EpitopeRecord:
    """One peptide with its HLA context and per-task targets."""

    peptide: str
    hla_allele: str
    affinity_nm: float
    conservation_pct: float
    immunogenic: int
    score: float | None = None

    def __post_init__(self):
        self.peptide = validate_peptide(self.peptide)
        if self.affinity_nm <= 0:
            raise ValueError(f"affinity_nm must be positive, got {self.affinity_nm}")
        if not 0.0 <= self.conservation_pct <= 100.0:
            raise ValueError(f"conservation_pct must be in [0, 100], got {self.conservation_pct}")
        if self.immunogenic not in (0, 1):
            raise ValueError(f"immunogenic label must be 0 or 1, got {self.immunogenic}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass
class Dataset:
    records: list[EpitopeRecord]
    train_idx: list[int] | None = None
    test_idx: list[int] | None = None

    @property
    def has_split(self) -> bool:
        return self.train_idx is not None and self.test_idx is not None

    def train_records(self) -> list[EpitopeRecord]:
        if not self.has_split:
            raise ValueError("dataset has no split")
        return [self.records[i] for i in self.train_idx]

    def test_records(self) -> list[EpitopeRecord]:
        if not self.has_split:
            raise ValueError("dataset has no split")
        return [self.records[i] for i in self.test_idx]

    def __len__(self) -> int:
        return len(self.records)


def parse_fasta(text: str) -> list[str]:
    """FASTA text -> peptides in entry order.

    Sequence lines are concatenated, whitespace-stripped, and upper-cased.
    """
    peptides = []
    current: list[str] | None = None

    def finish(index):
        seq = "".join(current)
        if not seq:
            raise ValueError(f"FASTA record {index}: empty sequence")
        peptides.append(validate_peptide(seq, where=f"FASTA record {index}"))

    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if current is not None:
                finish(len(peptides))
            current = []
        else:
            if current is None:
                raise ValueError(f"FASTA record 0: sequence data before any '>' header")
            current.append("".join(line.split()))
    if current is not None:
        finish(len(peptides))
    return peptides


def write_fasta(entries: list[tuple[str, str]]) -> str:
    """(header, sequence) pairs -> FASTA text."""
    out = []
    for header, seq in entries:
        out.append(f">{header}\n{seq}\n")
    return "".join(out)


_REQUIRED_COLUMNS = ("peptide", "hla_allele", "affinity_nm", "conservation_pct", "immunogenic")


def _record_from_mapping(row: dict, rowno: int) -> EpitopeRecord:
    for col in _REQUIRED_COLUMNS:
        if col not in row or row[col] in (None, ""):
            raise ValueError(f"row {rowno}: missing column {col!r}")
    try:
        affinity = float(row["affinity_nm"])
        conservation = float(row["conservation_pct"])
        immunogenic = int(row["immunogenic"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"row {rowno}: unparseable numeric field ({exc})") from None
    score = row.get("score")
    if score in (None, ""):
        score_val = None
    else:
        try:
            score_val = float(score)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"row {rowno}: unparseable numeric field ({exc})") from None
    try:
        return EpitopeRecord(
            peptide=str(row["peptide"]),
            hla_allele=str(row["hla_allele"]),
            affinity_nm=affinity,
            conservation_pct=conservation,
            immunogenic=immunogenic,
            score=score_val,
        )
    except ValueError as exc:
        raise ValueError(f"row {rowno}: {exc}") from None


def load_records(path, fmt: str | None = None) -> Dataset:
    """Read an unsplit dataset from CSV or JSON-lines (UTF-8).

    Format is inferred from the extension when not given. Row order is
    preserved; the first data row is row 1 in error messages.
    """
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unsupported format {fmt!r}, expected 'csv' or 'jsonl'")
    text = path.read_text(encoding="utf-8")
    records = []
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise ValueError("CSV file has no header row")
        missing = [c for c in _REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"CSV header missing column(s): {', '.join(missing)}")
        for rowno, row in enumerate(reader, start=1):
            records.append(_record_from_mapping(row, rowno))
    else:
        for rowno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"row {rowno}: invalid JSON ({exc})") from None
            records.append(_record_from_mapping(row, rowno))
    return Dataset(records)


def write_records(dataset: Dataset | list[EpitopeRecord], path, fmt: str | None = None):
    """Write records to CSV or JSON-lines; floats use repr for exact round-trip."""
    records = dataset.records if isinstance(dataset, Dataset) else dataset
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
    with_score = any(r.score is not None for r in records)
    if fmt == "csv":
        cols = list(_REQUIRED_COLUMNS) + (["score"] if with_score else [])
        lines = [",".join(cols)]
        for r in records:
            row = [r.peptide, r.hla_allele, repr(r.affinity_nm), repr(r.conservation_pct),
                   str(r.immunogenic)]
            if with_score:
                row.append("" if r.score is None else repr(r.score))
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "jsonl":
        lines = []
        for r in records:
            obj = {
                "peptide": r.peptide,
                "hla_allele": r.hla_allele,
                "affinity_nm": r.affinity_nm,
                "conservation_pct": r.conservation_pct,
                "immunogenic": r.immunogenic,
            }
            if r.score is not None:
                obj["score"] = r.score
            lines.append(json.dumps(obj, sort_keys=True))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unsupported format {fmt!r}, expected 'csv' or 'jsonl'")


def split_dataset(dataset: Dataset, train_fraction: float, seed: int) -> Dataset:
    """Deterministic shuffle-and-cut split; both sides are non-empty.

    Duplicate (peptide, allele) pairs are rejected here: a duplicate landing
    on both sides of the cut would leak test rows into training.
    """
    n = len(dataset.records)
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    seen = {}
    for i, r in enumerate(dataset.records):
        key = (r.peptide, r.hla_allele)
        if key in seen:
            raise ValueError(
                f"duplicate (peptide, allele) pair {key} at rows {seen[key]} and {i}"
            )
        seen[key] = i
    n_train = int(round(train_fraction * n))
    if n_train < 1 or n_train > n - 1:
        raise ValueError(
            f"train_fraction {train_fraction} leaves an empty split for {n} records"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    train_idx = sorted(int(i) for i in perm[:n_train])
    test_idx = sorted(int(i) for i in perm[n_train:])
    return Dataset(records=list(dataset.records), train_idx=train_idx, test_idx=test_idx)


def _residue_distribution(tilt: float) -> np.ndarray:
    """Per-residue sampling weights; anchors get weight exp(tilt)."""
    w = np.ones(len(AMINO_ACIDS))
    for aa in ANCHOR_RESIDUES:
        w[AA_INDEX[aa]] = np.exp(tilt)
    return w / w.sum()


def _random_peptide(rng: np.random.Generator, length: int, probs: np.ndarray | None = None) -> str:
    if probs is None:
        return decode_indices(rng.integers(0, len(AMINO_ACIDS), size=length))
    return decode_indices(rng.choice(len(AMINO_ACIDS), size=length, p=probs))


def _peptide_with_motif(rng: np.random.Generator, length: int, motif: str,
                        probs: np.ndarray | None = None) -> str:
    pos = int(rng.integers(0, length - len(motif) + 1))
    head = _random_peptide(rng, pos, probs)
    tail = _random_peptide(rng, length - pos - len(motif), probs)
    return head + motif + tail


def _peptide_without_motif(rng: np.random.Generator, length: int, motif: str,
                           probs: np.ndarray | None = None) -> str:
    while True:
        pep = _random_peptide(rng, length, probs)
        if motif not in pep:
            return pep


def generate_synthetic(n: int, motif: str, signal_strength: float, seed: int,
                       length: int = DEFAULT_PEPTIDE_LENGTH,
                       alleles: tuple[str, ...] = DEFAULT_ALLELES) -> Dataset:
    """Corpus with a planted immunogenic signal.

    Half the records are labeled immunogenic. A positive contains the motif
    with probability `signal_strength`, a negative with 1 - signal_strength.
    Background residues are also tilted: positives are enriched in anchor
    residues and negatives depleted, in proportion to signal_strength - 0.5,
    so at 0.5 the sequences carry no label information at all. Positives get
    stronger (lower-nM, log-uniform) affinities and higher conservation.
    (peptide, allele) pairs are unique so the corpus always splits cleanly.
    """
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    motif = validate_peptide(motif, where="motif")
    if len(motif) >= length:
        raise ValueError(f"motif length {len(motif)} must be below peptide length {length}")
    if not 0.0 <= signal_strength <= 1.0:
        raise ValueError(f"signal_strength must be in [0, 1], got {signal_strength}")

    rng = np.random.default_rng(seed)
    n_pos = n // 2
    lo_pos, hi_pos = np.log10(POSITIVE_AFFINITY_RANGE)
    lo_neg, hi_neg = np.log10(NEGATIVE_AFFINITY_RANGE)
    tilt = ANCHOR_TILT * (2.0 * signal_strength - 1.0)
    probs_pos = _residue_distribution(tilt)
    probs_neg = _residue_distribution(-tilt)

    records = []
    used = set()
    for i in range(n):
        label = 1 if i < n_pos else 0
        p_motif = signal_strength if label == 1 else 1.0 - signal_strength
        with_motif = rng.random() < p_motif
        probs = probs_pos if label == 1 else probs_neg
        allele = alleles[int(rng.integers(0, len(alleles)))]
        while True:
            if with_motif:
                pep = _peptide_with_motif(rng, length, motif, probs)
            else:
                pep = _peptide_without_motif(rng, length, motif, probs)
            if (pep, allele) not in used:
                break
        used.add((pep, allele))
        if label == 1:
            affinity = 10.0 ** rng.uniform(lo_pos, hi_pos)
            conservation = rng.uniform(75.0, 100.0)
        else:
            affinity = 10.0 ** rng.uniform(lo_neg, hi_neg)
            conservation = rng.uniform(30.0, 90.0)
        records.append(EpitopeRecord(
            peptide=pep,
            hla_allele=allele,
            affinity_nm=float(affinity),
            conservation_pct=float(conservation),
            immunogenic=label,
        ))
    order = rng.permutation(n)
    return Dataset([records[i] for i in order])
