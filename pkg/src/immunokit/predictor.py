"""Multi-task epitope predictor: a small self-attention trunk with three
heads that jointly regress log10 binding affinity, classify immunogenicity,
and regress the conserved fraction.

The trunk is embedding + sinusoidal positions + one residual attention block
+ a tanh dense layer, mean-pooled over positions. Activations are smooth so
finite-difference gradient checks stay tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import (
    Dense,
    Dropout,
    Embedding,
    ParamStore,
    SelfAttention,
    Tanh,
    load_checkpoint,
    save_checkpoint,
    sinusoidal_positions,
    stable_sigmoid,
)
from .seqdata import AMINO_ACIDS, MAX_PEPTIDE_LENGTH, Dataset, EpitopeRecord, encode_peptides
from .training import LossWeights, TrainConfig, TrainReport, bce, clamp_probs, mse, run_training

EVAL_BATCH = 512


@dataclass
class Model1Output:
    """Per-peptide predictions of the three task heads."""

    affinity_pred: float  # log10(nM); lower = stronger binding
    immunogenicity_prob: float
    conservation_pred: float  # fraction in [0, 1]


def affinity_target(record: EpitopeRecord) -> float:
    return float(np.log10(record.affinity_nm))


def _targets(records: list[EpitopeRecord]):
    aff = np.array([affinity_target(r) for r in records])
    imm = np.array([float(r.immunogenic) for r in records])
    cons = np.array([r.conservation_pct / 100.0 for r in records])
    return aff, imm, cons


class Model1:
    """Trainable multi-task predictor over fixed-alphabet peptides."""

    MODEL_KIND = "model1"

    def __init__(self, dim: int = 32, heads: int = 2, max_len: int = MAX_PEPTIDE_LENGTH,
                 dropout: float = 0.1, seed: int = 0):
        self.dim = dim
        self.heads = heads
        self.max_len = max_len
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        self.emb = Embedding(self.params, "emb", len(AMINO_ACIDS), dim, rng)
        self.attn = SelfAttention(self.params, "attn", dim, heads, rng)
        self.trunk = Dense(self.params, "trunk", dim, dim, rng)
        self.act = Tanh()
        self.drop_in = Dropout(dropout)
        self.drop_trunk = Dropout(dropout)
        self.head_aff = Dense(self.params, "head.aff", dim, 1, rng)
        self.head_imm = Dense(self.params, "head.imm", dim, 1, rng)
        self.head_cons = Dense(self.params, "head.cons", dim, 1, rng)
        self.positions = sinusoidal_positions(max_len, dim)
        self._pool_len = None
        self._weights = LossWeights()

    def meta(self) -> dict:
        return {"model": self.MODEL_KIND, "dim": self.dim, "heads": self.heads,
                "max_len": self.max_len}

    def save(self, path, adam=None):
        save_checkpoint(self.params, path, adam=adam, meta=self.meta())

    @classmethod
    def from_checkpoint(cls, path) -> "Model1":
        store, _, meta = load_checkpoint(path)
        model = cls(dim=meta["dim"], heads=meta["heads"], max_len=meta["max_len"],
                    dropout=0.0, seed=0)
        model.params.load_values({n: store[n].value for n in store.names()})
        model.params.step_count = store.step_count
        return model

    # -- array-level forward/backward ------------------------------------

    def forward_arrays(self, idx: np.ndarray, train: bool = False, rng=None):
        n, length = idx.shape
        if length > self.max_len:
            raise ValueError(f"peptide length {length} exceeds maximum {self.max_len}")
        h = self.emb.forward(idx) + self.positions[:length]
        h = self.drop_in.forward(h, train, rng)
        h = self.attn.forward(h)
        h = self.trunk.forward(h)
        h = self.act.forward(h)
        h = self.drop_trunk.forward(h, train, rng)
        pooled = h.mean(axis=1)
        self._pool_len = length
        aff = self.head_aff.forward(pooled)[:, 0]
        imm_logit = self.head_imm.forward(pooled)[:, 0]
        cons_logit = self.head_cons.forward(pooled)[:, 0]
        return aff, imm_logit, cons_logit

    def backward_arrays(self, d_aff, d_imm_logit, d_cons_logit):
        d_pooled = (
            self.head_aff.backward(d_aff[:, None])
            + self.head_imm.backward(d_imm_logit[:, None])
            + self.head_cons.backward(d_cons_logit[:, None])
        )
        length = self._pool_len
        d_h = np.repeat(d_pooled[:, None, :], length, axis=1) / length
        d_h = self.drop_trunk.backward(d_h)
        d_h = self.act.backward(d_h)
        d_h = self.trunk.backward(d_h)
        d_h = self.attn.backward(d_h)
        d_h = self.drop_in.backward(d_h)
        self.emb.backward(d_h)

    def loss_and_grads(self, records: list[EpitopeRecord], weights: LossWeights,
                       train: bool = False, rng=None) -> float:
        """Weighted multi-task loss; accumulates parameter gradients."""
        idx = encode_peptides([r.peptide for r in records])
        t_aff, t_imm, t_cons = _targets(records)
        n = len(records)

        aff, imm_logit, cons_logit = self.forward_arrays(idx, train, rng)
        p = stable_sigmoid(imm_logit)
        p_clamped = clamp_probs(p)
        c = stable_sigmoid(cons_logit)

        l_aff = mse(aff, t_aff)
        l_imm = bce(t_imm, p)
        l_cons = mse(c, t_cons)
        total = weights.alpha * l_aff + weights.beta * l_imm + weights.gamma * l_cons

        d_aff = weights.alpha * 2.0 * (aff - t_aff) / n
        unclipped = (p == p_clamped)
        d_imm_logit = np.where(unclipped, weights.beta * (p - t_imm) / n, 0.0)
        d_cons_logit = weights.gamma * 2.0 * (c - t_cons) / n * c * (1.0 - c)
        self.backward_arrays(d_aff, d_imm_logit, d_cons_logit)
        return total

    # -- record-level API --------------------------------------------------

    def forward(self, peptides: list[str], train: bool = False, rng=None) -> list[Model1Output]:
        """Batch prediction; peptides are grouped by length internally."""
        if not peptides:
            raise ValueError("empty peptide batch")
        by_length: dict[int, list[int]] = {}
        for i, p in enumerate(peptides):
            if len(p) > self.max_len:
                raise ValueError(f"peptide {p!r} longer than maximum {self.max_len}")
            by_length.setdefault(len(p), []).append(i)
        out: list[Model1Output | None] = [None] * len(peptides)
        for _, positions in sorted(by_length.items()):
            idx = encode_peptides([peptides[i] for i in positions])
            aff, imm_logit, cons_logit = self.forward_arrays(idx, train, rng)
            prob = clamp_probs(stable_sigmoid(imm_logit))
            cons = stable_sigmoid(cons_logit)
            for j, i in enumerate(positions):
                out[i] = Model1Output(float(aff[j]), float(prob[j]), float(cons[j]))
        return out

    # -- training protocol -------------------------------------------------

    def train_batch(self, records, rng) -> float:
        return self.loss_and_grads(records, self._weights, train=True, rng=rng)

    def evaluate(self, records) -> tuple[float, float]:
        total_loss = 0.0
        correct = 0
        for start in range(0, len(records), EVAL_BATCH):
            chunk = records[start:start + EVAL_BATCH]
            idx = encode_peptides([r.peptide for r in chunk])
            t_aff, t_imm, t_cons = _targets(chunk)
            aff, imm_logit, cons_logit = self.forward_arrays(idx, train=False)
            p = stable_sigmoid(imm_logit)
            c = stable_sigmoid(cons_logit)
            loss = (self._weights.alpha * mse(aff, t_aff)
                    + self._weights.beta * bce(t_imm, p)
                    + self._weights.gamma * mse(c, t_cons))
            total_loss += loss * len(chunk)
            correct += int(np.sum((p >= 0.5).astype(int) == t_imm.astype(int)))
        n = len(records)
        return total_loss / n, correct / n


def multitask_loss(outputs: list[Model1Output], targets: list[EpitopeRecord],
                   weights: LossWeights) -> tuple[float, tuple[float, float, float]]:
    """Weighted sum of the three task losses over a prediction batch."""
    if not outputs:
        raise ValueError("empty batch")
    if len(outputs) != len(targets):
        raise ValueError(f"batch size mismatch: {len(outputs)} outputs vs {len(targets)} targets")
    t_aff, t_imm, t_cons = _targets(targets)
    aff = np.array([o.affinity_pred for o in outputs])
    prob = np.array([o.immunogenicity_prob for o in outputs])
    cons = np.array([o.conservation_pred for o in outputs])
    l_aff = mse(aff, t_aff)
    l_imm = bce(t_imm, prob)
    l_cons = mse(cons, t_cons)
    total = weights.alpha * l_aff + weights.beta * l_imm + weights.gamma * l_cons
    return total, (l_aff, l_imm, l_cons)


def train_model1(data: Dataset, cfg: TrainConfig, dim: int = 32, heads: int = 2,
                 max_len: int = MAX_PEPTIDE_LENGTH) -> tuple[Model1, TrainReport]:
    """Train a fresh Model1 on a split dataset; returns the model (restored
    to its best checkpoint) and the per-epoch report."""
    model = Model1(dim=dim, heads=heads, max_len=max_len, dropout=cfg.dropout, seed=cfg.seed)
    model._weights = cfg.loss_weights()
    report = run_training(model, data, cfg)
    return model, report
