"""Downstream pipeline models: a convolutional protective/non-protective
classifier, a multi-task autoencoder that prioritizes epitopes, and an
adversarial peptide generator/refiner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import (
    Conv1d,
    Dense,
    Dropout,
    Embedding,
    ParamStore,
    Tanh,
    adam_step,
    load_checkpoint,
    save_checkpoint,
    stable_sigmoid,
    stable_softmax,
    softmax_backward,
)
from .seqdata import (
    AMINO_ACIDS,
    Dataset,
    EpitopeRecord,
    MAX_PEPTIDE_LENGTH,
    decode_indices,
    encode_peptides,
    write_fasta,
)
from .training import TrainConfig, TrainReport, bce, clamp_probs, mse, run_training

VOCAB = len(AMINO_ACIDS)
EVAL_BATCH = 512


def one_hot(idx: np.ndarray) -> np.ndarray:
    out = np.zeros(idx.shape + (VOCAB,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


# ---------------------------------------------------------------------------
# CNN protective / non-protective classifier
# ---------------------------------------------------------------------------

class CnnClassifier:
    """Embedding -> 1-D convolution -> tanh -> mean pool -> sigmoid head."""

    MODEL_KIND = "cnn"

    def __init__(self, dim: int = 16, channels: int = 16, kernel: int = 3,
                 max_len: int = MAX_PEPTIDE_LENGTH, dropout: float = 0.1, seed: int = 0):
        self.dim = dim
        self.channels = channels
        self.kernel = kernel
        self.max_len = max_len
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        self.emb = Embedding(self.params, "emb", VOCAB, dim, rng)
        self.conv = Conv1d(self.params, "conv", dim, channels, kernel, rng)
        self.act = Tanh()
        self.drop = Dropout(dropout)
        self.head = Dense(self.params, "head", channels, 1, rng)
        self._pool_len = None

    def meta(self) -> dict:
        return {"model": self.MODEL_KIND, "dim": self.dim, "channels": self.channels,
                "kernel": self.kernel, "max_len": self.max_len}

    def save(self, path, adam=None):
        save_checkpoint(self.params, path, adam=adam, meta=self.meta())

    @classmethod
    def from_checkpoint(cls, path) -> "CnnClassifier":
        store, _, meta = load_checkpoint(path)
        model = cls(dim=meta["dim"], channels=meta["channels"], kernel=meta["kernel"],
                    max_len=meta["max_len"], dropout=0.0, seed=0)
        model.params.load_values({n: store[n].value for n in store.names()})
        model.params.step_count = store.step_count
        return model

    def forward_logits(self, idx: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        if idx.shape[1] > self.max_len:
            raise ValueError(f"peptide length {idx.shape[1]} exceeds maximum {self.max_len}")
        h = self.emb.forward(idx)
        h = self.conv.forward(h)
        h = self.act.forward(h)
        h = self.drop.forward(h, train, rng)
        self._pool_len = h.shape[1]
        pooled = h.mean(axis=1)
        return self.head.forward(pooled)[:, 0]

    def backward_logits(self, d_logit: np.ndarray):
        d_pooled = self.head.backward(d_logit[:, None])
        d_h = np.repeat(d_pooled[:, None, :], self._pool_len, axis=1) / self._pool_len
        d_h = self.drop.backward(d_h)
        d_h = self.act.backward(d_h)
        d_h = self.conv.backward(d_h)
        self.emb.backward(d_h)

    def predict_prob(self, peptides: list[str]) -> np.ndarray:
        idx = encode_peptides(peptides)
        return clamp_probs(stable_sigmoid(self.forward_logits(idx)))

    def train_batch(self, records, rng) -> float:
        idx = encode_peptides([r.peptide for r in records])
        y = np.array([float(r.immunogenic) for r in records])
        z = self.forward_logits(idx, train=True, rng=rng)
        p = stable_sigmoid(z)
        loss = bce(y, p)
        self.backward_logits((p - y) / len(records))
        return loss

    def evaluate(self, records) -> tuple[float, float]:
        total, correct = 0.0, 0
        for start in range(0, len(records), EVAL_BATCH):
            chunk = records[start:start + EVAL_BATCH]
            idx = encode_peptides([r.peptide for r in chunk])
            y = np.array([float(r.immunogenic) for r in chunk])
            p = stable_sigmoid(self.forward_logits(idx))
            total += bce(y, p) * len(chunk)
            correct += int(np.sum((p >= 0.5).astype(int) == y.astype(int)))
        return total / len(records), correct / len(records)


def train_cnn_classifier(data: Dataset, cfg: TrainConfig, dim: int = 16,
                         channels: int = 16, kernel: int = 3) -> tuple[CnnClassifier, TrainReport]:
    """Train the binary response classifier on the dataset's label channel."""
    model = CnnClassifier(dim=dim, channels=channels, kernel=kernel,
                          dropout=cfg.dropout, seed=cfg.seed)
    report = run_training(model, data, cfg)
    return model, report


# ---------------------------------------------------------------------------
# Multi-task autoencoder selector
# ---------------------------------------------------------------------------

class AutoencoderSelector:
    """One-hot peptide -> latent code -> reconstruction, with an
    immunogenicity head read off the latent code.

    Loss is cfg.alpha * reconstruction MSE + cfg.beta * immunogenicity BCE
    (the same weighted-sum shape the predictor uses). `linear=True` removes
    the tanh nonlinearities, giving an exactly identity-capable codec when
    latent_dim equals the input width.
    """

    MODEL_KIND = "autoencoder"

    def __init__(self, length: int, latent_dim: int, linear: bool = False, seed: int = 0,
                 recon_weight: float = 1.0, imm_weight: float = 1.0):
        self.length = length
        self.input_dim = length * VOCAB
        if latent_dim > self.input_dim:
            raise ValueError(f"latent_dim {latent_dim} exceeds input width {self.input_dim}")
        self.latent_dim = latent_dim
        self.linear = linear
        self.recon_weight = recon_weight
        self.imm_weight = imm_weight
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        self.enc = Dense(self.params, "enc", self.input_dim, latent_dim, rng)
        self.enc_act = Tanh()
        self.dec = Dense(self.params, "dec", latent_dim, self.input_dim, rng)
        self.head = Dense(self.params, "head", latent_dim, 1, rng)

    def meta(self) -> dict:
        return {"model": self.MODEL_KIND, "length": self.length,
                "latent_dim": self.latent_dim, "linear": self.linear,
                "recon_weight": self.recon_weight, "imm_weight": self.imm_weight}

    def save(self, path, adam=None):
        save_checkpoint(self.params, path, adam=adam, meta=self.meta())

    @classmethod
    def from_checkpoint(cls, path) -> "AutoencoderSelector":
        store, _, meta = load_checkpoint(path)
        model = cls(length=meta["length"], latent_dim=meta["latent_dim"],
                    linear=meta["linear"], seed=0,
                    recon_weight=meta.get("recon_weight", 1.0),
                    imm_weight=meta.get("imm_weight", 1.0))
        model.params.load_values({n: store[n].value for n in store.names()})
        model.params.step_count = store.step_count
        return model

    def _flatten(self, peptides: list[str]) -> np.ndarray:
        idx = encode_peptides(peptides)
        if idx.shape[1] != self.length:
            raise ValueError(f"selector expects length-{self.length} peptides, got {idx.shape[1]}")
        return one_hot(idx).reshape(len(peptides), self.input_dim)

    def forward_parts(self, x: np.ndarray):
        z_pre = self.enc.forward(x)
        z = z_pre if self.linear else self.enc_act.forward(z_pre)
        recon = self.dec.forward(z)
        imm_logit = self.head.forward(z)[:, 0]
        return z, recon, imm_logit

    def backward_parts(self, d_recon, d_imm_logit):
        d_z = self.dec.backward(d_recon) + self.head.backward(d_imm_logit[:, None])
        if not self.linear:
            d_z = self.enc_act.backward(d_z)
        self.enc.backward(d_z)

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> float:
        n = x.shape[0]
        _, recon, imm_logit = self.forward_parts(x)
        p = stable_sigmoid(imm_logit)
        l_rec = mse(recon, x)
        l_imm = bce(y, p)
        loss = self.recon_weight * l_rec + self.imm_weight * l_imm
        d_recon = self.recon_weight * 2.0 * (recon - x) / recon.size
        d_imm = self.imm_weight * (p - y) / n
        self.backward_parts(d_recon, d_imm)
        return loss

    def reconstruction_error(self, peptides: list[str]) -> np.ndarray:
        """Per-peptide mean squared reconstruction error."""
        x = self._flatten(peptides)
        _, recon, _ = self.forward_parts(x)
        return np.mean((recon - x) ** 2, axis=1)

    def immunogenicity_prob(self, peptides: list[str]) -> np.ndarray:
        x = self._flatten(peptides)
        _, _, imm_logit = self.forward_parts(x)
        return clamp_probs(stable_sigmoid(imm_logit))

    # training protocol
    def train_batch(self, records, rng) -> float:
        x = self._flatten([r.peptide for r in records])
        y = np.array([float(r.immunogenic) for r in records])
        return self.loss_and_grads(x, y)

    def evaluate(self, records) -> tuple[float, float]:
        total, correct = 0.0, 0
        for start in range(0, len(records), EVAL_BATCH):
            chunk = records[start:start + EVAL_BATCH]
            x = self._flatten([r.peptide for r in chunk])
            y = np.array([float(r.immunogenic) for r in chunk])
            _, recon, imm_logit = self.forward_parts(x)
            p = stable_sigmoid(imm_logit)
            loss = self.recon_weight * mse(recon, x) + self.imm_weight * bce(y, p)
            total += loss * len(chunk)
            correct += int(np.sum((p >= 0.5).astype(int) == y.astype(int)))
        return total / len(records), correct / len(records)


def train_autoencoder_selector(data: Dataset, latent_dim: int, cfg: TrainConfig,
                               linear: bool = False) -> tuple[AutoencoderSelector, TrainReport]:
    """Train the selector on reconstruction + immunogenicity jointly."""
    if not data.has_split:
        raise ValueError("training requires a split dataset")
    length = len(data.records[0].peptide)
    model = AutoencoderSelector(length=length, latent_dim=latent_dim, linear=linear,
                                seed=cfg.seed, recon_weight=cfg.alpha, imm_weight=cfg.beta)
    report = run_training(model, data, cfg)
    return model, report


# ---------------------------------------------------------------------------
# Epitope scoring
# ---------------------------------------------------------------------------

DEFAULT_SCORE_WEIGHTS = {
    "immunogenicity": 1.0,
    "conservation": 0.5,
    "reconstruction_error": 0.25,
}


@dataclass
class SelectorScore:
    """One epitope with its priority and the named score components."""

    epitope: EpitopeRecord
    priority: float
    components: dict[str, float] = field(default_factory=dict)


def score_epitopes(selector: AutoencoderSelector | None, records: list[EpitopeRecord],
                   weights: dict[str, float] | None = None) -> list[SelectorScore]:
    """Rank epitopes by weighted score, best first.

    priority = w_imm * immunogenicity + w_cons * conservation_fraction
             - w_rec * normalized reconstruction error

    With a trained selector, immunogenicity comes from its latent head and
    the reconstruction error is normalized by the pool maximum. Without one,
    each record must carry a precomputed `score` (used as the immunogenicity
    component) and the reconstruction term is zero. Ties break
    lexicographically by peptide.
    """
    if not records:
        raise ValueError("empty record list")
    weights = dict(DEFAULT_SCORE_WEIGHTS if weights is None else weights)
    for key, val in weights.items():
        if val < 0:
            raise ValueError(f"weight {key!r} must be non-negative, got {val}")
    if all(v == 0 for v in weights.values()):
        raise ValueError("at least one weight must be positive")
    w_imm = weights.get("immunogenicity", 0.0)
    w_cons = weights.get("conservation", 0.0)
    w_rec = weights.get("reconstruction_error", 0.0)

    peptides = [r.peptide for r in records]
    if selector is None:
        missing = [r.peptide for r in records if r.score is None]
        if missing:
            raise ValueError(
                f"records without scores need a trained selector (first: {missing[0]!r})"
            )
        imm = np.array([r.score for r in records])
        rec_norm = np.zeros(len(records))
    else:
        imm = selector.immunogenicity_prob(peptides)
        rec = selector.reconstruction_error(peptides)
        peak = rec.max()
        rec_norm = rec / peak if peak > 0 else np.zeros_like(rec)

    cons = np.array([r.conservation_pct / 100.0 for r in records])
    scored = []
    for i, r in enumerate(records):
        components = {
            "immunogenicity": float(imm[i]),
            "conservation": float(cons[i]),
            "reconstruction_error": float(rec_norm[i]),
        }
        priority = w_imm * imm[i] + w_cons * cons[i] - w_rec * rec_norm[i]
        scored.append(SelectorScore(epitope=r, priority=float(priority), components=components))
    scored.sort(key=lambda s: (-s.priority, s.epitope.peptide))
    return scored


def write_scores_csv(scores: list[SelectorScore], path):
    lines = ["peptide,priority,imm,cons,rec_err"]
    for s in scores:
        lines.append(",".join([
            s.epitope.peptide,
            repr(s.priority),
            repr(s.components["immunogenicity"]),
            repr(s.components["conservation"]),
            repr(s.components["reconstruction_error"]),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Adversarial peptide generator
# ---------------------------------------------------------------------------

COLLAPSE_PROBE = 256
COLLAPSE_MIN_DISTINCT = 8


@dataclass
class GanSample:
    peptide: str
    realism: float  # discriminator output in (0, 1)


@dataclass
class GanReport:
    gen_loss: list[float] = field(default_factory=list)
    disc_loss: list[float] = field(default_factory=list)


class Generator:
    """Noise -> per-position residue distributions.

    Training samples one residue per position (straight-through estimator:
    the backward pass treats the one-hot sample as the softmax probabilities);
    generation takes the per-position argmax.
    """

    def __init__(self, length: int, noise_dim: int = 16, hidden: int = 32, seed: int = 0):
        self.length = length
        self.noise_dim = noise_dim
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        self.fc1 = Dense(self.params, "g.fc1", noise_dim, hidden, rng)
        self.act = Tanh()
        self.fc2 = Dense(self.params, "g.fc2", hidden, length * VOCAB, rng)
        self._probs = None

    def probs(self, z: np.ndarray) -> np.ndarray:
        h = self.act.forward(self.fc1.forward(z))
        logits = self.fc2.forward(h).reshape(len(z), self.length, VOCAB)
        self._probs = stable_softmax(logits)
        return self._probs

    def sample(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One-hot samples, one categorical draw per position."""
        probs = self.probs(z)
        cdf = np.cumsum(probs, axis=-1)
        u = rng.random(probs.shape[:2] + (1,))
        idx = np.sum(u > cdf, axis=-1)
        return one_hot(idx)

    def generate(self, z: np.ndarray) -> list[str]:
        probs = self.probs(z)
        return [decode_indices(row) for row in probs.argmax(axis=-1)]

    def backward(self, d_onehot: np.ndarray):
        probs = self._probs
        d_logits = softmax_backward(probs, d_onehot)  # straight-through
        d_h = self.fc2.backward(d_logits.reshape(len(probs), -1))
        self.fc1.backward(self.act.backward(d_h))


class Discriminator:
    """One-hot peptide -> realism probability."""

    def __init__(self, length: int, hidden: int = 32, seed: int = 1):
        self.length = length
        self.input_dim = length * VOCAB
        self.params = ParamStore()
        rng = np.random.default_rng(seed)
        self.fc1 = Dense(self.params, "d.fc1", self.input_dim, hidden, rng)
        self.act = Tanh()
        self.fc2 = Dense(self.params, "d.fc2", hidden, 1, rng)

    def forward(self, onehot: np.ndarray) -> np.ndarray:
        x = onehot.reshape(len(onehot), self.input_dim)
        h = self.act.forward(self.fc1.forward(x))
        return stable_sigmoid(self.fc2.forward(h)[:, 0])

    def backward_from_probs(self, probs: np.ndarray, d_prob_logit: np.ndarray) -> np.ndarray:
        """Backward from d(loss)/d(logit); returns gradient w.r.t. the one-hot input."""
        d_h = self.fc2.backward(d_prob_logit[:, None])
        d_x = self.fc1.backward(self.act.backward(d_h))
        return d_x.reshape(-1, self.length, VOCAB)

    def realism(self, peptides: list[str]) -> np.ndarray:
        return clamp_probs(self.forward(one_hot(encode_peptides(peptides))))


@dataclass
class GanModel:
    generator: Generator
    discriminator: Discriminator
    report: GanReport

    @property
    def generator_params(self) -> ParamStore:
        return self.generator.params

    @property
    def discriminator_params(self) -> ParamStore:
        return self.discriminator.params


def train_gan(positives: list[str], cfg: TrainConfig, noise_dim: int = 16,
              hidden: int = 32, gen_steps: int = 2) -> GanModel:
    """Alternating adversarial training on immunogenic peptides.

    Requires >= 200 uniform-length positives. Aborts if a 256-sample probe of
    the generator yields fewer than 8 distinct peptides (mode collapse).
    """
    if len(positives) < 200:
        raise ValueError(f"need at least 200 positive peptides, got {len(positives)}")
    length = len(positives[0])
    if any(len(p) != length for p in positives):
        raise ValueError("positive peptides must share one length")

    rng = np.random.default_rng(cfg.seed)
    gen = Generator(length, noise_dim=noise_dim, hidden=hidden, seed=cfg.seed)
    disc = Discriminator(length, hidden=hidden, seed=cfg.seed + 1)
    adam = cfg.adam()
    report = GanReport()
    real_onehot = one_hot(encode_peptides(positives))

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(positives))
        d_losses, g_losses = [], []
        for start in range(0, len(positives), cfg.batch_size):
            take = order[start:start + cfg.batch_size]
            n = len(take)

            # discriminator step: real vs freshly sampled fakes
            real = real_onehot[take]
            z = rng.standard_normal((n, noise_dim))
            fake = gen.sample(z, rng)
            disc.params.zero_grads()
            p_real = disc.forward(real)
            loss_real = bce(np.ones(n), p_real)
            disc.backward_from_probs(p_real, (p_real - 1.0) / n)
            p_fake = disc.forward(fake)
            loss_fake = bce(np.zeros(n), p_fake)
            disc.backward_from_probs(p_fake, p_fake / n)
            d_loss = 0.5 * (loss_real + loss_fake)
            if not np.isfinite(d_loss):
                raise FloatingPointError(f"non-finite discriminator loss at epoch {epoch}")
            adam_step(disc.params, adam)

            # generator step(s): fool the (frozen) discriminator
            g_loss = 0.0
            for _ in range(gen_steps):
                z = rng.standard_normal((n, noise_dim))
                gen.params.zero_grads()
                fake = gen.sample(z, rng)
                p = disc.forward(fake)
                g_loss = bce(np.ones(n), p)
                disc.params.zero_grads()  # discard D grads from this pass
                d_fake = disc.backward_from_probs(p, (p - 1.0) / n)
                disc.params.zero_grads()
                gen.backward(d_fake)
                if not np.isfinite(g_loss):
                    raise FloatingPointError(f"non-finite generator loss at epoch {epoch}")
                adam_step(gen.params, adam)
            d_losses.append(d_loss)
            g_losses.append(g_loss)

        report.disc_loss.append(float(np.mean(d_losses)))
        report.gen_loss.append(float(np.mean(g_losses)))

        probe_z = np.random.default_rng(cfg.seed + 7000 + epoch).standard_normal(
            (COLLAPSE_PROBE, noise_dim))
        distinct = len(set(gen.generate(probe_z)))
        if distinct < COLLAPSE_MIN_DISTINCT:
            raise RuntimeError(
                f"mode collapse at epoch {epoch}: {distinct} distinct peptides "
                f"in a {COLLAPSE_PROBE}-sample probe"
            )

    return GanModel(generator=gen, discriminator=disc, report=report)


def generate_candidates(gan: GanModel, n: int, seed: int) -> list[GanSample]:
    """Draw n peptides and attach discriminator realism, best first."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    z = np.random.default_rng(seed).standard_normal((n, gan.generator.noise_dim))
    peptides = gan.generator.generate(z)
    realism = gan.discriminator.realism(peptides)
    samples = [GanSample(p, float(r)) for p, r in zip(peptides, realism)]
    samples.sort(key=lambda s: (-s.realism, s.peptide))
    return samples


def candidates_to_fasta(samples: list[GanSample]) -> str:
    entries = [(f"candidate_{i} realism={s.realism:.6f}", s.peptide)
               for i, s in enumerate(samples)]
    return write_fasta(entries)
