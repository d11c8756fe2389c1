"""Shared training machinery: configs, loss primitives, report, and the
minibatch loop with early stopping used by all trainable models."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import AdamConfig, adam_step
from .seqdata import Dataset

PROB_CLAMP = 1e-12


@dataclass
class LossWeights:
    """Weights of the three task losses: affinity regression (alpha),
    immunogenicity classification (beta), conservation regression (gamma)."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be non-negative")
        if self.alpha + self.beta + self.gamma <= 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass
class TrainConfig:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dropout: float = 0.1
    epochs: int = 100
    batch_size: int = 32
    patience: int | None = 10  # None disables early stopping
    tol: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")

    def adam(self) -> AdamConfig:
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon)

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta, self.gamma)


def clamp_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)


def bce(labels, probs) -> float:
    """Mean binary cross-entropy; probabilities are clamped away from {0, 1}."""
    labels = np.asarray(labels, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if labels.size == 0:
        raise ValueError("empty batch")
    if labels.shape != probs.shape:
        raise ValueError(f"label/prob length mismatch: {labels.shape} vs {probs.shape}")
    p = clamp_probs(probs)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


def mse(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((pred - target) ** 2))


@dataclass
class TrainReport:
    """Per-epoch loss/accuracy series plus the best-checkpoint bookkeeping."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)
    stopped_epoch: int = -1
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    best_checkpoint: object = None  # ParamStore with the restored values

    def to_csv(self, path):
        lines = ["epoch,train_loss,val_loss,train_acc,val_acc"]
        for e in range(self.stopped_epoch + 1):
            lines.append(",".join([
                str(e), repr(self.train_loss[e]), repr(self.val_loss[e]),
                repr(self.train_acc[e]), repr(self.val_acc[e]),
            ]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def summary(self) -> dict:
        last = self.stopped_epoch
        return {
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "final_train_loss": self.train_loss[last],
            "final_val_loss": self.val_loss[last],
            "final_train_acc": self.train_acc[last],
            "final_val_acc": self.val_acc[last],
        }

    def write_summary(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_training(model, data: Dataset, cfg: TrainConfig) -> TrainReport:
    """Minibatch epochs with Adam and validation-loss early stopping.

    The model protocol: `params` (a ParamStore), `train_batch(records, rng)`
    returning the batch loss with gradients accumulated, and
    `evaluate(records)` returning (loss, accuracy) in eval mode.

    Stops once val_loss has failed to improve by more than cfg.tol for
    cfg.patience consecutive epochs, then restores the best checkpoint.
    """
    if not data.has_split:
        raise ValueError("training requires a split dataset (call split_dataset first)")
    train = data.train_records()
    val = data.test_records()
    rng = np.random.default_rng(cfg.seed)
    adam = cfg.adam()
    report = TrainReport()

    best_values = model.params.snapshot_values()
    stall_reference = float("inf")
    stalled = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train))
        for start in range(0, len(train), cfg.batch_size):
            batch = [train[i] for i in order[start:start + cfg.batch_size]]
            model.params.zero_grads()
            loss = model.train_batch(batch, rng)
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            adam_step(model.params, adam)

        tl, ta = model.evaluate(train)
        vl, va = model.evaluate(val)
        report.train_loss.append(tl)
        report.val_loss.append(vl)
        report.train_acc.append(ta)
        report.val_acc.append(va)
        report.stopped_epoch = epoch

        if vl < report.best_val_loss:
            report.best_val_loss = vl
            report.best_epoch = epoch
            best_values = model.params.snapshot_values()

        if cfg.patience is not None:
            if vl < stall_reference - cfg.tol:
                stall_reference = vl
                stalled = 0
            else:
                stalled += 1
                if stalled >= cfg.patience:
                    break

    model.params.load_values(best_values)
    report.best_checkpoint = model.params
    return report
