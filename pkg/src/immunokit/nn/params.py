"""Parameter storage and the Adam update rule.

All learnable state lives in a :class:`ParamStore`: a flat, name-addressed
collection of float64 arrays, each carrying its gradient accumulator and the
two Adam moment buffers. Layers register parameters here and hold references;
the optimizer walks the store.

A store is confined to one training thread at a time; read-only forward
passes over a frozen store may run concurrently, and the store may be
handed between threads between optimizer steps.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamConfig:
    """Hyperparameters of the adaptive-moment update."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.beta1 < 1:
            raise ValueError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0 <= self.beta2 < 1:
            raise ValueError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class Param:
    """One named tensor with gradient and first/second moment buffers."""

    value: np.ndarray
    grad: np.ndarray = None
    m: np.ndarray = None
    v: np.ndarray = None

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.m is None:
            self.m = np.zeros_like(self.value)
        if self.v is None:
            self.v = np.zeros_like(self.value)


@dataclass
class ParamStore:
    """Name -> Param map plus the optimizer step counter."""

    entries: dict[str, Param] = field(default_factory=dict)
    step_count: int = 0

    def add(self, name: str, value: np.ndarray) -> Param:
        if name in self.entries:
            raise ValueError(f"parameter {name!r} already registered")
        p = Param(np.asarray(value, dtype=np.float64))
        self.entries[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self) -> list[str]:
        return sorted(self.entries)

    def zero_grads(self):
        for p in self.entries.values():
            p.grad[...] = 0.0

    def num_coords(self) -> int:
        return sum(p.value.size for p in self.entries.values())

    def snapshot_values(self) -> dict[str, np.ndarray]:
        """Deep copy of parameter values only (no grads or moments)."""
        return {name: p.value.copy() for name, p in self.entries.items()}

    def load_values(self, values: dict[str, np.ndarray]):
        for name, arr in values.items():
            if name not in self.entries:
                raise KeyError(f"unknown parameter {name!r}")
            p = self.entries[name]
            if p.value.shape != arr.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: store has {p.value.shape}, got {arr.shape}"
                )
            p.value[...] = arr

    def clone(self) -> "ParamStore":
        return copy.deepcopy(self)


def adam_step(store: ParamStore, cfg: AdamConfig):
    """Apply one Adam update to every parameter in the store.

    Moment recurrences with decay rates beta1/beta2, bias-corrected by
    1/(1 - beta^t), then value -= lr * m_hat / (sqrt(v_hat) + eps).
    Gradients are zeroed afterwards and the step counter advances.
    """
    t = store.step_count + 1
    b1, b2 = cfg.beta1, cfg.beta2
    for name, p in store.entries.items():
        if not np.all(np.isfinite(p.grad)):
            raise FloatingPointError(f"non-finite gradient in parameter {name!r}")
        g = p.grad
        p.m = b1 * p.m + (1.0 - b1) * g
        p.v = b2 * p.v + (1.0 - b2) * g * g
        m_hat = p.m / (1.0 - b1**t)
        v_hat = p.v / (1.0 - b2**t)
        p.value -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        p.grad = np.zeros_like(p.grad)
    store.step_count = t


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)
