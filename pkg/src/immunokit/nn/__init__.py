from .params import AdamConfig, Param, ParamStore, adam_step, uniform_init
from .layers import (
    Conv1d,
    Dense,
    Dropout,
    Embedding,
    Layer,
    SelfAttention,
    Softmax,
    Tanh,
    LAYER_KINDS,
    make_layer,
    sinusoidal_positions,
    softmax_backward,
    stable_sigmoid,
    stable_softmax,
)
from .gradcheck import grad_check
from .checkpoint import FORMAT_TAG, load_checkpoint, save_checkpoint

__all__ = [
    "AdamConfig", "Param", "ParamStore", "adam_step", "uniform_init",
    "Conv1d", "Dense", "Dropout", "Embedding", "Layer", "SelfAttention",
    "Softmax", "Tanh", "LAYER_KINDS", "make_layer", "sinusoidal_positions",
    "softmax_backward", "stable_sigmoid", "stable_softmax",
    "grad_check", "FORMAT_TAG", "load_checkpoint", "save_checkpoint",
]
