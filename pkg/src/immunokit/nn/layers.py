"""Dense-array layers with explicit forward/backward passes.

Every layer caches what its backward pass needs during forward; backward
returns the gradient with respect to the layer input and accumulates
parameter gradients into the shared :class:`~immunokit.nn.params.ParamStore`.
Activations are float64 throughout so finite-difference checks stay tight.
"""

from __future__ import annotations

import numpy as np

from .params import ParamStore, uniform_init


def stable_sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def stable_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, upstream: np.ndarray, axis: int = -1) -> np.ndarray:
    dot = np.sum(upstream * probs, axis=axis, keepdims=True)
    return probs * (upstream - dot)


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Classic sine/cosine positional table, shape (length, dim)."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / dim)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table


def _expect_shape(name: str, x: np.ndarray, expected: str, ok: bool):
    if not ok:
        raise ValueError(f"{name}: expected input shaped {expected}, got {x.shape}")


class Layer:
    """Common interface: forward(x, train, rng) then backward(upstream)."""

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, upstream):
        raise NotImplementedError

    def _require_cache(self, cache, what="forward state"):
        if cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called before forward ({what} missing)")
        return cache


class Embedding(Layer):
    """Index lookup into a (vocab, dim) table."""

    def __init__(self, store: ParamStore, prefix: str, vocab: int, dim: int, rng: np.random.Generator):
        self.w = store.add(f"{prefix}.weight", uniform_init(rng, (vocab, dim), vocab))
        self.vocab = vocab
        self.dim = dim
        self._idx = None

    def forward(self, idx, train=False, rng=None):
        idx = np.asarray(idx)
        if idx.ndim != 2:
            raise ValueError(f"embedding: expected index batch shaped (N, L), got {idx.shape}")
        if idx.min() < 0 or idx.max() >= self.vocab:
            raise ValueError(f"embedding: index out of range [0, {self.vocab})")
        self._idx = idx
        return self.w.value[idx]

    def backward(self, upstream):
        idx = self._require_cache(self._idx)
        np.add.at(self.w.grad, idx, upstream)
        return None  # integer inputs carry no gradient


class Dense(Layer):
    """Affine map on the last axis: y = x @ W + b."""

    def __init__(self, store: ParamStore, prefix: str, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = store.add(f"{prefix}.weight", uniform_init(rng, (in_dim, out_dim), in_dim))
        self.b = store.add(f"{prefix}.bias", uniform_init(rng, (out_dim,), in_dim))
        self.in_dim = in_dim
        self.out_dim = out_dim
        self._x = None

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        _expect_shape("dense", x, f"(..., {self.in_dim})", x.shape[-1] == self.in_dim)
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, upstream):
        x = self._require_cache(self._x)
        x2 = x.reshape(-1, self.in_dim)
        g2 = upstream.reshape(-1, self.out_dim)
        self.w.grad += x2.T @ g2
        self.b.grad += g2.sum(axis=0)
        return (g2 @ self.w.value.T).reshape(x.shape)


class Conv1d(Layer):
    """1-D convolution over the sequence axis, zero-padded to keep length.

    Input (N, L, C_in), kernel (K, C_in, C_out), output (N, L, C_out).
    """

    def __init__(self, store: ParamStore, prefix: str, in_channels: int, out_channels: int,
                 kernel: int, rng: np.random.Generator):
        if kernel % 2 != 1:
            raise ValueError(f"conv1d: kernel must be odd for same-length padding, got {kernel}")
        fan_in = kernel * in_channels
        self.w = store.add(f"{prefix}.weight", uniform_init(rng, (kernel, in_channels, out_channels), fan_in))
        self.b = store.add(f"{prefix}.bias", uniform_init(rng, (out_channels,), fan_in))
        self.kernel = kernel
        self.in_channels = in_channels
        self.out_channels = out_channels
        self._windows = None
        self._in_shape = None

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        _expect_shape("conv1d", x, f"(N, L, {self.in_channels})",
                      x.ndim == 3 and x.shape[-1] == self.in_channels)
        pad = (self.kernel - 1) // 2
        xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
        length = x.shape[1]
        # windows[n, t, k, c] = padded[n, t + k, c]; L <= ~15 so stacking is cheap
        windows = np.stack([xp[:, k:k + length, :] for k in range(self.kernel)], axis=2)
        self._windows = windows
        self._in_shape = x.shape
        return np.einsum("ntkc,kco->nto", windows, self.w.value) + self.b.value

    def backward(self, upstream):
        windows = self._require_cache(self._windows)
        n, length, _ = self._in_shape
        pad = (self.kernel - 1) // 2
        self.w.grad += np.einsum("ntkc,nto->kco", windows, upstream)
        self.b.grad += upstream.sum(axis=(0, 1))
        dxp = np.zeros((n, length + 2 * pad, self.in_channels))
        for k in range(self.kernel):
            dxp[:, k:k + length, :] += np.einsum("nto,kco->ntc", upstream, self.w.value[k:k + 1])
        return dxp[:, pad:pad + length, :]


class Dropout(Layer):
    """Inverted dropout: train mode zeroes activations at `rate` and scales
    survivors by 1/(1-rate); eval mode is the identity."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._mask = None

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        if not train or self.rate == 0.0:
            self._mask = np.ones_like(x)
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = rng.random(x.shape) >= self.rate
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, upstream):
        mask = self._require_cache(self._mask)
        return upstream * mask


class Softmax(Layer):
    """Row-wise softmax over the last axis."""

    def __init__(self):
        self._probs = None

    def forward(self, x, train=False, rng=None):
        self._probs = stable_softmax(np.asarray(x, dtype=np.float64))
        return self._probs

    def backward(self, upstream):
        probs = self._require_cache(self._probs)
        return softmax_backward(probs, upstream)


class Tanh(Layer):
    def __init__(self):
        self._y = None

    def forward(self, x, train=False, rng=None):
        self._y = np.tanh(np.asarray(x, dtype=np.float64))
        return self._y

    def backward(self, upstream):
        y = self._require_cache(self._y)
        return upstream * (1.0 - y * y)


class SelfAttention(Layer):
    """Multi-head scaled dot-product self-attention with a residual add.

    Input and output are (N, L, dim); dim must split evenly across heads.
    """

    def __init__(self, store: ParamStore, prefix: str, dim: int, heads: int, rng: np.random.Generator):
        if dim % heads != 0:
            raise ValueError(f"self_attention: dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.proj = {}
        for name in ("q", "k", "v", "o"):
            self.proj[name] = (
                store.add(f"{prefix}.{name}.weight", uniform_init(rng, (dim, dim), dim)),
                store.add(f"{prefix}.{name}.bias", uniform_init(rng, (dim,), dim)),
            )
        self._cache = None

    def _split(self, x):
        n, length, _ = x.shape
        return x.reshape(n, length, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge(self, x):
        n, h, length, hd = x.shape
        return x.transpose(0, 2, 1, 3).reshape(n, length, h * hd)

    def forward(self, x, train=False, rng=None):
        x = np.asarray(x, dtype=np.float64)
        _expect_shape("self_attention", x, f"(N, L, {self.dim})",
                      x.ndim == 3 and x.shape[-1] == self.dim)
        wq, bq = self.proj["q"]
        wk, bk = self.proj["k"]
        wv, bv = self.proj["v"]
        wo, bo = self.proj["o"]
        q = self._split(x @ wq.value + bq.value)
        k = self._split(x @ wk.value + bk.value)
        v = self._split(x @ wv.value + bv.value)
        scale = 1.0 / np.sqrt(self.head_dim)
        scores = np.einsum("nhid,nhjd->nhij", q, k) * scale
        attn = stable_softmax(scores)
        ctx = np.einsum("nhij,nhjd->nhid", attn, v)
        merged = self._merge(ctx)
        out = merged @ wo.value + bo.value + x
        self._cache = (x, q, k, v, attn, merged)
        return out

    def backward(self, upstream):
        x, q, k, v, attn, merged = self._require_cache(self._cache)
        wq, bq = self.proj["q"]
        wk, bk = self.proj["k"]
        wv, bv = self.proj["v"]
        wo, bo = self.proj["o"]
        n, length, _ = x.shape
        flat = lambda a: a.reshape(-1, self.dim)

        wo.grad += flat(merged).T @ flat(upstream)
        bo.grad += flat(upstream).sum(axis=0)
        d_merged = upstream @ wo.value.T
        d_ctx = self._split(d_merged)

        d_attn = np.einsum("nhid,nhjd->nhij", d_ctx, v)
        d_v = np.einsum("nhij,nhid->nhjd", attn, d_ctx)
        d_scores = softmax_backward(attn, d_attn)
        scale = 1.0 / np.sqrt(self.head_dim)
        d_q = np.einsum("nhij,nhjd->nhid", d_scores, k) * scale
        d_k = np.einsum("nhij,nhid->nhjd", d_scores, q) * scale

        dx = upstream.copy()  # residual path
        for (w, b), d_proj in ((wq, bq), d_q), ((wk, bk), d_k), ((wv, bv), d_v):
            d2 = flat(self._merge(d_proj))
            w.grad += flat(x).T @ d2
            b.grad += d2.sum(axis=0)
            dx += (d2 @ w.value.T).reshape(n, length, self.dim)
        return dx


LAYER_KINDS = ("embedding", "dense", "self_attention", "conv1d", "dropout", "softmax")


def make_layer(kind: str, store: ParamStore = None, prefix: str = "", rng: np.random.Generator = None, **cfg) -> Layer:
    """Build a layer by kind name; raises on unknown kinds."""
    if kind == "embedding":
        return Embedding(store, prefix, cfg["vocab"], cfg["dim"], rng)
    if kind == "dense":
        return Dense(store, prefix, cfg["in_dim"], cfg["out_dim"], rng)
    if kind == "self_attention":
        return SelfAttention(store, prefix, cfg["dim"], cfg["heads"], rng)
    if kind == "conv1d":
        return Conv1d(store, prefix, cfg["in_channels"], cfg["out_channels"], cfg.get("kernel", 3), rng)
    if kind == "dropout":
        return Dropout(cfg.get("rate", 0.0))
    if kind == "softmax":
        return Softmax()
    raise ValueError(f"unknown layer kind {kind!r}; known kinds: {', '.join(LAYER_KINDS)}")
