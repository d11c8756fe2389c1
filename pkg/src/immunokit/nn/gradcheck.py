"""Finite-difference gradient verification.

`grad_check` compares analytic gradients (whatever the model's backward pass
accumulated into the store) against central differences of the loss at
randomly probed coordinates, and returns the worst relative error seen.
The closure must be deterministic: dropout off, fixed inputs.
"""

from __future__ import annotations

import numpy as np

from .params import ParamStore


def grad_check(closure, store: ParamStore, probe_count: int = 50, seed: int = 0,
               step: float = 1e-6) -> float:
    """Worst relative error between analytic and numeric gradients.

    `closure()` runs a full forward/backward, returns the scalar loss and
    leaves parameter gradients in the store. Probed coordinates are chosen
    uniformly over all parameter entries.
    """
    store.zero_grads()
    loss = float(closure())
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss} in grad_check")
    analytic = {name: p.grad.copy() for name, p in store.entries.items()}

    names = store.names()
    sizes = np.array([store[n].value.size for n in names])
    total = int(sizes.sum())
    rng = np.random.default_rng(seed)
    k = min(probe_count, total)
    coords = rng.choice(total, size=k, replace=False)
    bounds = np.cumsum(sizes)

    worst = 0.0
    for flat in coords:
        which = int(np.searchsorted(bounds, flat, side="right"))
        offset = int(flat - (bounds[which - 1] if which > 0 else 0))
        value = store[names[which]].value.reshape(-1)

        theta = value[offset]
        h = step * max(1.0, abs(theta))
        value[offset] = theta + h
        store.zero_grads()
        loss_plus = float(closure())
        value[offset] = theta - h
        store.zero_grads()
        loss_minus = float(closure())
        value[offset] = theta
        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise FloatingPointError("non-finite loss during finite-difference probe")

        numeric = (loss_plus - loss_minus) / (2.0 * h)
        a = analytic[names[which]].reshape(-1)[offset]
        # central differences of a loss of magnitude L carry ~eps*L/(2h) of
        # cancellation noise; a coordinate whose gradient sits below that
        # floor (e.g. an exactly-inert parameter) is numerically zero on
        # both sides, not a disagreement
        noise = 10.0 * np.finfo(np.float64).eps * max(1.0, abs(loss)) / (2.0 * h)
        if max(abs(a), abs(numeric)) <= noise:
            continue
        denom = max(abs(a), abs(numeric), 1e-6)
        worst = max(worst, abs(a - numeric) / denom)

    store.zero_grads()
    return worst
