"""Central finite-difference verification of tape gradients."""
from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor


def gradient_check(loss_fn, params: list[Tensor], h: float = 1e-5,
                   max_entries: int | None = None, seed: int = 0) -> dict:
    """Compare tape gradients of ``loss_fn`` against central differences.

    ``loss_fn`` is a zero-argument callable that runs a fresh forward pass and
    returns a scalar Tensor. When ``max_entries`` is set, at most that many
    coordinates per parameter are probed (deterministically sampled);
    otherwise every coordinate is checked.

    Returns a report with ``max_rel_err`` and per-parameter worst entries.
    """
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    details = []
    for p, an in zip(params, analytic):
        flat = p.data.reshape(-1)
        n = flat.size
        idx = np.arange(n)
        if max_entries is not None and n > max_entries:
            idx = rng.choice(n, size=max_entries, replace=False)
        p_worst = 0.0
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            f_plus = loss_fn().item()
            flat[i] = old - h
            f_minus = loss_fn().item()
            flat[i] = old
            fd = (f_plus - f_minus) / (2.0 * h)
            a = an.reshape(-1)[i]
            rel = abs(fd - a) / max(1e-6, abs(fd), abs(a))
            p_worst = max(p_worst, rel)
        worst = max(worst, p_worst)
        details.append({"shape": p.shape, "checked": len(idx), "max_rel_err": p_worst})
    return {"max_rel_err": worst, "params": details}
