"""Adam with decoupled weight decay."""
from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor


class Adam:
    """Per-parameter first/second moment estimates with bias correction.

    Decoupled weight decay shrinks parameters before the moment update, so a
    zero gradient with zero decay leaves parameters untouched.
    """

    def __init__(self, params: list[Tensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.step_count += 1
        bc1 = 1.0 - self.beta1 ** self.step_count
        bc2 = 1.0 - self.beta2 ** self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adam_step(optimizer: Adam) -> None:
    """Apply one optimizer step using the gradients currently on the parameters."""
    optimizer.step()
