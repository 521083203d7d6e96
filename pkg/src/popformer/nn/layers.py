"""Functional transformer building blocks over the autodiff tensors."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from .tensor import Tensor, add, matmul, mul, permute, relu, reshape, scale, softmax
from .tensor import layer_norm as _layer_norm


@dataclass
class LinearParams:
    w: Tensor
    b: Tensor


@dataclass
class NormParams:
    gain: Tensor
    bias: Tensor


@dataclass
class AttentionParams:
    q: LinearParams
    k: LinearParams
    v: LinearParams
    out: LinearParams


@dataclass
class MlpParams:
    inner: LinearParams
    outer: LinearParams


def uniform_linear(rng: np.random.Generator, fan_in: int, fan_out: int) -> LinearParams:
    # weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero
    limit = 1.0 / math.sqrt(fan_in)
    return LinearParams(
        w=Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True),
        b=Tensor(np.zeros(fan_out), requires_grad=True),
    )


def norm_params(width: int) -> NormParams:
    return NormParams(
        gain=Tensor(np.ones(width), requires_grad=True),
        bias=Tensor(np.zeros(width), requires_grad=True),
    )


def attention_params(rng: np.random.Generator, width: int) -> AttentionParams:
    return AttentionParams(
        q=uniform_linear(rng, width, width),
        k=uniform_linear(rng, width, width),
        v=uniform_linear(rng, width, width),
        out=uniform_linear(rng, width, width),
    )


def mlp_params(rng: np.random.Generator, width: int, hidden: int) -> MlpParams:
    return MlpParams(
        inner=uniform_linear(rng, width, hidden),
        outer=uniform_linear(rng, hidden, width),
    )


def linear(x: Tensor, p: LinearParams) -> Tensor:
    return add(matmul(x, p.w), p.b)


def layer_norm(x: Tensor, p: NormParams) -> Tensor:
    return _layer_norm(x, p.gain, p.bias)


def mlp_block(x: Tensor, p: MlpParams) -> Tensor:
    return linear(relu(linear(x, p.inner)), p.outer)


def causal_mask(n: int) -> np.ndarray:
    """Boolean (n, n) mask where position i may attend to positions <= i."""
    return np.tril(np.ones((n, n), dtype=bool))


def multi_head_attention(q: Tensor, k: Tensor, v: Tensor, p: AttentionParams,
                         heads: int, mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention with per-head projections.

    q is (sq, D); k and v are (sk, D). Queries, keys and values are projected
    to D/heads per head, scores scaled by 1/sqrt(D/heads); mask (broadcastable
    to (sq, sk), True = attend) hides positions before normalization.
    """
    sq, width = q.shape
    sk = k.shape[0]
    if width % heads != 0:
        raise ConfigError(f"width {width} not divisible by {heads} heads")
    if k.shape != (sk, width) or v.shape != (sk, width):
        raise ShapeError(f"attention inputs disagree: q{q.shape} k{k.shape} v{v.shape}")
    dk = width // heads

    def split(t: Tensor, s: int) -> Tensor:
        return permute(reshape(t, (s, heads, dk)), (1, 0, 2))  # (H, s, dk)

    qh = split(linear(q, p.q), sq)
    kh = split(linear(k, p.k), sk)
    vh = split(linear(v, p.v), sk)
    scores = scale(matmul(qh, permute(kh, (0, 2, 1))), 1.0 / math.sqrt(dk))  # (H, sq, sk)
    weights = softmax(scores, mask=mask)
    mixed = matmul(weights, vh)  # (H, sq, dk)
    merged = reshape(permute(mixed, (1, 0, 2)), (sq, width))
    return linear(merged, p.out)
