"""Minimal tensor/autodiff engine and transformer building blocks."""
from .gradcheck import gradient_check
from .layers import (
    AttentionParams,
    LinearParams,
    MlpParams,
    NormParams,
    attention_params,
    causal_mask,
    layer_norm,
    linear,
    mlp_block,
    mlp_params,
    multi_head_attention,
    norm_params,
    uniform_linear,
)
from .optim import Adam, adam_step
from .tensor import (
    Tape,
    Tensor,
    add,
    const,
    logistic,
    matmul,
    mean_all,
    mul,
    param,
    permute,
    relu,
    reshape,
    scale,
    softmax,
    sub,
    sum_all,
)

__all__ = [
    "Adam", "AttentionParams", "LinearParams", "MlpParams", "NormParams", "Tape", "Tensor",
    "adam_step", "add", "attention_params", "causal_mask", "const", "gradient_check",
    "layer_norm", "linear", "logistic", "matmul", "mean_all", "mlp_block", "mlp_params",
    "mul", "multi_head_attention", "norm_params", "param", "permute", "relu", "reshape",
    "scale", "softmax", "sub", "sum_all", "uniform_linear",
]
