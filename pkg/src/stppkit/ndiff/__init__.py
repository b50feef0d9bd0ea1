from .checkpoint import load_checkpoint, save_checkpoint
from .nn import EncoderConfig, attention_encoder, sinusoidal_positions
from .optim import AdamState, adam_step
from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    add,
    clamp_min,
    concat,
    div,
    exp,
    expm1_ratio,
    gelu,
    layer_norm,
    log,
    matmul,
    mul,
    relu,
    reshape,
    slice_,
    softmax,
    softplus,
    sub,
    tanh,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "AdamState", "EncoderConfig", "ShapeError", "Tape", "Tensor", "adam_step", "add",
    "attention_encoder", "clamp_min", "concat", "div", "exp", "expm1_ratio", "gelu", "layer_norm",
    "load_checkpoint", "log", "matmul", "mul", "relu", "reshape", "save_checkpoint",
    "sinusoidal_positions", "slice_", "softmax", "softplus", "sub", "tanh", "tmean",
    "transpose", "tsum",
]
