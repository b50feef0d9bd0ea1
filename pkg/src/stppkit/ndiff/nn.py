"""Layers built from tensor ops: linear maps, MLPs, a pre-norm Transformer encoder."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import ShapeError, Tensor, gelu, layer_norm, matmul, softmax

Params = dict[str, Tensor]


def init_linear(params: Params, name: str, d_in: int, d_out: int, gen: np.random.Generator) -> None:
    bound = 1.0 / math.sqrt(d_in)
    params[f"{name}.W"] = Tensor(gen.uniform(-bound, bound, (d_in, d_out)), requires_grad=True, name=f"{name}.W")
    params[f"{name}.b"] = Tensor(gen.uniform(-bound, bound, (d_out,)), requires_grad=True, name=f"{name}.b")


def linear(x, params: Params, name: str) -> Tensor:
    return matmul(x, params[f"{name}.W"]) + params[f"{name}.b"]


def init_layer_norm(params: Params, name: str, d: int) -> None:
    params[f"{name}.g"] = Tensor(np.ones(d), requires_grad=True, name=f"{name}.g")
    params[f"{name}.b"] = Tensor(np.zeros(d), requires_grad=True, name=f"{name}.b")


def norm(x, params: Params, name: str) -> Tensor:
    return layer_norm(x) * params[f"{name}.g"] + params[f"{name}.b"]


def init_mlp(params: Params, name: str, sizes: list[int], gen: np.random.Generator) -> None:
    for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        init_linear(params, f"{name}.{k}", a, b, gen)


def mlp(x, params: Params, name: str, depth: int) -> Tensor:
    """``depth`` linear layers with GELU between them (none after the last)."""
    for k in range(depth):
        x = linear(x, params, f"{name}.{k}")
        if k < depth - 1:
            x = gelu(x)
    return x


def sinusoidal_positions(times, d_model: int, scale: float = 100.0) -> np.ndarray:
    """Sin/cos encoding of normalized event times.

    Times are mapped to ``[0, scale]`` by ``(t - t_1) / (t_n - t_1)``; a single
    event sits at position 0. Column ``2i`` holds ``sin(p / 10000^(2i/d))`` and
    ``2i + 1`` the matching cosine.
    """
    if d_model % 2:
        raise ValueError("d_model must be even")
    times = np.asarray(times, dtype=float).reshape(-1)
    span = times[-1] - times[0] if len(times) > 1 else 0.0
    pos = (times - times[0]) / span * scale if span > 0 else np.zeros_like(times)
    freqs = 1.0 / 10000.0 ** (np.arange(0, d_model, 2) / d_model)
    ang = pos[:, None] * freqs[None, :]
    out = np.empty((len(times), d_model))
    out[:, 0::2] = np.sin(ang)
    out[:, 1::2] = np.cos(ang)
    return out


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 128
    layers: int = 3
    heads: int = 2
    d_hidden: int = 128

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")


def init_encoder(params: Params, name: str, cfg: EncoderConfig, gen: np.random.Generator) -> None:
    d = cfg.d_model
    for layer in range(cfg.layers):
        p = f"{name}.{layer}"
        init_layer_norm(params, f"{p}.ln1", d)
        for proj in ("q", "k", "v", "o"):
            init_linear(params, f"{p}.{proj}", d, d, gen)
        init_layer_norm(params, f"{p}.ln2", d)
        init_linear(params, f"{p}.ff1", d, cfg.d_hidden, gen)
        init_linear(params, f"{p}.ff2", cfg.d_hidden, d, gen)
    init_layer_norm(params, f"{name}.ln_out", d)


def self_attention(x: Tensor, params: Params, name: str, heads: int, key_bias: np.ndarray | None) -> Tensor:
    """Multi-head self-attention over axis -2 of ``x`` (batch, n, d)."""
    B, n, d = x.shape
    dh = d // heads

    def split(t):
        return t.reshape(B, n, heads, dh).transpose(0, 2, 1, 3)

    q = split(linear(x, params, f"{name}.q"))
    k = split(linear(x, params, f"{name}.k"))
    v = split(linear(x, params, f"{name}.v"))
    scores = matmul(q, k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dh))
    if key_bias is not None:
        scores = scores + key_bias[:, None, None, :]
    attn = softmax(scores, axis=-1)
    out = matmul(attn, v).transpose(0, 2, 1, 3).reshape(B, n, d)
    return linear(out, params, f"{name}.o")


def attention_encoder(x, params: Params, name: str, cfg: EncoderConfig, mask: np.ndarray | None = None) -> Tensor:
    """Pre-norm Transformer encoder with full bidirectional attention.

    ``x`` is ``(n, d_model)`` or ``(batch, n, d_model)``; ``mask`` (batch, n) marks
    real events with True so padding is never attended to.
    """
    x = x if isinstance(x, Tensor) else Tensor(x)
    squeeze = x.ndim == 2
    if squeeze:
        x = x.reshape(1, *x.shape)
        mask = None if mask is None else np.asarray(mask)[None]
    if x.ndim != 3 or x.shape[-1] != cfg.d_model:
        raise ShapeError(f"encoder expects (..., n, {cfg.d_model}), got {x.shape}")
    if x.shape[1] < 1:
        raise ShapeError("encoder needs at least one event")
    key_bias = None
    if mask is not None:
        key_bias = np.where(np.asarray(mask, dtype=bool), 0.0, -1e9)
    for layer in range(cfg.layers):
        p = f"{name}.{layer}"
        x = x + self_attention(norm(x, params, f"{p}.ln1"), params, p, cfg.heads, key_bias)
        h = gelu(linear(norm(x, params, f"{p}.ln2"), params, f"{p}.ff1"))
        x = x + linear(h, params, f"{p}.ff2")
    x = norm(x, params, f"{name}.ln_out")
    return x.reshape(x.shape[1], x.shape[2]) if squeeze else x
