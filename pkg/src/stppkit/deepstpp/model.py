"""Encoder, latent Gaussian, kernel-parameter decoders and the negative ELBO."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..core import Event, EventSequence, NumericError, SpatialRegion
from ..ndiff import Tape, Tensor, attention_encoder, clamp_min, exp, expm1_ratio, log, softplus
from ..ndiff.nn import EncoderConfig, Params, init_encoder, init_linear, init_mlp, linear, mlp, sinusoidal_positions
from ..rng import as_generator
from .intensity import KernelParams, RepresentativePoints

INTENSITY_FLOOR = 1e-30
GAMMA_FLOOR = 1e-6


@dataclass(frozen=True)
class DeepStppConfig:
    d_model: int = 128
    layers: int = 3
    heads: int = 2
    d_hidden: int = 128
    d_z: int = 128
    dec_hidden: int = 128
    dec_hidden_layers: int = 2
    n_reps: int = 50
    max_history: int = 64
    kl_weight: float = 1e-3
    lr: float = 0.01
    epochs: int = 200
    batch_size: int = 128
    seed: int = 0
    pos_scale: float = 100.0
    region_inflate: float = 0.1
    time_scale: float = 1.0
    rep_mode: str = "fixed"

    def __post_init__(self):
        if self.rep_mode not in ("fixed", "resample"):
            raise ValueError("rep_mode must be 'fixed' or 'resample'")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "rep_mode":
                continue
            if f.name in ("seed", "kl_weight", "lr", "n_reps"):
                if v < 0:
                    raise ValueError(f"{f.name} must be non-negative")
            elif not v > 0:
                raise ValueError(f"{f.name} must be positive")
        if self.d_model % 2:
            raise ValueError("d_model must be even")
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by heads")

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(self.d_model, self.layers, self.heads, self.d_hidden)

    @property
    def n_anchors(self) -> int:
        return self.max_history + self.n_reps

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DeepStppConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True)
class LatentDist:
    mean: np.ndarray
    log_std: np.ndarray


def init_weights(cfg: DeepStppConfig, rng) -> Params:
    gen = as_generator(rng)
    params: Params = {}
    init_linear(params, "embed", 3, cfg.d_model, gen)
    init_encoder(params, "enc", cfg.encoder, gen)
    init_linear(params, "z_mean", cfg.d_model, cfg.d_z, gen)
    init_linear(params, "z_logstd", cfg.d_model, cfg.d_z, gen)
    sizes = [cfg.d_z] + [cfg.dec_hidden] * cfg.dec_hidden_layers + [cfg.n_anchors]
    for name in ("dec_w", "dec_gamma", "dec_beta"):
        init_mlp(params, name, sizes, gen)
    return params


@dataclass
class Batch:
    """Padded windows. History slots are left-aligned; anchor slot ``k < max_history``
    holds the ``k``-th most recent event, the last ``n_reps`` slots the representative points."""

    feats: np.ndarray  # (B, N, 3)
    pos: np.ndarray  # (B, N, d_model)
    mask: np.ndarray  # (B, N)
    anchor_s: np.ndarray  # (B, A, 2)
    anchor_t: np.ndarray  # (B, A)
    anchor_mask: np.ndarray  # (B, A)
    t_n: np.ndarray  # (B,)
    target_t: np.ndarray | None
    target_s: np.ndarray | None

    def __len__(self):
        return len(self.t_n)


def sample_rep_points(region: SpatialRegion, n: int, t_n: float, gen: np.random.Generator) -> RepresentativePoints:
    lo, hi = np.asarray(region.lo), np.asarray(region.hi)
    return RepresentativePoints(lo + (hi - lo) * gen.uniform(size=(n, 2)), np.full(n, float(t_n)))


def make_batch(
    windows: list[EventSequence],
    cfg: DeepStppConfig,
    region: SpatialRegion,
    rng,
    targets: list[Event] | None = None,
    rep_locations: np.ndarray | None = None,
) -> Batch:
    """Pad ``windows`` into a batch. Representative points sit at each window's
    ``t_n``; their locations are ``rep_locations`` when given, else drawn per window."""
    gen = as_generator(rng) if rep_locations is None else None
    B = len(windows)
    H, J = cfg.max_history, cfg.n_reps
    lens = [min(len(w), H) for w in windows]
    if min(lens) < 1:
        raise ValueError("every window needs at least one event")
    N = max(lens)
    feats = np.zeros((B, N, 3))
    pos = np.zeros((B, N, cfg.d_model))
    mask = np.zeros((B, N), dtype=bool)
    anchor_s = np.zeros((B, H + J, 2))
    anchor_t = np.zeros((B, H + J))
    anchor_mask = np.zeros((B, H + J))
    t_n = np.zeros(B)
    lo, hi = np.asarray(region.lo), np.asarray(region.hi)
    for b, w in enumerate(windows):
        times = w.times[-H:]
        locs = w.locations[-H:]
        n = len(times)
        t_n[b] = times[-1]
        anchor_t[b] = times[-1]  # padded anchors sit at t_n so their (masked) kernels stay finite
        # encoder inputs: time before t_n in units of time_scale, location in region coordinates
        feats[b, :n, 0] = (times - times[-1]) / cfg.time_scale
        feats[b, :n, 1:] = (locs - lo) / (hi - lo) - 0.5
        pos[b, :n] = sinusoidal_positions(times, cfg.d_model, cfg.pos_scale)
        mask[b, :n] = True
        anchor_s[b, :n] = locs[::-1]
        anchor_t[b, :n] = times[::-1]
        anchor_mask[b, :n] = 1.0
        anchor_s[b, H:] = rep_locations if rep_locations is not None else sample_rep_points(region, J, times[-1], gen).locations
        anchor_t[b, H:] = times[-1]
        anchor_mask[b, H:] = 1.0
    target_t = target_s = None
    if targets is not None:
        target_t = np.array([e.t for e in targets])
        target_s = np.array([[e.x, e.y] for e in targets])
        if np.any(target_t < t_n):
            raise ValueError("target precedes the last history event")
    return Batch(feats, pos, mask, anchor_s, anchor_t, anchor_mask, t_n, target_t, target_s)


def encode_batch(batch: Batch, params: Params, cfg: DeepStppConfig) -> tuple[Tensor, Tensor]:
    """Latent mean and log-std, each ``(B, d_z)``."""
    x = linear(batch.feats, params, "embed") + batch.pos
    h = attention_encoder(x, params, "enc", cfg.encoder, batch.mask)
    m = batch.mask.astype(float)[..., None]
    pooled = (h * m).sum(axis=1) * (1.0 / m.sum(axis=1))
    return linear(pooled, params, "z_mean"), linear(pooled, params, "z_logstd")


def reparameterize(mean, log_std, eps: np.ndarray) -> Tensor:
    """``mean + exp(log_std) * eps``; differentiable in ``mean`` and ``log_std``."""
    return mean + exp(log_std) * eps


def sample_latent(dist: LatentDist, rng) -> np.ndarray:
    """One draw ``z ~ N(mean, diag exp(2 log_std))``."""
    eps = as_generator(rng).standard_normal(np.shape(dist.mean))
    return reparameterize(Tensor(dist.mean), Tensor(dist.log_std), eps).data


def decode_batch(z, params: Params, cfg: DeepStppConfig) -> tuple[Tensor, Tensor, Tensor]:
    depth = cfg.dec_hidden_layers + 1
    w = softplus(mlp(z, params, "dec_w", depth))
    gamma = clamp_min(softplus(mlp(z, params, "dec_gamma", depth)), GAMMA_FLOOR)
    beta = mlp(z, params, "dec_beta", depth)
    return w, gamma, beta


def kl_standard_normal(mean, log_std):
    """``KL(N(mean, diag exp(2 log_std)) || N(0, I))`` summed over the last axis."""
    return ((exp(log_std * 2.0) + mean * mean - 1.0 - log_std * 2.0) * 0.5).sum(axis=-1)


def target_loglik(w, gamma, beta, batch: Batch) -> tuple[Tensor, np.ndarray]:
    """``log lambda(s, t) - int_{t_n}^{t} lambda`` at each target, and the clamp indicator."""
    am = batch.anchor_mask
    r = np.linalg.norm(batch.target_s[:, None, :] - batch.anchor_s, axis=-1)
    since_anchor = batch.target_t[:, None] - batch.anchor_t  # >= 0
    k_s = gamma * gamma * (1.0 / (2 * math.pi)) * exp(gamma * (-r))
    k_t = exp(beta * (-since_anchor))
    lam = (w * k_s * k_t * am).sum(axis=-1)
    clamped = lam.data < INTENSITY_FLOOR
    gap = (batch.target_t - batch.t_n)[:, None]
    k0 = exp(beta * (-(batch.t_n[:, None] - batch.anchor_t)))
    comp = (w * k0 * expm1_ratio(beta * gap) * gap * am).sum(axis=-1)
    return log(clamp_min(lam, INTENSITY_FLOOR)) - comp, clamped


@dataclass
class LossParts:
    loss: Tensor
    loglik: np.ndarray
    kl: np.ndarray
    clamped: int


def batch_loss(batch: Batch, params: Params, cfg: DeepStppConfig, eps: np.ndarray) -> LossParts:
    """Mean over the batch of ``-loglik + kl_weight * KL``."""
    # overflow shows up as a non-finite loss, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        mean, log_std = encode_batch(batch, params, cfg)
        z = reparameterize(mean, log_std, eps)
        w, gamma, beta = decode_batch(z, params, cfg)
        ll, clamped = target_loglik(w, gamma, beta, batch)
        kl = kl_standard_normal(mean, log_std)
        per = kl * cfg.kl_weight - ll
        loss = per.mean()
    if not np.isfinite(loss.data):
        raise NumericError("loss is not finite")
    return LossParts(loss, ll.data.copy(), kl.data.copy(), int(clamped.sum()))


# -- single-window API ------------------------------------------------------

def encode(window: EventSequence, cfg: DeepStppConfig, params: Params, region: SpatialRegion | None = None) -> LatentDist:
    if len(window) < 1:
        raise ValueError("cannot encode an empty window")
    region = region or SpatialRegion.bounding_box(window.locations)
    batch = make_batch([window], cfg, region, 0, rep_locations=np.zeros((cfg.n_reps, 2)))
    mean, log_std = encode_batch(batch, params, cfg)
    return LatentDist(mean.data[0].copy(), log_std.data[0].copy())


def decode(
    z: np.ndarray,
    window: EventSequence,
    cfg: DeepStppConfig,
    params: Params,
    region: SpatialRegion,
    rng=None,
    rep_locations: np.ndarray | None = None,
) -> tuple[KernelParams, RepresentativePoints]:
    """Kernel parameters for the ``n`` (most recent, up to ``max_history``) events plus ``J`` representative points
    (at ``rep_locations`` if given, else drawn uniformly over ``region``)."""
    times = window.times[-cfg.max_history:]
    locs = window.locations[-cfg.max_history:]
    n, H = len(times), cfg.max_history
    t_n = float(times[-1])
    if rep_locations is None:
        reps = sample_rep_points(region, cfg.n_reps, t_n, as_generator(rng))
    else:
        reps = RepresentativePoints(np.asarray(rep_locations, dtype=float).reshape(-1, 2), np.full(cfg.n_reps, t_n))
    w, gamma, beta = decode_batch(Tensor(np.asarray(z, dtype=float)[None, :]), params, cfg)
    idx = np.r_[np.arange(n), H + np.arange(cfg.n_reps)]
    kp = KernelParams(
        w.data[0, idx], gamma.data[0, idx], beta.data[0, idx],
        np.concatenate([locs[::-1], reps.locations]),
        np.concatenate([times[::-1], reps.times]),
        t_n,
    )
    return kp, reps


def elbo_loss(window: EventSequence, target: Event, cfg: DeepStppConfig, params: Params, rng,
              region: SpatialRegion | None = None, rep_locations: np.ndarray | None = None) -> tuple[float, dict]:
    """Negative ELBO of one (window, target) pair; gradients land in ``params[*].grad``."""
    gen = as_generator(rng)
    region = region or SpatialRegion.bounding_box(np.vstack([window.locations, [[target.x, target.y]]]), cfg.region_inflate)
    batch = make_batch([window], cfg, region, gen, targets=[target], rep_locations=rep_locations)
    eps = gen.standard_normal((1, cfg.d_z))
    with Tape() as tape:
        parts = batch_loss(batch, params, cfg, eps)
    tape.backward(parts.loss)
    return float(parts.loss.data), {"loglik": float(parts.loglik[0]), "kl": float(parts.kl[0])}
