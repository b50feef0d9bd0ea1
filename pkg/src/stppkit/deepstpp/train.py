"""Mini-batch training loop and next-event prediction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..core import Event, EventSequence, NumericError, SpatialRegion, concat_locations
from ..ndiff import AdamState, Tape, Tensor, adam_step, save_checkpoint
from ..ndiff.nn import Params
from ..rng import Rng, as_generator
from .intensity import KernelParams
from .model import Batch, DeepStppConfig, batch_loss, decode, encode, init_weights, make_batch, sample_rep_points

Pair = tuple[EventSequence, Event]


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    clamped: int


@dataclass
class TrainResult:
    params: Params  # best-validation weights (final weights when there is no validation split)
    final_params: Params
    region: SpatialRegion
    rep_locations: np.ndarray | None
    trace: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0


def training_region(pairs: Sequence[Pair], inflate: float) -> SpatialRegion:
    """Bounding box of every event in ``pairs`` (inputs and targets), inflated by ``inflate``."""
    return SpatialRegion.bounding_box(concat_locations(pairs), inflate)


def _clone(params: Params) -> Params:
    return {k: Tensor(v.data.copy(), requires_grad=True, name=k) for k, v in params.items()}


def _batches(pairs, cfg, region, gen, rep_locations) -> list[Batch]:
    out = []
    for i in range(0, len(pairs), cfg.batch_size):
        chunk = pairs[i:i + cfg.batch_size]
        out.append(make_batch([w for w, _ in chunk], cfg, region, gen, [e for _, e in chunk], rep_locations))
    return out


def evaluate_loss(batches: list[Batch], params: Params, cfg: DeepStppConfig) -> float:
    """Mean negative ELBO with the latent fixed at its mean (no tape)."""
    total, count = 0.0, 0
    for b in batches:
        parts = batch_loss(b, params, cfg, np.zeros((len(b), cfg.d_z)))
        total += float(parts.loss.data) * len(b)
        count += len(b)
    return total / count


def train(
    train_pairs: Sequence[Pair],
    cfg: DeepStppConfig,
    val_pairs: Sequence[Pair] | None = None,
    region: SpatialRegion | None = None,
    params: Params | None = None,
    checkpoint: str | None = None,
    on_epoch: Callable[[EpochStats], None] | None = None,
) -> TrainResult:
    """Adam on the batch-mean negative ELBO.

    All randomness comes from ``cfg.seed`` split into named streams, so two runs
    with the same inputs give bit-identical weights. Validation uses fixed
    representative points and the latent mean. A non-finite loss or gradient
    aborts with the epoch index.
    """
    train_pairs = list(train_pairs)
    if not train_pairs:
        raise ValueError("training split is empty")
    root = Rng(cfg.seed)
    region = region or training_region(train_pairs, cfg.region_inflate)
    params = _clone(params) if params is not None else init_weights(cfg, root.child("init"))
    shuffle_gen = root.child("shuffle").generator()
    rep_gen = root.child("rep-points").generator()
    latent_gen = root.child("latent").generator()
    rep_locations = None
    if cfg.rep_mode == "fixed":
        rep_locations = sample_rep_points(region, cfg.n_reps, 0.0, rep_gen).locations
    val_gen = root.child("val-rep-points").generator()
    val_batches = _batches(list(val_pairs), cfg, region, val_gen, rep_locations) if val_pairs else []

    state = AdamState(lr=cfg.lr)
    result = TrainResult(params, params, region, rep_locations)
    best = np.inf
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_gen.permutation(len(train_pairs))
        seen, total, clamped = 0, 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            chunk = [train_pairs[j] for j in order[i:i + cfg.batch_size]]
            batch = make_batch([w for w, _ in chunk], cfg, region, rep_gen, [e for _, e in chunk], rep_locations)
            eps = latent_gen.standard_normal((len(chunk), cfg.d_z))
            for p in params.values():
                p.zero_grad()
            try:
                with Tape() as tape:
                    parts = batch_loss(batch, params, cfg, eps)
                tape.backward(parts.loss)
                adam_step(state, params, {k: p.grad for k, p in params.items()})
            except NumericError as exc:
                raise NumericError(f"training diverged at epoch {epoch}: {exc}") from exc
            total += float(parts.loss.data) * len(chunk)
            seen += len(chunk)
            clamped += parts.clamped
        try:
            val = evaluate_loss(val_batches, params, cfg) if val_batches else float("nan")
        except NumericError as exc:
            raise NumericError(f"training diverged at epoch {epoch} (validation): {exc}") from exc
        stats = EpochStats(epoch, total / seen, val, clamped)
        result.trace.append(stats)
        if on_epoch:
            on_epoch(stats)
        score = val if val_batches else stats.train_loss
        if np.isfinite(score) and score < best:
            best = score
            result.best_epoch = epoch
            result.params = _clone(params)
            if checkpoint:
                save_checkpoint(result.params, checkpoint, extra=checkpoint_extra(cfg, region, epoch, rep_locations))
    result.final_params = params
    if result.best_epoch == 0:
        result.params = _clone(params)
    return result


def checkpoint_extra(cfg: DeepStppConfig, region: SpatialRegion, epoch: int, rep_locations=None) -> dict:
    extra = {"config": cfg.to_dict(), "region": [list(region.lo), list(region.hi)], "epoch": epoch}
    if rep_locations is not None:
        extra["rep_locations"] = np.asarray(rep_locations).tolist()
    return extra


def region_from_extra(extra: dict) -> SpatialRegion:
    lo, hi = extra["region"]
    return SpatialRegion.rectangle(lo, hi)


def rep_locations_from_extra(extra: dict) -> np.ndarray | None:
    locs = extra.get("rep_locations")
    return None if locs is None else np.asarray(locs, dtype=float).reshape(-1, 2)


def window_kernel_params(
    window: EventSequence,
    cfg: DeepStppConfig,
    params: Params,
    region: SpatialRegion,
    rng,
    n_latent_samples: int = 0,
    rep_locations: np.ndarray | None = None,
) -> list[KernelParams]:
    """Kernel parameters for ``window``: one set from the latent mean, or one per latent draw."""
    gen = as_generator(rng)
    dist = encode(window, cfg, params, region)
    if rep_locations is None:
        rep_locations = sample_rep_points(region, cfg.n_reps, 0.0, gen).locations
    if n_latent_samples <= 0:
        return [decode(dist.mean, window, cfg, params, region, rep_locations=rep_locations)[0]]
    out = []
    for _ in range(n_latent_samples):
        z = dist.mean + np.exp(dist.log_std) * gen.standard_normal(cfg.d_z)
        out.append(decode(z, window, cfg, params, region, rep_locations=rep_locations)[0])
    return out


def mixture_params(kps: list[KernelParams]) -> KernelParams:
    """Average of several kernel-parameter sets as one mixture (weights divided by the count)."""
    if len(kps) == 1:
        return kps[0]
    k = len(kps)
    return KernelParams(
        np.concatenate([kp.w / k for kp in kps]),
        np.concatenate([kp.gamma for kp in kps]),
        np.concatenate([kp.beta for kp in kps]),
        np.concatenate([kp.anchor_s for kp in kps]),
        np.concatenate([kp.anchor_t for kp in kps]),
        kps[0].t_n,
    )


def predict_event(
    window: EventSequence,
    cfg: DeepStppConfig,
    params: Params,
    rng,
    n_latent_samples: int = 0,
    region: SpatialRegion | None = None,
    tail_tol: float = 1e-8,
    rep_locations: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Expected next time and the kernel-weighted location at that time.

    With ``n_latent_samples > 0`` the intensity is the average of the decoded
    intensities over that many latent draws.
    """
    region = region or SpatialRegion.bounding_box(window.locations, cfg.region_inflate)
    kp = mixture_params(window_kernel_params(window, cfg, params, region, rng, n_latent_samples, rep_locations))
    return kp.predict(tail_tol)

