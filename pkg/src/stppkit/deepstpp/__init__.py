"""Latent-variable model whose decoders emit per-event kernel parameters with a closed-form intensity."""

from .intensity import KernelParams, RepresentativePoints
from .model import DeepStppConfig, LatentDist, decode, elbo_loss, encode, init_weights, sample_latent
from .train import TrainResult, predict_event, train

__all__ = [
    "DeepStppConfig", "KernelParams", "LatentDist", "RepresentativePoints", "TrainResult", "decode",
    "elbo_loss", "encode", "init_weights", "predict_event", "sample_latent", "train",
]
