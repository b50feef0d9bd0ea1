"""Spatiotemporal point processes: simulation, parametric likelihoods, a kernel-mixture VAE model and metrics."""

from .core import Event, EventSequence, NumericError, SpatialRegion, ValidationError
from .rng import Rng

__all__ = ["Event", "EventSequence", "NumericError", "Rng", "SpatialRegion", "ValidationError"]
__version__ = "0.1.0"
