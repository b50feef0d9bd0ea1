"""Spatial and temporal kernel primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .core import NumericError, SpatialRegion
from .quadrature import dblquad


@dataclass(frozen=True)
class Gauss2:
    """Bivariate Gaussian density with mean ``mean`` and covariance ``cov``."""

    mean: tuple[float, float]
    cov: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float).reshape(2)
        c = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(c)) or abs(c[0, 1] - c[1, 0]) > 1e-12:
            raise ValueError(f"covariance must be finite and symmetric, got {c.tolist()}")
        if c[0, 0] <= 0 or np.linalg.det(c) <= 0:
            raise NumericError(f"covariance is not positive definite: {c.tolist()}")
        object.__setattr__(self, "mean", (float(m[0]), float(m[1])))
        object.__setattr__(self, "cov", ((float(c[0, 0]), float(c[0, 1])), (float(c[1, 0]), float(c[1, 1]))))

    @classmethod
    def isotropic(cls, mean, var: float) -> "Gauss2":
        return cls(tuple(mean), ((var, 0.0), (0.0, var)))

    @property
    def cov_matrix(self) -> np.ndarray:
        return np.array(self.cov)

    @property
    def precision(self) -> np.ndarray:
        return np.linalg.inv(self.cov_matrix)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.cov_matrix))

    @property
    def is_diagonal(self) -> bool:
        return self.cov[0][1] == 0.0

    def shifted(self, mean) -> "Gauss2":
        return Gauss2(tuple(mean), self.cov)


@dataclass(frozen=True)
class ExpDecay:
    """Temporal triggering kernel ``alpha * exp(-beta * dt)``."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("ExpDecay requires alpha > 0 and beta > 0")

    def __call__(self, dt):
        return self.alpha * np.exp(-self.beta * np.asarray(dt, dtype=float))

    def integral(self, horizon):
        """Integral of the kernel over ``[0, horizon]``."""
        return self.alpha / self.beta * (1.0 - np.exp(-self.beta * np.asarray(horizon, dtype=float)))


def gaussian_density(diff, precision: np.ndarray, det: float) -> np.ndarray:
    """Zero-mean bivariate normal density at displacement(s) ``diff`` (..., 2)."""
    diff = np.asarray(diff, dtype=float)
    q = (
        precision[0, 0] * diff[..., 0] ** 2
        + 2.0 * precision[0, 1] * diff[..., 0] * diff[..., 1]
        + precision[1, 1] * diff[..., 1] ** 2
    )
    return np.exp(-0.5 * q) / (2.0 * math.pi * math.sqrt(det))


def gauss2_pdf(g: Gauss2, s) -> np.ndarray | float:
    s = np.asarray(s, dtype=float)
    out = gaussian_density(s - np.asarray(g.mean), g.precision, g.det)
    return float(out) if out.ndim == 0 else out


def gauss2_mass(g: Gauss2, region: SpatialRegion, tol: float = 1e-8) -> float:
    """Probability mass of ``g`` inside a rectangular region."""
    if not region.bounded:
        return 1.0
    (x0, y0), (x1, y1) = region.lo, region.hi
    if g.is_diagonal:
        sx, sy = math.sqrt(g.cov[0][0]), math.sqrt(g.cov[1][1])
        mx, my = g.mean
        px = ndtr((x1 - mx) / sx) - ndtr((x0 - mx) / sx)
        py = ndtr((y1 - my) / sy) - ndtr((y0 - my) / sy)
        return float(px * py)
    P, d = g.precision, g.det
    m = np.asarray(g.mean)
    return dblquad(
        lambda x, y: gaussian_density(np.stack([x - m[0], y - m[1]], axis=-1), P, d),
        region.lo, region.hi, tol=tol,
    )


def gauss2_truncated_pdf(g: Gauss2, s, region: SpatialRegion, mass: float | None = None):
    """Density of ``g`` conditioned on ``region``; zero outside it.

    ``mass`` may be supplied to skip recomputing the normalizer.
    """
    if not region.bounded:
        raise ValueError("truncation requires a rectangular region")
    if mass is None:
        mass = gauss2_mass(g, region)
    s = np.asarray(s, dtype=float)
    val = np.where(region.contains(s), gauss2_pdf(g, s) / mass, 0.0)
    return float(val) if val.ndim == 0 else val


def rbf_normalizer(gamma) -> np.ndarray:
    """Integral of ``exp(-gamma * |s|)`` over the plane, ``2*pi/gamma**2``."""
    return 2.0 * math.pi / np.asarray(gamma, dtype=float) ** 2


def rbf_spatial(s, s_i, gamma_i):
    """Normalized exponential-distance kernel ``exp(-gamma |s - s_i|) / (2 pi / gamma^2)``."""
    gamma_i = np.asarray(gamma_i, dtype=float)
    if np.any(gamma_i <= 0):
        raise ValueError("gamma must be positive")
    r = np.linalg.norm(np.asarray(s, dtype=float) - np.asarray(s_i, dtype=float), axis=-1)
    out = np.exp(-gamma_i * r) / rbf_normalizer(gamma_i)
    return float(out) if np.ndim(out) == 0 else out


def exp_temporal(t, t_i, beta_i):
    """``exp(-beta |t - t_i|)``; any real ``beta``."""
    out = np.exp(-np.asarray(beta_i, dtype=float) * np.abs(np.asarray(t, dtype=float) - np.asarray(t_i, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out
