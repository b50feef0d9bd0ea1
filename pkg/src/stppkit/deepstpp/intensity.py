"""Closed-form intensity, compensator and density of the kernel mixture.

``lambda(s, t) = sum_i w_i k_s(s, s_i; gamma_i) k_t(t, t_i; beta_i)`` with a
normalized exponential-distance spatial kernel, so the spatial integral of each
term is ``w_i k_t`` and the temporal compensator is available exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import NumericError
from ..kernels import rbf_normalizer
from ..parametric import predict_next_time

SMALL_BETA = 1e-8


@dataclass(frozen=True)
class RepresentativePoints:
    locations: np.ndarray  # (J, 2)
    times: np.ndarray  # (J,)


@dataclass(frozen=True)
class KernelParams:
    """Per-anchor ``(w, gamma, beta)`` with anchors ``(s_i, t_i)`` and the prediction boundary ``t_n``."""

    w: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    anchor_s: np.ndarray
    anchor_t: np.ndarray
    t_n: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        for name, arr in (("gamma", self.gamma), ("beta", self.beta), ("anchor_t", self.anchor_t)):
            if np.asarray(arr).reshape(-1).shape != w.shape:
                raise ValueError(f"{name} length does not match w")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if np.any(np.asarray(self.gamma) <= 0):
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float).reshape(-1))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).reshape(-1))
        object.__setattr__(self, "anchor_s", np.asarray(self.anchor_s, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "anchor_t", np.asarray(self.anchor_t, dtype=float).reshape(-1))

    def __len__(self):
        return len(self.w)

    def permuted(self, order) -> "KernelParams":
        return KernelParams(self.w[order], self.gamma[order], self.beta[order],
                            self.anchor_s[order], self.anchor_t[order], self.t_n)

    # -- temporal pieces ----------------------------------------------------
    def temporal_kernel(self, t) -> np.ndarray:
        """``k_t(t, t_i)`` with shape ``t.shape + (n_anchors,)``."""
        t = np.asarray(t, dtype=float)
        return np.exp(-self.beta * np.abs(t[..., None] - self.anchor_t))

    def temporal_intensity(self, t):
        """Spatial marginal ``sum_i w_i k_t(t, t_i)``."""
        return self.temporal_kernel(t) @ self.w

    def temporal_compensator(self, t):
        """``int_{t_n}^{t} lambda(tau) dtau`` for ``t >= t_n``."""
        t = np.asarray(t, dtype=float)
        gap = t[..., None] - self.t_n
        k0 = np.exp(-self.beta * (self.t_n - self.anchor_t))
        small = np.abs(self.beta) < SMALL_BETA
        safe = np.where(small, 1.0, self.beta)
        term = k0 * (-np.expm1(-safe * gap)) / safe
        term = np.where(small, k0 * gap, term)
        return term @ self.w

    def total_compensator(self) -> float:
        """Limit of the compensator as ``t -> inf``; infinite unless every active anchor decays."""
        active = self.w > 0
        if np.any(self.beta[active] < SMALL_BETA):
            return math.inf
        k0 = np.exp(-self.beta * (self.t_n - self.anchor_t))
        return float(np.sum(np.where(active, self.w * k0 / np.where(active, self.beta, 1.0), 0.0)))

    # -- space-time ---------------------------------------------------------
    def spatial_kernel(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        r = np.linalg.norm(s[..., None, :] - self.anchor_s, axis=-1)
        return np.exp(-self.gamma * r) / rbf_normalizer(self.gamma)

    def intensity(self, s, t: float):
        """``lambda(s, t)`` at location(s) ``s`` (``(2,)`` or ``(..., 2)``)."""
        out = (self.spatial_kernel(s) * self.temporal_kernel(t)) @ self.w
        return float(out) if np.ndim(out) == 0 else out

    def conditional_pdf(self, s, t: float):
        """Joint density of the next event, ``lambda(s, t) exp(-compensator(t))``."""
        out = np.asarray(self.intensity(s, t)) * math.exp(-float(self.temporal_compensator(t)))
        return float(out) if np.ndim(out) == 0 else out

    def spatial_density(self, s, t: float):
        """``f(s | t) = lambda(s, t) / lambda(t)``."""
        lam_t = float(self.temporal_intensity(t))
        if lam_t <= 0:
            raise NumericError("temporal intensity is zero")
        out = np.asarray(self.intensity(s, t)) / lam_t
        return float(out) if np.ndim(out) == 0 else out

    def spatial_mean(self, t: float) -> np.ndarray:
        """``E[s | t]``: the kernels are symmetric around their anchors, so this is the ``w k_t`` weighted anchor mean."""
        weights = self.w * self.temporal_kernel(t)
        total = weights.sum()
        if not total > 0:
            raise NumericError("degenerate prediction: all anchor weights vanish at the predicted time")
        return weights @ self.anchor_s / total

    def compensator(self, t):
        return self.temporal_compensator(t)

    def predict(self, tail_tol: float = 1e-8) -> tuple[float, np.ndarray]:
        """Expected next time (conditioned on an event occurring) and the location mean at that time."""
        t_hat = predict_next_time(
            self.temporal_intensity, self.temporal_compensator, self.t_n, tail_tol,
            total_compensator=self.total_compensator(),
        )
        return t_hat, self.spatial_mean(t_hat)
