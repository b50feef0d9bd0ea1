"""Predictive log-likelihood split, gridded densities, Hellinger distance and intensity MAPE."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from .core import Event, EventSequence, NumericError, SpatialRegion
from .parametric import (
    SthpParams,
    StscKernels,
    StscParams,
    _exp_increment,
    sthp_compensator,
    sthp_intensity,
    sthp_temporal_intensity,
    stsc_intensity,
)

NO_SUPPORT = -math.inf  # log-likelihood reported when the model gives zero intensity


class Predictive(Protocol):
    """A model conditioned on a history ending at ``t_n``."""

    t_n: float

    def intensity(self, s, t: float): ...

    def temporal_intensity(self, t): ...

    def compensator(self, t): ...


class SthpPredictive:
    def __init__(self, p: SthpParams, history: EventSequence, t_n: float | None = None):
        self.p = p
        self.history = history
        self.t_n = float(t_n if t_n is not None else (history.times[-1] if len(history) else 0.0))

    def intensity(self, s, t):
        return sthp_intensity(self.p, self.history, s, t)

    def temporal_intensity(self, t):
        return sthp_temporal_intensity(self.p, self.history, t)

    def compensator(self, t):
        return sthp_compensator(self.p, self.history, self.t_n, t)


class PoissonPredictive:
    """Constant rate, uniform over a bounded region."""

    def __init__(self, rate: float, region: SpatialRegion, t_n: float):
        if not rate > 0:
            raise ValueError("rate must be positive")
        if not region.bounded:
            raise ValueError("a uniform spatial density needs a bounded region")
        self.rate, self.region, self.t_n = float(rate), region, float(t_n)

    def intensity(self, s, t):
        out = np.where(self.region.contains(s), self.rate / self.region.area, 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def temporal_intensity(self, t):
        return np.full(np.shape(t), self.rate) if np.ndim(t) else self.rate

    def compensator(self, t):
        return self.rate * (np.asarray(t, dtype=float) - self.t_n)


class StscPredictive:
    """Self-correcting process; spatial integrals use the cell-midpoint rule on ``grid``."""

    def __init__(self, p: StscParams, history: EventSequence, grid=(101, 101), t_n: float | None = None):
        self.p, self.history = p, history
        self.t_n = float(t_n if t_n is not None else (history.times[-1] if len(history) else 0.0))
        self.kernels = StscKernels(p)
        gx, gy, self.cell_area = p.region.cell_centers(*grid)
        self.centers = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        self.slope = self.kernels.g0(self.centers) * p.beta
        suppress = np.zeros(len(self.centers))
        if len(history):
            suppress = p.alpha * self.kernels.g2(self.centers, history.locations).sum(axis=-1)
        self.scale = p.mu * np.exp(-suppress) * self.cell_area

    def intensity(self, s, t):
        return stsc_intensity(self.p, self.history, s, t, self.kernels)

    def temporal_intensity(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(t[..., None] * self.slope) @ self.scale

    def compensator(self, t):
        t = np.asarray(t, dtype=float)
        flat = [float(_exp_increment(self.slope, self.t_n, float(tt)) @ self.scale) for tt in t.reshape(-1)]
        return np.asarray(flat).reshape(t.shape) if t.ndim else flat[0]


def loglik_split(model: Predictive, target: Event) -> tuple[float, float]:
    """``(ll_space, ll_time)`` with ``ll_time = log lambda(t) - Lambda(t_n, t)`` and
    ``ll_space = log lambda(s, t) - log lambda(t)``; both are ``-inf`` when ``lambda(t) <= 0``."""
    t = float(target.t)
    lam_t = float(model.temporal_intensity(np.array([t]))[0])
    if not lam_t > 0:
        return NO_SUPPORT, NO_SUPPORT
    ll_time = math.log(lam_t) - float(model.compensator(np.array([t]))[0])
    lam = float(model.intensity(target.s, t))
    ll_space = math.log(lam) - math.log(lam_t) if lam > 0 else NO_SUPPORT
    return ll_space, ll_time


@dataclass
class DensityGrid:
    region: SpatialRegion
    nx: int
    ny: int
    values: np.ndarray  # (nx, ny), ij indexing
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.nx, self.ny):
            raise ValueError(f"values shape {self.values.shape} does not match ({self.nx}, {self.ny})")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite and non-negative")

    @property
    def cell_area(self) -> float:
        return self.region.area / (self.nx * self.ny)

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def normalize(self) -> "DensityGrid":
        m = self.mass()
        if not m > 0:
            raise NumericError("grid has zero mass")
        return DensityGrid(self.region, self.nx, self.ny, self.values / m, True)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        gx, gy, _ = self.region.cell_centers(self.nx, self.ny)
        return gx, gy

    def to_csv(self, path) -> None:
        """``x,y,value`` rows, x-major over cell centres."""
        gx, gy = self.centers()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "value"])
            for x, y, v in zip(gx.ravel(), gy.ravel(), self.values.ravel()):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])

    @classmethod
    def from_csv(cls, path, normalized: bool = False) -> "DensityGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        xs, ys = np.unique(data[:, 0]), np.unique(data[:, 1])
        nx, ny = len(xs), len(ys)
        hx = (xs[-1] - xs[0]) / (nx - 1) if nx > 1 else 1.0
        hy = (ys[-1] - ys[0]) / (ny - 1) if ny > 1 else 1.0
        region = SpatialRegion.rectangle((xs[0] - hx / 2, ys[0] - hy / 2), (xs[-1] + hx / 2, ys[-1] + hy / 2))
        return cls(region, nx, ny, data[:, 2].reshape(nx, ny), normalized)


def density_grid_from_model(model: Predictive, t_query: float, region: SpatialRegion, nx: int, ny: int,
                            normalized: bool = True) -> DensityGrid:
    """``lambda(s, t_query)`` at cell centres, or the spatial density on the region if ``normalized``."""
    if not region.bounded:
        raise ValueError("density grids need a bounded region")
    gx, gy, _ = region.cell_centers(nx, ny)
    with np.errstate(over="ignore"):
        vals = np.asarray(model.intensity(np.stack([gx, gy], axis=-1), t_query), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError(f"intensity is not finite at t = {t_query}")
    grid = DensityGrid(region, nx, ny, vals)
    return grid.normalize() if normalized else grid


def hellinger(p: DensityGrid, q: DensityGrid) -> float:
    """Discrete Hellinger distance between two normalized grids on the same cells."""
    if (p.nx, p.ny) != (q.nx, q.ny) or not (
        np.allclose(p.region.lo, q.region.lo, rtol=0, atol=1e-12) and np.allclose(p.region.hi, q.region.hi, rtol=0, atol=1e-12)
    ):
        raise ValueError("grids must share region and resolution")
    if not (p.normalized and q.normalized):
        raise ValueError("hellinger needs normalized grids")
    a = p.cell_area
    d2 = 0.5 * np.sum((np.sqrt(p.values * a) - np.sqrt(q.values * a)) ** 2)
    return float(min(1.0, math.sqrt(max(d2, 0.0))))


def mean_hellinger(model: Predictive, truth: Predictive, times, region: SpatialRegion, nx: int = 50, ny: int = 50) -> float:
    """Hellinger distance of the spatial densities, averaged over query ``times``."""
    hds = [
        hellinger(density_grid_from_model(model, t, region, nx, ny), density_grid_from_model(truth, t, region, nx, ny))
        for t in times
    ]
    return float(np.mean(hds))


def temporal_mape(model_intensity: Callable, truth_intensity: Callable, times) -> float:
    """``100 * mean |est - truth| / truth`` over ``times``."""
    times = np.asarray(times, dtype=float)
    truth = np.asarray(truth_intensity(times), dtype=float)
    if np.any(~(truth > 0)):
        raise ValueError("true intensity must be positive at every sample time")
    est = np.asarray(model_intensity(times), dtype=float)
    return float(100.0 * np.mean(np.abs(est - truth) / truth))


def query_times(t_n: float, span: float, n: int) -> np.ndarray:
    """``n`` equally spaced times on ``(t_n, t_n + span]``."""
    if not span > 0 or n < 1:
        raise ValueError("span must be positive and n at least 1")
    return t_n + span * np.arange(1, n + 1) / n


def write_metrics(metrics: dict, path) -> None:
    Path(path).write_text(json.dumps(metrics, indent=1, sort_keys=True) + "\n")
