"""Samplers: Ogata thinning, generic STPP simulation, STHP cluster simulation, gridded STSC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .core import EventSequence, NumericError, SpatialRegion
from .parametric import StscKernels, StscParams, SthpParams
from .rng import as_generator

History = list  # accepted event times, ascending


@dataclass(frozen=True)
class ThinningBounds:
    """Upper bound ``upper(hist, t)`` on the intensity over ``[t, t + horizon(hist, t)]``."""

    upper: Callable[[History, float], float]
    horizon: Callable[[History, float], float] = lambda hist, t: math.inf

    @classmethod
    def decreasing(cls, intensity: Callable[[History, float], float]) -> "ThinningBounds":
        """For intensities that only decay between events, the current value bounds the future."""
        return cls(upper=intensity)

    @classmethod
    def increasing(cls, intensity: Callable[[History, float], float], factor: float = 2.0) -> "ThinningBounds":
        """Look-ahead ``L = factor / lambda(t)`` and ``M = lambda(t + L)``."""

        def horizon(hist, t):
            lam = intensity(hist, t)
            return factor / lam if lam > 0 else math.inf

        def upper(hist, t):
            ell = horizon(hist, t)
            return intensity(hist, t + ell) if math.isfinite(ell) else intensity(hist, t)

        return cls(upper=upper, horizon=horizon)


def ogata_thinning(
    intensity: Callable[[History, float], float],
    bounds: ThinningBounds,
    horizon: float,
    rng,
    t0: float = 0.0,
    on_accept: Callable[[float], None] | None = None,
) -> list[float]:
    """Ogata's modified thinning on ``(t0, horizon]``.

    ``intensity(hist, t)`` sees every accepted time so far (all ``<= t``).
    A zero bound with infinite look-ahead ends the simulation.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    gen = as_generator(rng)
    hist: list[float] = []
    t = t0
    while True:
        m = bounds.upper(hist, t)
        ell = bounds.horizon(hist, t)
        if not (m >= 0 and math.isfinite(m)):
            raise NumericError(f"intensity bound must be finite and non-negative, got {m} at t={t}")
        if m == 0:
            if not math.isfinite(ell):
                return hist
            t += ell
            if t > horizon:
                return hist
            continue
        dt = gen.exponential(1.0 / m)
        if dt > ell:
            t += ell
            if t > horizon:
                return hist
            continue
        t += dt
        if t > horizon:
            return hist
        lam = intensity(hist, t)
        if lam > m * (1 + 1e-12):
            raise NumericError(f"intensity {lam} exceeds its bound {m} at t={t}")
        if gen.uniform() < lam / m:
            hist.append(t)
            if on_accept is not None:
                on_accept(t)


class StppModel(Protocol):
    """What :func:`simulate_stpp` needs from a model.

    The model owns its location history; ``record`` is called after each
    retained event with its sampled location.
    """

    def temporal_intensity(self, hist: History, t: float) -> float: ...

    def bounds(self) -> ThinningBounds: ...

    def sample_location(self, t: float, gen: np.random.Generator) -> np.ndarray: ...

    def record(self, t: float, s: np.ndarray) -> None: ...


def simulate_stpp(model: StppModel, horizon: float, rng) -> EventSequence:
    """Thinning on the ground intensity, attaching a location from ``f(s|t)`` to every retained time."""
    gen = as_generator(rng)
    times: list[float] = []
    locs: list[np.ndarray] = []

    def accept(t):
        s = np.asarray(model.sample_location(t, gen), dtype=float)
        model.record(t, s)
        times.append(t)
        locs.append(s)

    ogata_thinning(model.temporal_intensity, model.bounds(), horizon, gen, on_accept=accept)
    return EventSequence.from_arrays(times, np.array(locs).reshape(-1, 2), horizon)


class SthpThinningModel:
    """STHP on the plane for :func:`simulate_stpp`, with an O(1) recursive ground intensity."""

    def __init__(self, p: SthpParams):
        self.p = p
        self.times: list[float] = []
        self.locs: list[np.ndarray] = []
        self._ref = 0.0
        self._acc = 0.0  # sum_i exp(-beta (ref - t_i))
        self._chol0 = np.linalg.cholesky(np.asarray(p.cov_g0))
        self._chol2 = np.linalg.cholesky(np.asarray(p.cov_g2))

    def _excitation(self, t: float) -> float:
        return self._acc * math.exp(-self.p.beta * (t - self._ref))

    def temporal_intensity(self, hist, t):
        return self.p.mu + self.p.alpha * self._excitation(t)

    def bounds(self):
        return ThinningBounds.decreasing(self.temporal_intensity)

    def sample_location(self, t, gen):
        p = self.p
        if self.times:
            w = p.alpha * np.exp(-p.beta * (t - np.asarray(self.times)))
            probs = np.concatenate([[p.mu], w])
            k = gen.choice(len(probs), p=probs / probs.sum())
        else:
            k = 0
        z = gen.standard_normal(2)
        if k == 0:
            return np.asarray(p.s_mu) + self._chol0 @ z
        return self.locs[k - 1] + self._chol2 @ z

    def record(self, t, s):
        self._acc = self._excitation(t) + 1.0
        self._ref = t
        self.times.append(t)
        self.locs.append(s)


def simulate_sthp_thinning(p: SthpParams, horizon: float, rng) -> EventSequence:
    return simulate_stpp(SthpThinningModel(p), horizon, rng)


def simulate_sthp_cluster(p: SthpParams, horizon: float, rng, max_generations: int = 100) -> EventSequence:
    """Branching-structure STHP sampler.

    Background events are a rate-``mu`` Poisson process with ``N(s_mu, cov_g0)``
    locations; every event of generation ``l`` spawns offspring on ``(t_i, T]``
    with rate ``alpha exp(-beta (t - t_i))`` (by thinning) and ``N(s_i, cov_g2)``
    locations, until a generation is empty.
    """
    if p.alpha >= p.beta:
        raise ValueError(f"supercritical parameters: alpha/beta = {p.alpha / p.beta:.3f} >= 1")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    gen = as_generator(rng)
    L0 = np.linalg.cholesky(np.asarray(p.cov_g0))
    L2 = np.linalg.cholesky(np.asarray(p.cov_g2))

    n0 = gen.poisson(p.mu * horizon)
    t_gen = np.sort(gen.uniform(0.0, horizon, n0))
    s_gen = np.asarray(p.s_mu) + gen.standard_normal((n0, 2)) @ L0.T
    all_t = [t_gen]
    all_s = [s_gen]
    a, b = p.alpha, p.beta

    def kernel_intensity(parent):
        return lambda hist, t: a * math.exp(-b * (t - parent))

    for _ in range(max_generations):
        if len(t_gen) == 0:
            break
        kid_t: list[float] = []
        kid_s: list[np.ndarray] = []
        for ti, si in zip(t_gen, s_gen):
            lam = kernel_intensity(ti)
            kids = ogata_thinning(lam, ThinningBounds.decreasing(lam), horizon, gen, t0=float(ti))
            if kids:
                kid_t.extend(kids)
                kid_s.append(si + gen.standard_normal((len(kids), 2)) @ L2.T)
        t_gen = np.asarray(kid_t)
        s_gen = np.concatenate(kid_s) if kid_s else np.zeros((0, 2))
        all_t.append(t_gen)
        all_s.append(s_gen)
    else:
        if len(t_gen):
            raise NumericError(f"cluster simulation still producing offspring after {max_generations} generations")

    times = np.concatenate(all_t)
    locs = np.concatenate(all_s).reshape(-1, 2)
    order = np.argsort(times, kind="stable")
    return EventSequence.from_arrays(times[order], locs[order], horizon)


def simulate_poisson(rate: float, region: SpatialRegion, horizon: float, rng) -> EventSequence:
    """Homogeneous Poisson times by thinning, uniform locations on ``region``."""
    if not region.bounded:
        raise ValueError("uniform locations need a bounded region")
    gen = as_generator(rng)
    lam = lambda hist, t: rate
    times = ogata_thinning(lam, ThinningBounds.decreasing(lam), horizon, gen)
    lo, hi = np.asarray(region.lo), np.asarray(region.hi)
    locs = lo + (hi - lo) * gen.uniform(size=(len(times), 2))
    return EventSequence.from_arrays(times, locs, horizon)


class StscGridModel:
    """STSC on a cell grid: cell-averaged ground intensity and cell-multinomial locations with uniform jitter."""

    def __init__(self, p: StscParams, grid=(101, 101)):
        if grid[0] < 2 or grid[1] < 2:
            raise ValueError("grid needs at least 2x2 cells")
        self.p = p
        self.kernels = StscKernels(p)
        gx, gy, self.cell_area = p.region.cell_centers(*grid)
        self.grid = grid
        self.cells = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        self.rate = self.kernels.g0(self.cells) * p.beta
        self.suppression = np.zeros(len(self.cells))
        self.dx = (p.region.hi[0] - p.region.lo[0]) / grid[0]
        self.dy = (p.region.hi[1] - p.region.lo[1]) / grid[1]
        self.times: list[float] = []
        self.locs: list[np.ndarray] = []

    def field(self, t: float) -> np.ndarray:
        """Intensity at every cell centre."""
        return self.p.mu * np.exp(self.rate * t - self.suppression)

    def temporal_intensity(self, hist, t):
        return float(self.field(t).mean() * self.p.region.area)

    def bounds(self):
        return ThinningBounds.increasing(self.temporal_intensity)

    def sample_location(self, t, gen):
        f = self.field(t)
        k = gen.choice(len(f), p=f / f.sum())
        jitter = gen.uniform(-0.5, 0.5, 2) * (self.dx, self.dy)
        return self.cells[k] + jitter

    def record(self, t, s):
        self.suppression += self.p.alpha * self.kernels.g2(self.cells, s[None, :])[:, 0]
        self.times.append(t)
        self.locs.append(s)


def simulate_stsc_grid(p: StscParams, horizon: float, rng, grid=(101, 101)) -> EventSequence:
    return simulate_stpp(StscGridModel(p, grid), horizon, rng)
