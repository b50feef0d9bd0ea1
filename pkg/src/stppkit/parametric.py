"""Spatiotemporal Hawkes (STHP) and self-correcting (STSC) models.

Intensities, log-likelihoods, maximum-likelihood fitting and
expectation-based next-event prediction.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .core import EventSequence, NumericError, SpatialRegion
from .kernels import Gauss2, gauss2_mass, gaussian_density
from .quadrature import quad, quad_vec

log = logging.getLogger(__name__)


def _as_cov(c) -> np.ndarray:
    c = np.asarray(c, dtype=float).reshape(2, 2)
    if abs(c[0, 1] - c[1, 0]) > 1e-12 or c[0, 0] <= 0 or np.linalg.det(c) <= 0:
        raise ValueError(f"covariance must be symmetric positive definite, got {c.tolist()}")
    return c


@dataclass(frozen=True)
class SthpParams:
    mu: float
    alpha: float
    beta: float
    s_mu: tuple[float, float] = (0.0, 0.0)
    cov_g0: tuple = ((1.0, 0.0), (0.0, 1.0))
    cov_g2: tuple = ((1.0, 0.0), (0.0, 1.0))

    def __post_init__(self):
        if not (self.mu > 0 and self.alpha > 0 and self.beta > 0):
            raise ValueError("mu, alpha and beta must be positive")
        object.__setattr__(self, "s_mu", tuple(float(v) for v in np.asarray(self.s_mu).reshape(2)))
        for name in ("cov_g0", "cov_g2"):
            c = _as_cov(getattr(self, name))
            object.__setattr__(self, name, tuple(tuple(float(v) for v in row) for row in c))

    @property
    def g0(self) -> Gauss2:
        return Gauss2(self.s_mu, self.cov_g0)

    @property
    def branching_ratio(self) -> float:
        return self.alpha / self.beta

    @property
    def stationary_rate(self) -> float:
        return self.mu / (1.0 - self.branching_ratio)

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "s_mu": list(self.s_mu),
            "cov_g0": [v for row in self.cov_g0 for v in row],
            "cov_g2": [v for row in self.cov_g2 for v in row],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SthpParams":
        return cls(
            float(d["mu"]), float(d["alpha"]), float(d["beta"]),
            tuple(d.get("s_mu", (0.0, 0.0))),
            np.asarray(d["cov_g0"], dtype=float).reshape(2, 2),
            np.asarray(d["cov_g2"], dtype=float).reshape(2, 2),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class StscParams:
    """Self-correcting process on a rectangle; ``g0`` and the per-event ``g2``
    Gaussians are renormalized to unit mass on ``region``."""

    mu: float
    alpha: float
    beta: float
    g0: Gauss2
    cov_g2: tuple
    region: SpatialRegion

    def __post_init__(self):
        if not (self.mu > 0 and self.alpha > 0 and self.beta > 0):
            raise ValueError("mu, alpha and beta must be positive")
        if not self.region.bounded:
            raise ValueError("STSC requires a bounded region")
        c = _as_cov(self.cov_g2)
        object.__setattr__(self, "cov_g2", tuple(tuple(float(v) for v in row) for row in c))

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "s_mu": list(self.g0.mean),
            "cov_g0": [v for row in self.g0.cov for v in row],
            "cov_g2": [v for row in self.cov_g2 for v in row],
            "region": [*self.region.lo, *self.region.hi],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StscParams":
        r = d.get("region", [0.0, 0.0, 1.0, 1.0])
        return cls(
            float(d["mu"]), float(d["alpha"]), float(d["beta"]),
            Gauss2(tuple(d["s_mu"]), np.asarray(d["cov_g0"], dtype=float).reshape(2, 2)),
            np.asarray(d["cov_g2"], dtype=float).reshape(2, 2),
            SpatialRegion.rectangle(r[:2], r[2:]),
        )


def _diag(v):
    return ((v, 0.0), (0.0, v))


STHP_PRESETS = {
    "ds1": SthpParams(0.2, 0.5, 1.0, (0.0, 0.0), _diag(0.2), _diag(0.5)),
    "ds2": SthpParams(0.15, 0.5, 0.6, (0.0, 0.0), _diag(5.0), _diag(0.1)),
    "ds3": SthpParams(1.0, 0.3, 2.0, (0.0, 0.0), _diag(1.0), _diag(0.1)),
}

_UNIT = SpatialRegion.rectangle((0.0, 0.0), (1.0, 1.0))

STSC_PRESETS = {
    "ds1": StscParams(1.0, 0.2, 0.2, Gauss2.isotropic((0.5, 0.5), 1.0), _diag(0.85), _UNIT),
    "ds2": StscParams(1.0, 0.3, 0.2, Gauss2.isotropic((0.5, 0.5), 0.4), _diag(0.3), _UNIT),
    "ds3": StscParams(1.0, 0.4, 0.2, Gauss2.isotropic((0.5, 0.5), 0.25), _diag(0.2), _UNIT),
}


# -- STHP ------------------------------------------------------------------

def _history_before(hist: EventSequence, t: float) -> tuple[np.ndarray, np.ndarray]:
    times = hist.times
    keep = times < t
    return times[keep], hist.locations[keep]


def sthp_intensity(p: SthpParams, hist: EventSequence, s, t: float):
    """Space-time intensity at location(s) ``s`` (shape ``(2,)`` or ``(..., 2)``)."""
    s = np.asarray(s, dtype=float)
    times, locs = _history_before(hist, t)
    P0, det0 = np.linalg.inv(p.cov_g0), np.linalg.det(p.cov_g0)
    out = p.mu * gaussian_density(s - np.asarray(p.s_mu), P0, det0)
    if len(times):
        P2, det2 = np.linalg.inv(p.cov_g2), np.linalg.det(p.cov_g2)
        weights = p.alpha * np.exp(-p.beta * (t - times))
        diff = s[..., None, :] - locs
        out = out + (gaussian_density(diff, P2, det2) * weights).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def sthp_temporal_intensity(p: SthpParams, hist: EventSequence, t):
    """Ground intensity ``mu + sum alpha exp(-beta (t - t_i))`` (the spatial kernels integrate to one)."""
    times = hist.times
    t = np.asarray(t, dtype=float)
    dt = t[..., None] - times
    contrib = np.where(dt > 0, p.alpha * np.exp(-p.beta * np.where(dt > 0, dt, 0.0)), 0.0)
    return p.mu + contrib.sum(axis=-1)


def sthp_compensator(p: SthpParams, hist: EventSequence, t0: float, t1):
    """``int_{t0}^{t1} lambda(tau) dtau`` for a history entirely before ``t0``."""
    times = hist.times
    t1 = np.asarray(t1, dtype=float)
    decay0 = np.exp(-p.beta * (t0 - times))
    decay1 = np.exp(-p.beta * (t1[..., None] - times))
    return p.mu * (t1 - t0) + p.alpha / p.beta * (decay0 - decay1).sum(axis=-1)


class _PairCache:
    """Lower-triangular (i > j) pair displacements of a sequence, built once per fit."""

    def __init__(self, seq: EventSequence):
        self.t = seq.times
        self.s = seq.locations
        n = len(self.t)
        ii, jj = np.tril_indices(n, k=-1)
        self.row = ii
        self.dt = self.t[ii] - self.t[jj]
        self.ds = self.s[ii] - self.s[jj]
        self.n = n


def _log_lambda_terms(p: SthpParams, cache: _PairCache):
    P0, det0 = np.linalg.inv(p.cov_g0), np.linalg.det(p.cov_g0)
    P2, det2 = np.linalg.inv(p.cov_g2), np.linalg.det(p.cov_g2)
    d0 = cache.s - np.asarray(p.s_mu)
    base = p.mu * gaussian_density(d0, P0, det0)
    decay = np.exp(-p.beta * cache.dt)
    pair = p.alpha * decay * gaussian_density(cache.ds, P2, det2)
    lam = base + np.bincount(cache.row, weights=pair, minlength=cache.n)
    return lam, base, pair, d0, P0, P2


def sthp_loglik(p: SthpParams, seq: EventSequence, t_end: float | None = None, _cache: _PairCache | None = None) -> float:
    """Exact log-likelihood with the closed-form compensator.

    ``t_end`` defaults to the last event time. Returns ``-inf`` if some event has
    zero intensity.
    """
    if len(seq) == 0:
        T = seq.t_end if t_end is None else t_end
        return -p.mu * T
    cache = _cache or _PairCache(seq)
    T = cache.t[-1] if t_end is None else float(t_end)
    lam, *_ = _log_lambda_terms(p, cache)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        bad = int(np.argmax(~(lam > 0)))
        log.warning("non-positive intensity at event %d", bad)
        return -math.inf
    comp = p.mu * T - p.alpha / p.beta * np.sum(np.exp(-p.beta * (T - cache.t)) - 1.0)
    return float(np.sum(np.log(lam)) - comp)


# -- unconstrained parameterization for BFGS --------------------------------

def _chol_params(c) -> np.ndarray:
    L = np.linalg.cholesky(np.asarray(c, dtype=float))
    return np.array([math.log(L[0, 0]), L[1, 0], math.log(L[1, 1])])


def _chol_matrix(v) -> np.ndarray:
    return np.array([[math.exp(v[0]), 0.0], [v[1], math.exp(v[2])]])


def pack_sthp(p: SthpParams) -> np.ndarray:
    return np.concatenate([
        [math.log(p.mu), math.log(p.alpha), math.log(p.beta)],
        _chol_params(p.cov_g0),
        _chol_params(p.cov_g2),
    ])


def unpack_sthp(theta, s_mu) -> SthpParams:
    L0 = _chol_matrix(theta[3:6])
    L2 = _chol_matrix(theta[6:9])
    return SthpParams(
        math.exp(theta[0]), math.exp(theta[1]), math.exp(theta[2]), s_mu,
        L0 @ L0.T, L2 @ L2.T,
    )


def _chol_grad(G: np.ndarray, v) -> np.ndarray:
    """Map d(loglik)/d(Sigma) to the log-Cholesky coordinates ``v``."""
    L = _chol_matrix(v)
    dL = 2.0 * G @ L
    return np.array([dL[0, 0] * L[0, 0], dL[1, 0], dL[1, 1] * L[1, 1]])


def sthp_loglik_grad(theta, seq_cache: _PairCache, s_mu, T: float) -> tuple[float, np.ndarray]:
    """Log-likelihood and its gradient with respect to the packed parameters."""
    p = unpack_sthp(theta, s_mu)
    lam, base, pair, d0, P0, P2 = _log_lambda_terms(p, seq_cache)
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        return -math.inf, np.full(9, np.nan)
    t = seq_cache.t
    a, b = p.alpha, p.beta
    e = np.exp(-b * (T - t))
    ll = np.sum(np.log(lam)) - p.mu * T + a / b * np.sum(e - 1.0)

    inv = 1.0 / lam
    c0 = base * inv  # d log lambda_i / d log mu, per event
    cp = pair * inv[seq_cache.row]
    g = np.empty(9)
    g[0] = c0.sum() - p.mu * T
    g[1] = cp.sum() + a / b * np.sum(e - 1.0)
    g[2] = -b * np.sum(cp * seq_cache.dt) + b * (-a / b**2 * np.sum(e - 1.0) - a / b * np.sum((T - t) * e))

    def sigma_grad(c, d, P):
        M = np.array([
            [np.sum(c * d[:, 0] ** 2), np.sum(c * d[:, 0] * d[:, 1])],
            [np.sum(c * d[:, 0] * d[:, 1]), np.sum(c * d[:, 1] ** 2)],
        ])
        return 0.5 * P @ M @ P - 0.5 * c.sum() * P

    g[3:6] = _chol_grad(sigma_grad(c0, d0, P0), theta[3:6])
    g[6:9] = _chol_grad(sigma_grad(cp, seq_cache.ds, P2), theta[6:9])
    return float(ll), g


@dataclass
class FitResult:
    params: SthpParams
    loglik: float
    converged: bool
    iterations: int
    message: str
    trace: list[dict] = field(default_factory=list)


def default_sthp_init(seq: EventSequence) -> SthpParams:
    locs = seq.locations
    T = seq.times[-1]
    cov = np.cov(locs.T) if len(locs) > 2 else np.eye(2)
    cov = cov + 1e-6 * np.eye(2)
    return SthpParams(
        mu=max(0.5 * len(seq) / T, 1e-3), alpha=0.5, beta=1.0,
        s_mu=locs.mean(axis=0), cov_g0=cov, cov_g2=0.25 * cov,
    )


def fit_sthp_mle(
    seq: EventSequence,
    init: SthpParams | None = None,
    gtol: float = 1e-6,
    max_iter: int = 500,
    gradient: str = "analytic",
    fd_step: float = 1e-5,
    t_end: float | None = None,
) -> FitResult:
    """Maximum-likelihood STHP fit by BFGS.

    ``s_mu`` is fixed to the mean event location; the other nine scalars are
    optimized in log / log-Cholesky coordinates. ``gradient`` is ``"analytic"``
    or ``"fd"`` (central differences, step ``fd_step`` relative). The objective is
    the per-event negative log-likelihood, so ``gtol`` does not depend on the
    sequence length.
    """
    if len(seq) < 2:
        raise ValueError("need at least two events to fit")
    init = init or default_sthp_init(seq)
    s_mu = tuple(seq.locations.mean(axis=0))
    cache = _PairCache(seq)
    T = cache.t[-1] if t_end is None else float(t_end)
    theta0 = pack_sthp(replace(init, s_mu=s_mu))
    n = len(seq)

    def fun(theta):
        ll, g = sthp_loglik_grad(theta, cache, s_mu, T)
        if not math.isfinite(ll):
            return math.inf, np.zeros_like(theta)
        return -ll / n, -g / n

    def fun_fd(theta):
        f0 = fun(theta)[0]
        if not math.isfinite(f0):
            return f0, np.zeros_like(theta)
        g = np.empty_like(theta)
        for k in range(len(theta)):
            h = fd_step * max(1.0, abs(theta[k]))
            tp, tm = theta.copy(), theta.copy()
            tp[k] += h
            tm[k] -= h
            g[k] = (fun(tp)[0] - fun(tm)[0]) / (2 * h)
        return f0, g

    objective = fun if gradient == "analytic" else fun_fd
    f_init = objective(theta0)[0]
    if not math.isfinite(f_init):
        raise NumericError("negative log-likelihood is not finite at the initial parameters")

    trace = [{"iteration": 0, "loglik": -f_init * n}]

    def callback(xk):
        trace.append({"iteration": len(trace), "loglik": -objective(xk)[0] * n})

    res = minimize(objective, theta0, jac=True, method="BFGS", callback=callback,
                   options={"gtol": gtol, "maxiter": max_iter})
    params = unpack_sthp(res.x, s_mu)
    ll = -float(res.fun) * n
    return FitResult(params, ll, bool(res.success), int(res.nit), str(res.message), trace)


# -- STSC ------------------------------------------------------------------

class StscKernels:
    """Region-truncated g0/g2 evaluators for an STSC parameter set."""

    def __init__(self, p: StscParams):
        self.p = p
        self.g0_mass = gauss2_mass(p.g0, p.region)
        self.P0, self.det0 = p.g0.precision, p.g0.det
        self.cov2 = np.asarray(p.cov_g2)
        self.P2, self.det2 = np.linalg.inv(self.cov2), np.linalg.det(self.cov2)
        self.diag2 = self.cov2[0, 1] == 0.0

    def g0(self, s):
        s = np.asarray(s, dtype=float)
        val = gaussian_density(s - np.asarray(self.p.g0.mean), self.P0, self.det0) / self.g0_mass
        return np.where(self.p.region.contains(s), val, 0.0)

    def g2_mass(self, centers) -> np.ndarray:
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        if self.diag2:
            from scipy.special import ndtr

            (x0, y0), (x1, y1) = self.p.region.lo, self.p.region.hi
            sx, sy = math.sqrt(self.cov2[0, 0]), math.sqrt(self.cov2[1, 1])
            px = ndtr((x1 - centers[:, 0]) / sx) - ndtr((x0 - centers[:, 0]) / sx)
            py = ndtr((y1 - centers[:, 1]) / sy) - ndtr((y0 - centers[:, 1]) / sy)
            return px * py
        return np.array([gauss2_mass(Gauss2(tuple(c), self.p.cov_g2), self.p.region) for c in centers])

    def g2(self, s, centers, masses=None):
        """``g2(s, c_j)`` for every centre; shape ``s.shape[:-1] + (len(centers),)``."""
        s = np.asarray(s, dtype=float)
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        if masses is None:
            masses = self.g2_mass(centers)
        dens = gaussian_density(s[..., None, :] - centers, self.P2, self.det2) / masses
        return np.where(np.asarray(self.p.region.contains(s))[..., None], dens, 0.0)


def stsc_intensity(p: StscParams, hist: EventSequence, s, t: float, kernels: StscKernels | None = None):
    """``mu * exp(g0(s) * beta * t - alpha * sum_{t_i < t} g2(s, s_i))``."""
    k = kernels or StscKernels(p)
    s = np.asarray(s, dtype=float)
    times, locs = _history_before(hist, t)
    expo = k.g0(s) * p.beta * t
    if len(times):
        expo = expo - p.alpha * k.g2(s, locs).sum(axis=-1)
    out = p.mu * np.exp(expo)
    return float(out) if np.ndim(out) == 0 else out


def _exp_increment(a, t0: float, t1: float):
    """``int_{t0}^{t1} exp(a tau) dtau`` elementwise, stable for small ``a``."""
    a = np.asarray(a, dtype=float)
    small = np.abs(a) * (t1 - t0) < 1e-10
    safe_a = np.where(small, 1.0, a)
    val = np.exp(safe_a * t0) * np.expm1(safe_a * (t1 - t0)) / safe_a
    return np.where(small, (t1 - t0) * np.exp(a * t0), val)


def stsc_compensator_grid(p: StscParams, seq: EventSequence, T: float, grid=(101, 101), kernels=None) -> float:
    """``int_S int_0^T lambda`` with a midpoint rule in space and exact time integration per inter-event interval."""
    k = kernels or StscKernels(p)
    gx, gy, cell = p.region.cell_centers(*grid)
    cells = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    a = k.g0(cells) * p.beta
    suppression = np.zeros(len(cells))
    times = seq.times
    locs = seq.locations
    masses = k.g2_mass(locs) if len(locs) else np.zeros(0)
    total = 0.0
    t_prev = 0.0
    for i, t_i in enumerate(times):
        t_stop = min(t_i, T)
        if t_stop > t_prev:
            total += np.sum(np.exp(-suppression) * _exp_increment(a, t_prev, t_stop))
            t_prev = t_stop
        if t_i >= T:
            break
        suppression += p.alpha * k.g2(cells, locs[i:i + 1], masses[i:i + 1])[:, 0]
    if T > t_prev:
        total += np.sum(np.exp(-suppression) * _exp_increment(a, t_prev, T))
    return float(p.mu * total * cell)


def stsc_loglik(p: StscParams, seq: EventSequence, grid=(101, 101), t_end: float | None = None) -> float:
    k = StscKernels(p)
    if len(seq) == 0:
        T = seq.t_end if t_end is None else t_end
        return -stsc_compensator_grid(p, seq, T, grid, k)
    T = seq.times[-1] if t_end is None else float(t_end)
    times, locs = seq.times, seq.locations
    masses = k.g2_mass(locs)
    loglam = 0.0
    for i in range(len(times)):
        expo = k.g0(locs[i]) * p.beta * times[i]
        if i:
            expo -= p.alpha * k.g2(locs[i], locs[:i], masses[:i]).sum()
        loglam += math.log(p.mu) + float(expo)
    return float(loglam - stsc_compensator_grid(p, seq, T, grid, k))


def fit_stsc_mle(seq: EventSequence, init: StscParams, grid=(51, 51), max_iter: int = 200) -> tuple[StscParams, float, bool]:
    """Experimental: fit ``(mu, alpha, beta)`` with kernels held fixed, by BFGS on log-parameters with numerical gradients."""

    def build(theta):
        return replace(init, mu=math.exp(theta[0]), alpha=math.exp(theta[1]), beta=math.exp(theta[2]))

    def nll(theta):
        val = stsc_loglik(build(theta), seq, grid)
        return -val if math.isfinite(val) else 1e300

    theta0 = np.log([init.mu, init.alpha, init.beta])
    res = minimize(nll, theta0, method="BFGS", options={"maxiter": max_iter})
    return build(res.x), -float(res.fun), bool(res.success)


# -- prediction ------------------------------------------------------------

@dataclass
class TimeHorizon:
    """Upper integration limit and the probability mass that the next event exists."""

    t_hi: float
    breaks: np.ndarray
    mass: float


def find_horizon(
    intensity_t: Callable,
    compensator: Callable,
    t_n: float,
    tail_tol: float = 1e-8,
    total_compensator: float = math.inf,
    max_gaps: float = 1e6,
) -> TimeHorizon:
    """Double the integration span until the (conditional) survival drops below ``tail_tol``.

    ``total_compensator`` is the limit of the compensator at infinity when it is
    finite, in which case the next-event distribution is defective and the
    survival is measured relative to the conditional law given an event occurs.
    """
    lam0 = float(intensity_t(np.array([t_n]))[0])
    gap = 1.0 / lam0 if lam0 > 0 else 1.0
    mass = 1.0 if not math.isfinite(total_compensator) else -math.expm1(-total_compensator)
    if mass <= 0:
        raise NumericError("next-event distribution has zero mass")
    s_inf = 0.0 if not math.isfinite(total_compensator) else math.exp(-total_compensator)
    breaks = [t_n]
    span = gap
    while True:
        t_hi = t_n + span
        breaks.append(t_hi)
        surv = math.exp(-float(compensator(np.array([t_hi]))[0]))
        if (surv - s_inf) / mass < tail_tol:
            return TimeHorizon(t_hi, np.array(breaks), mass)
        if span > max_gaps * gap:
            raise NumericError(
                f"survival {surv:.3g} has not reached tail tolerance {tail_tol:g} within {max_gaps:g} mean gaps"
            )
        span *= 2.0


def predict_next_time(
    intensity_t: Callable,
    compensator: Callable,
    t_n: float,
    tail_tol: float = 1e-8,
    total_compensator: float = math.inf,
    tol: float = 1e-10,
) -> float:
    """Expected next event time ``int t lambda(t) exp(-Lambda(t)) dt`` over ``(t_n, inf)``.

    ``intensity_t`` and ``compensator`` are vectorized in ``t``; the compensator is
    measured from ``t_n``. A finite ``total_compensator`` conditions on the event
    occurring at all.
    """
    h = find_horizon(intensity_t, compensator, t_n, tail_tol, total_compensator)

    def integrand(t):
        return (t - t_n) * intensity_t(t) * np.exp(-compensator(t))

    acc = 0.0
    for a, b in zip(h.breaks[:-1], h.breaks[1:]):
        acc += quad(integrand, a, b, tol=tol)
    return t_n + acc / h.mass


def predict_next_location_sthp(p: SthpParams, hist: EventSequence, tail_tol: float = 1e-8, tol: float = 1e-10) -> np.ndarray:
    """``int (mu s_mu + sum alpha e^{-beta(t-t_j)} s_j) exp(-Lambda(t)) dt`` over ``(t_n, inf)``."""
    times, locs = hist.times, hist.locations
    t_n = float(times[-1]) if len(times) else 0.0

    def lam(t):
        return sthp_temporal_intensity(p, hist, t)

    def comp(t):
        return sthp_compensator(p, hist, t_n, t)

    def integrand(t):
        w = p.alpha * np.exp(-p.beta * (t[:, None] - times))
        first = p.mu * np.asarray(p.s_mu)[None, :] + w @ locs
        return first * np.exp(-comp(t))[:, None]

    h = find_horizon(lam, comp, t_n, tail_tol)
    acc = np.zeros(2)
    for a, b in zip(h.breaks[:-1], h.breaks[1:]):
        acc += quad_vec(integrand, a, b, tol=tol)
    return acc


def predict_next_time_sthp(p: SthpParams, hist: EventSequence, tail_tol: float = 1e-8) -> float:
    t_n = float(hist.times[-1]) if len(hist) else 0.0
    return predict_next_time(
        lambda t: sthp_temporal_intensity(p, hist, t),
        lambda t: sthp_compensator(p, hist, t_n, t),
        t_n, tail_tol,
    )
