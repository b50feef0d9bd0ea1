"""Finite-difference gradient checks shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from stppkit.core import Event, EventSequence, SpatialRegion
from stppkit.deepstpp import DeepStppConfig, elbo_loss, init_weights
from stppkit.ndiff import (
    Tape,
    Tensor,
    concat,
    exp,
    expm1_ratio,
    gelu,
    layer_norm,
    log,
    matmul,
    slice_,
    softmax,
    softplus,
    tanh,
    tmean,
    tsum,
)
from stppkit.rng import Rng


def grad_of(fn, *arrays):
    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    with Tape() as tape:
        out = fn(*leaves)
    tape.backward(out)
    return [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data) for leaf in leaves]


def fd_grad(fn, *arrays):
    """Central differences with h = 1e-5 * max(1, |x|)."""
    grads = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            h = 1e-5 * max(1.0, abs(a[idx]))
            up = [x.copy() for x in arrays]
            dn = [x.copy() for x in arrays]
            up[k][idx] += h
            dn[k][idx] -= h
            g[idx] = (fn(*map(Tensor, up)).item() - fn(*map(Tensor, dn)).item()) / (2 * h)
        grads.append(g)
    return grads


def rel_err(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


# one scalar-valued graph per op, fed with standard normal inputs
OPS = {
    "matmul": (lambda a, b: tsum(matmul(a, b) ** 2), [(3, 4), (4, 2)]),
    "add_mul": (lambda a, b: tsum((a + b) * a - b / (1.5 + a * a)), [(3, 2), (2,)]),
    "softplus": (lambda a: tsum(softplus(a) * a), [(6,)]),
    "exp_log": (lambda a: tsum(log(exp(a) + 1.0) * exp(-a)), [(2, 3)]),
    "sum_mean": (lambda a: tsum(tsum(a, axis=0) ** 2) + tmean(a, axis=1).sum() * 3.0, [(4, 3)]),
    "softmax": (lambda a, w: tsum(softmax(a, axis=0) * w), [(3, 4), (3, 4)]),
    "layer_norm": (lambda a, w: tsum(layer_norm(a) * w), [(2, 5), (2, 5)]),
    "concat_slice": (lambda a, b: tsum(slice_(concat([a, b], axis=1), (slice(None), slice(1, 4))) ** 2), [(2, 3), (2, 2)]),
    "fancy_index": (lambda a: tsum(slice_(a, np.array([0, 2, 0])) ** 3), [(4,)]),
    "gelu_tanh": (lambda a: tsum(gelu(a) * tanh(a)), [(5,)]),
    "expm1_ratio": (lambda a: tsum(expm1_ratio(a) * a), [(6,)]),
    "reshape_T": (lambda a: tsum(a.reshape(3, 2).transpose(1, 0) @ np.arange(3.0).reshape(3, 1)), [(2, 3)]),
}


def op_trial(name: str, seed: int) -> float:
    fn, shapes = OPS[name]
    gen = np.random.default_rng(seed)
    arrays = [gen.normal(size=s) for s in shapes]
    return max(rel_err(g, f) for g, f in zip(grad_of(fn, *arrays), fd_grad(fn, *arrays)))


TINY = DeepStppConfig(d_model=8, layers=1, heads=2, d_hidden=8, d_z=4, dec_hidden=8, dec_hidden_layers=1,
                      n_reps=2, max_history=3, kl_weight=0.1)


def elbo_trial(seed: int, cfg: DeepStppConfig = TINY, n_coords: int = 12) -> float:
    """Worst relative error of the elbo gradient on a random 3-event window.

    Checks the directional derivative along a random direction over every
    weight, plus ``n_coords`` single coordinates.
    """
    gen = np.random.default_rng(seed)
    times = np.sort(gen.uniform(0, 2, 4))
    locs = gen.uniform(-1, 1, (4, 2))
    window = EventSequence.from_arrays(times[:3], locs[:3])
    target = Event(float(times[3]), float(locs[3, 0]), float(locs[3, 1]))
    region = SpatialRegion.rectangle((-1.2, -1.2), (1.2, 1.2))
    reps = gen.uniform(-1.2, 1.2, (cfg.n_reps, 2))
    params = init_weights(cfg, Rng(seed))

    def loss_value() -> float:
        return elbo_loss(window, target, cfg, params, Rng(seed + 1), region, reps)[0]

    for p in params.values():
        p.zero_grad()
    loss_value()
    grads = {k: p.grad.copy() for k, p in params.items()}
    names = sorted(params)
    direction = {k: gen.standard_normal(params[k].shape) for k in names}

    def shifted(step: float, which) -> float:
        saved = {k: params[k].data.copy() for k in which}
        for k, d in which.items():
            params[k].data = params[k].data + step * d
        out = loss_value()
        for k in which:
            params[k].data = saved[k]
        return out

    h = 1e-5
    fd = (shifted(h, direction) - shifted(-h, direction)) / (2 * h)
    an = sum(float(np.sum(grads[k] * direction[k])) for k in names)
    worst = abs(fd - an) / max(abs(fd), 1e-3)
    for _ in range(n_coords):
        k = names[gen.integers(len(names))]
        idx = tuple(gen.integers(s) for s in params[k].shape)
        unit = np.zeros(params[k].shape)
        unit[idx] = 1.0
        step = 1e-5 * max(1.0, abs(params[k].data[idx]))
        fd = (shifted(step, {k: unit}) - shifted(-step, {k: unit})) / (2 * step)
        an = grads[k][idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-3))
    return float(worst)
