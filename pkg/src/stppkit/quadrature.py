"""Adaptive Gauss–Legendre quadrature in one and two dimensions.

Each panel is integrated with an ``order``-point rule and again as two (1D) or
four (2D) half-panels; the panel is accepted when the two estimates agree to
within its share of the tolerance, otherwise the halves are queued.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .core import NumericError

_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _RULES:
        _RULES[order] = np.polynomial.legendre.leggauss(order)
    return _RULES[order]


def _panels_1d(f, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Rule applied to each panel; returns shape ``(panels,)`` or ``(panels, k)``."""
    x, w = _rule(order)
    half = 0.5 * (b - a)
    nodes = 0.5 * (b + a)[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float)
    vals = vals.reshape(nodes.shape + vals.shape[1:])
    out = np.einsum("j,pj...->p...", w, vals)
    return out * half.reshape((-1,) + (1,) * (out.ndim - 1))


def quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    rtol: float = 0.0,
    order: int = 15,
    max_panels: int = 20000,
) -> float:
    """Integrate a vectorized scalar function over ``[a, b]``.

    Stops when the accumulated error estimate is below ``max(tol, rtol*|I|)``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    lo = np.array([a])
    hi = np.array([b])
    total = 0.0
    err_total = 0.0
    width = b - a
    done_panels = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        whole = _panels_1d(f, lo, hi, order)
        left = _panels_1d(f, lo, mid, order)
        right = _panels_1d(f, mid, hi, order)
        halves = left + right
        err = np.abs(halves - whole)
        if not np.all(np.isfinite(halves)):
            raise NumericError("quadrature integrand is not finite")
        allowed = tol * (hi - lo) / width
        if rtol:
            allowed = np.maximum(allowed, rtol * abs(total + halves.sum()) * (hi - lo) / width)
        ok = (err <= allowed) | ((hi - lo) < 1e-13 * max(1.0, abs(b)))
        total += halves[ok].sum()
        err_total += err[ok].sum()
        done_panels += lo.size
        if done_panels > max_panels:
            raise NumericError(
                f"quadrature did not converge on [{a}, {b}] within {max_panels} panels "
                f"(estimate {total:.6g}, error so far {err_total:.3g})"
            )
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
    return sign * float(total)


def quad_vec(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    order: int = 15,
    max_panels: int = 20000,
) -> np.ndarray:
    """Like :func:`quad` for integrands returning ``(len(t), k)`` arrays; error is the max over components."""
    if a == b:
        return np.zeros(np.asarray(f(np.array([float(a)]))).shape[1:])
    lo = np.array([float(a)])
    hi = np.array([float(b)])
    total = 0.0
    width = b - a
    done_panels = 0
    while lo.size:
        mid = 0.5 * (lo + hi)
        whole = _panels_1d(f, lo, hi, order)
        halves = _panels_1d(f, lo, mid, order) + _panels_1d(f, mid, hi, order)
        if not np.all(np.isfinite(halves)):
            raise NumericError("quadrature integrand is not finite")
        err = np.abs(halves - whole).max(axis=1)
        ok = (err <= tol * (hi - lo) / width) | ((hi - lo) < 1e-13 * max(1.0, abs(b)))
        total = total + halves[ok].sum(axis=0)
        done_panels += lo.size
        if done_panels > max_panels:
            raise NumericError(f"vector quadrature did not converge on [{a}, {b}]")
        keep = ~ok
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
    return np.asarray(total, dtype=float)


def _panels_2d(f, x0, x1, y0, y1, order):
    x, w = _rule(order)
    hx = 0.5 * (x1 - x0)
    hy = 0.5 * (y1 - y0)
    mx = 0.5 * (x1 + x0)
    my = 0.5 * (y1 + y0)
    X = mx[:, None, None] + hx[:, None, None] * x[None, :, None]
    Y = my[:, None, None] + hy[:, None, None] * x[None, None, :]
    X, Y = np.broadcast_arrays(X, Y)
    vals = np.asarray(f(X.ravel(), Y.ravel()), dtype=float).reshape(X.shape)
    return np.einsum("i,j,pij->p", w, w, vals) * hx * hy


def dblquad(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: tuple[float, float],
    hi: tuple[float, float],
    tol: float = 1e-8,
    order: int = 10,
    max_panels: int = 200000,
) -> float:
    """Integrate ``f(x, y)`` (vectorized) over the rectangle ``[lo, hi]``."""
    x0 = np.array([float(lo[0])])
    x1 = np.array([float(hi[0])])
    y0 = np.array([float(lo[1])])
    y1 = np.array([float(hi[1])])
    area = (hi[0] - lo[0]) * (hi[1] - lo[1])
    total = 0.0
    done_panels = 0
    while x0.size:
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)
        whole = _panels_2d(f, x0, x1, y0, y1, order)
        quads = (
            _panels_2d(f, x0, xm, y0, ym, order)
            + _panels_2d(f, xm, x1, y0, ym, order)
            + _panels_2d(f, x0, xm, ym, y1, order)
            + _panels_2d(f, xm, x1, ym, y1, order)
        )
        if not np.all(np.isfinite(quads)):
            raise NumericError("2D quadrature integrand is not finite")
        err = np.abs(quads - whole)
        panel_area = (x1 - x0) * (y1 - y0)
        ok = (err <= tol * panel_area / area) | (panel_area < 1e-20 * area)
        total += quads[ok].sum()
        done_panels += x0.size
        if done_panels > max_panels:
            raise NumericError(f"2D quadrature did not converge (estimate {total:.6g})")
        k = ~ok
        x0, xm_, x1, y0, ym_, y1 = x0[k], xm[k], x1[k], y0[k], ym[k], y1[k]
        x0, x1, y0, y1 = (
            np.concatenate([x0, xm_, x0, xm_]),
            np.concatenate([xm_, x1, xm_, x1]),
            np.concatenate([y0, y0, ym_, ym_]),
            np.concatenate([ym_, ym_, y1, y1]),
        )
    return float(total)
