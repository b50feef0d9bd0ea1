from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from stppkit.core import NumericError
from stppkit.quadrature import dblquad, quad, quad_vec


def test_smooth_and_kinked_integrands():
    assert quad(np.exp, 0.0, 1.0) == pytest.approx(math.e - 1, abs=1e-13)
    assert quad(lambda t: np.abs(t - 0.3), 0.0, 1.0) == pytest.approx(0.29, abs=1e-12)


@given(st.floats(-3, 3), st.floats(0.1, 5.0), st.floats(0.01, 4.0))
def test_matches_scipy(a, width, k):
    f = lambda t: np.exp(-k * t) * np.cos(3 * t)  # noqa: E731
    ref = integrate.quad(lambda t: math.exp(-k * t) * math.cos(3 * t), a, a + width, epsabs=1e-13)[0]
    assert quad(f, a, a + width) == pytest.approx(ref, abs=1e-10)


def test_vector_integrand():
    out = quad_vec(lambda t: np.stack([t, t**2], axis=-1), 0.0, 2.0)
    assert out == pytest.approx([2.0, 8.0 / 3.0], abs=1e-12)


def test_planar_exponential_mass():
    f = lambda x, y: np.exp(-np.hypot(x, y))  # noqa: E731
    assert dblquad(f, (-40, -40), (40, 40)) == pytest.approx(2 * math.pi, abs=1e-8)


def test_non_finite_integrand_raises():
    with pytest.raises(NumericError):
        quad(lambda t: np.full_like(t, np.nan), 0.0, 1.0)
