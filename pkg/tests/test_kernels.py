from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from stppkit.core import NumericError, SpatialRegion
from stppkit.kernels import (
    ExpDecay,
    Gauss2,
    exp_temporal,
    gauss2_mass,
    gauss2_pdf,
    gauss2_truncated_pdf,
    rbf_normalizer,
    rbf_spatial,
)


def test_gauss2_reference_values():
    g = Gauss2((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0)))
    assert gauss2_pdf(g, (0, 0)) == pytest.approx(0.1591549, abs=1e-7)
    assert gauss2_pdf(g, (1, 0)) == pytest.approx(0.0965324, abs=1e-7)
    g0 = Gauss2((0.0, 0.0), ((0.2, 0.0), (0.0, 0.2)))
    assert gauss2_pdf(g0, (0, 0)) == pytest.approx(0.7957747, abs=1e-7)


def test_gauss2_rejects_bad_cov():
    with pytest.raises(ValueError):
        Gauss2((0, 0), ((1.0, 0.5), (0.4, 1.0)))
    with pytest.raises(NumericError):
        Gauss2((0, 0), ((1.0, 1.0), (1.0, 1.0)))


def test_gauss2_unit_mass_correlated():
    g = Gauss2((0.3, -0.2), ((0.5, 0.2), (0.2, 0.3)))
    mass = integrate.dblquad(lambda y, x: gauss2_pdf(g, (x, y)), -8, 8, -8, 8, epsabs=1e-10)[0]
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_truncated_pdf():
    g = Gauss2.isotropic((0.5, 0.5), 0.25)
    box = SpatialRegion.rectangle((0, 0), (1, 1))
    mass = (norm.cdf(1) - norm.cdf(-1)) ** 2
    assert gauss2_truncated_pdf(g, (0.5, 0.5), box) == pytest.approx(gauss2_pdf(g, (0.5, 0.5)) / mass, rel=1e-10)
    assert gauss2_truncated_pdf(g, (1.5, 0.5), box) == 0.0
    huge = SpatialRegion.rectangle((-50, -50), (50, 50))
    std = Gauss2.isotropic((0, 0), 1.0)
    assert gauss2_truncated_pdf(std, (0.3, 0.1), huge) == pytest.approx(gauss2_pdf(std, (0.3, 0.1)), rel=1e-6)


def test_truncated_correlated_integrates_to_one():
    g = Gauss2((0.4, 0.6), ((0.3, 0.1), (0.1, 0.2)))
    box = SpatialRegion.rectangle((0, 0), (1, 1))
    m = gauss2_mass(g, box)
    tot = integrate.dblquad(lambda y, x: gauss2_truncated_pdf(g, (x, y), box, m), 0, 1, 0, 1, epsabs=1e-11)[0]
    assert tot == pytest.approx(1.0, abs=1e-6)


def test_rbf_normalizer_by_polar_quadrature():
    # int_0^inf 2 pi r exp(-r) dr = 2 pi
    alpha = integrate.quad(lambda r: 2 * math.pi * r * math.exp(-r), 0, np.inf)[0]
    assert rbf_normalizer(1.0) == pytest.approx(alpha, rel=1e-10)
    assert rbf_spatial((0, 0), (0, 0), 1.0) == pytest.approx(0.1591549, abs=1e-7)
    assert rbf_spatial((1, 0), (0, 0), 2.0) == pytest.approx(0.0861571, abs=1e-7)


@given(st.floats(0.1, 10.0))
def test_rbf_integrates_to_one(gamma):
    # radial integral of the normalized kernel, independent of the library
    tot = integrate.quad(lambda r: 2 * math.pi * r * rbf_spatial((r, 0.0), (0.0, 0.0), gamma), 0, np.inf, epsabs=1e-12)[0]
    assert tot == pytest.approx(1.0, abs=1e-6)


def test_exp_temporal():
    assert exp_temporal(3.0, 3.0, 0.7) == 1.0
    assert exp_temporal(1.0, 0.0, 1.0) == pytest.approx(0.3678794, abs=1e-7)
    assert exp_temporal(2.0, 0.0, -0.5) == pytest.approx(2.7182818, abs=1e-7)
    assert exp_temporal(-2.0, 0.0, 0.4) == exp_temporal(2.0, 0.0, 0.4)


def test_exp_decay():
    k = ExpDecay(0.5, 2.0)
    assert k(0.0) == 0.5
    assert k.integral(np.inf) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        ExpDecay(0.5, 0.0)
