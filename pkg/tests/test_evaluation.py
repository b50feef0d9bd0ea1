from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stppkit.core import Event, EventSequence, SpatialRegion
from stppkit.deepstpp import DeepStppConfig, decode, encode, init_weights
from stppkit.deepstpp.model import batch_loss, make_batch
from stppkit.evaluation import (
    DensityGrid,
    PoissonPredictive,
    SthpPredictive,
    StscPredictive,
    density_grid_from_model,
    hellinger,
    loglik_split,
    mean_hellinger,
    query_times,
    temporal_mape,
)
from stppkit.kernels import Gauss2, gauss2_pdf
from stppkit.parametric import STHP_PRESETS, STSC_PRESETS
from stppkit.rng import Rng

WIDE = SpatialRegion.rectangle((-8.0, -8.0), (9.0, 8.0))


def gaussian_grid(mean, n=300, region=WIDE):
    gx, gy, _ = region.cell_centers(n, n)
    vals = gauss2_pdf(Gauss2.isotropic(mean, 1.0), np.stack([gx, gy], -1))
    return DensityGrid(region, n, n, vals).normalize()


def random_grid(gen, n=12):
    return DensityGrid(WIDE, n, n, gen.uniform(size=(n, n)) ** 3).normalize()


def test_gaussian_hellinger_closed_form():
    hd = hellinger(gaussian_grid((0, 0)), gaussian_grid((1, 0)))
    # Bhattacharyya coefficient of N(0, I) and N((1, 0), I) is exp(-1/8)
    assert hd == pytest.approx(math.sqrt(1 - math.exp(-1 / 8)), abs=1e-3)


def test_hellinger_bounds():
    g = gaussian_grid((0, 0), n=40)
    assert hellinger(g, g) == 0.0
    a = np.zeros((10, 10))
    b = np.zeros((10, 10))
    a[:5] = 1.0
    b[5:] = 1.0
    pa, pb = DensityGrid(WIDE, 10, 10, a).normalize(), DensityGrid(WIDE, 10, 10, b).normalize()
    assert hellinger(pa, pb) == pytest.approx(1.0)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_hellinger_is_symmetric_and_bounded(seed):
    gen = np.random.default_rng(seed)
    p, q = random_grid(gen), random_grid(gen)
    d = hellinger(p, q)
    assert 0 < d <= 1
    assert d == hellinger(q, p)


def test_hellinger_rejects_mismatch():
    gen = np.random.default_rng(0)
    with pytest.raises(ValueError):
        hellinger(random_grid(gen, 12), random_grid(gen, 10))
    raw = DensityGrid(WIDE, 12, 12, np.ones((12, 12)))
    with pytest.raises(ValueError):
        hellinger(raw, raw)


def test_mape():
    lam = lambda t: 1.0 + np.sin(t) ** 2  # noqa: E731
    times = np.linspace(0, 5, 100)
    assert temporal_mape(lam, lam, times) == 0.0
    assert temporal_mape(lambda t: 1.1 * lam(t), lam, times) == pytest.approx(10.0, abs=1e-12)
    with pytest.raises(ValueError):
        temporal_mape(lam, lambda t: np.zeros_like(t), times)


def test_poisson_loglik_split():
    unit = SpatialRegion.rectangle((0, 0), (1, 1))
    m = PoissonPredictive(2.5, unit, 3.0)
    ll_space, ll_time = loglik_split(m, Event(3.4, 0.2, 0.9))
    assert ll_time == pytest.approx(math.log(2.5) - 2.5 * 0.4, rel=1e-14)
    assert ll_space == pytest.approx(0.0, abs=1e-14)


def test_split_sums_to_joint_log_density():
    gen = np.random.default_rng(1)
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 5, 8)), gen.normal(size=(8, 2)))
    m = SthpPredictive(STHP_PRESETS["ds2"], hist)
    target = Event(5.7, 0.3, -0.4)
    ll_space, ll_time = loglik_split(m, target)
    joint = math.log(m.intensity(target.s, target.t)) - float(m.compensator(np.array([target.t]))[0])
    assert ll_space + ll_time == pytest.approx(joint, abs=1e-12)


def test_deepstpp_split_matches_training_loglik():
    cfg = DeepStppConfig(d_model=8, layers=1, heads=2, d_hidden=8, d_z=4, dec_hidden=8, dec_hidden_layers=1,
                         n_reps=3, max_history=6)
    gen = np.random.default_rng(2)
    win = EventSequence.from_arrays(np.sort(gen.uniform(0, 3, 5)), gen.uniform(-1, 1, (5, 2)))
    target = Event(3.6, 0.2, 0.5)
    region = SpatialRegion.rectangle((-1.2, -1.2), (1.2, 1.2))
    reps = gen.uniform(-1.2, 1.2, (3, 2))
    params = init_weights(cfg, Rng(0))
    batch = make_batch([win], cfg, region, 0, [target], reps)
    direct = float(batch_loss(batch, params, cfg, np.zeros((1, cfg.d_z))).loglik[0])
    kp, _ = decode(encode(win, cfg, params, region).mean, win, cfg, params, region, rep_locations=reps)
    assert sum(loglik_split(kp, target)) == pytest.approx(direct, abs=1e-10)


def test_zero_intensity_gives_no_support():
    from stppkit.deepstpp import KernelParams

    kp = KernelParams([0.0], [1.0], [1.0], [[0, 0]], [1.0], 1.0)
    assert loglik_split(kp, Event(2.0, 0.0, 0.0)) == (-math.inf, -math.inf)


def test_normalized_grid_mass_and_csv_roundtrip(tmp_path):
    gen = np.random.default_rng(3)
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 5, 6)), gen.normal(size=(6, 2)))
    m = SthpPredictive(STHP_PRESETS["ds1"], hist)
    g = density_grid_from_model(m, 5.5, SpatialRegion.rectangle((-3, -3), (3, 3)), 30, 25)
    assert g.mass() == pytest.approx(1.0, abs=1e-9)
    g.to_csv(tmp_path / "g.csv")
    back = DensityGrid.from_csv(tmp_path / "g.csv", normalized=True)
    assert np.array_equal(back.values, g.values)
    assert np.allclose(back.region.lo, g.region.lo) and np.allclose(back.region.hi, g.region.hi)


@pytest.mark.parametrize("preset", ["ds2", "ds3"])
def test_peak_follows_latest_event(preset):
    gen = np.random.default_rng(4)
    n = 10
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 10, n)), gen.uniform(-2, 2, (n, 2)))
    m = SthpPredictive(STHP_PRESETS[preset], hist)
    region = SpatialRegion.rectangle((-3, -3), (3, 3))
    g = density_grid_from_model(m, hist.times[-1] + 1e-3, region, 60, 60)
    i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
    gx, gy = g.centers()
    h = 6 / 60
    assert abs(gx[i, j] - hist.locations[-1, 0]) <= 1.5 * h
    assert abs(gy[i, j] - hist.locations[-1, 1]) <= 1.5 * h


def test_grid_refinement_changes_mass_little():
    p = STSC_PRESETS["ds1"]
    gen = np.random.default_rng(5)
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 5, 12)), gen.uniform(size=(12, 2)))
    m = StscPredictive(p, hist)
    coarse = density_grid_from_model(m, 5.5, p.region, 50, 50, normalized=False).mass()
    fine = density_grid_from_model(m, 5.5, p.region, 200, 200, normalized=False).mass()
    assert abs(coarse - fine) < 5e-3 * fine


def test_stsc_predictive_temporal_parts_agree():
    p = STSC_PRESETS["ds2"]
    gen = np.random.default_rng(6)
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 5, 10)), gen.uniform(size=(10, 2)))
    m = StscPredictive(p, hist, grid=(61, 61))
    from scipy import integrate

    ref = integrate.quad(lambda t: float(m.temporal_intensity(np.array([t]))[0]), m.t_n, m.t_n + 1.5)[0]
    assert float(m.compensator(np.array([m.t_n + 1.5]))[0]) == pytest.approx(ref, rel=1e-9)
    g = density_grid_from_model(m, m.t_n + 0.2, p.region, 61, 61, normalized=False)
    assert g.mass() == pytest.approx(float(m.temporal_intensity(np.array([m.t_n + 0.2]))[0]), rel=1e-9)


def test_mean_hellinger_of_truth_is_zero():
    gen = np.random.default_rng(7)
    hist = EventSequence.from_arrays(np.sort(gen.uniform(0, 5, 6)), gen.normal(size=(6, 2)))
    m = SthpPredictive(STHP_PRESETS["ds1"], hist)
    times = query_times(hist.times[-1], 2.0, 5)
    assert mean_hellinger(m, m, times, SpatialRegion.rectangle((-3, -3), (3, 3)), 20, 20) == 0.0
    assert times[-1] == pytest.approx(hist.times[-1] + 2.0) and times[0] > hist.times[-1]
