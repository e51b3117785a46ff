import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffmig.exceptions import DataError, NumericalDomainError
from diffmig.model import (
    ConstantDiffusion,
    ErrorCumulants,
    IncrementSeries,
    PiecewiseConstantDiffusion,
    TrackObservation,
    TrackSeries,
    deltaX_cumulants,
    extract_increments,
    integrate_diffusion,
    joint_cumulant_obs,
    obs_increment_cov,
    standardize_increments,
    summarize,
    tracks_from_columns,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_extract_increments_arithmetic():
    tr = TrackSeries("a", [0, 1, 2], [0, 2, 4], [1, 1, 0])
    ix, iy = extract_increments(tr)
    assert ix.dv.tolist() == [2, 2]
    assert ix.dt.tolist() == [1, 1]
    assert iy.dv.tolist() == [0, -1]


def test_non_increasing_time_rejected():
    with pytest.raises(DataError, match="non-increasing time at index 2"):
        TrackSeries("a", [0, 1, 1], [0, 1, 2], [0, 0, 0])


def test_track_needs_two_finite_fixes():
    with pytest.raises(DataError):
        TrackSeries("a", [0], [0], [0])
    with pytest.raises(DataError):
        TrackSeries("a", [0, 1], [0, math.nan], [0, 0])


def test_track_arrays_are_read_only():
    tr = TrackSeries("a", [0, 1], [0, 1], [0, 1])
    with pytest.raises(ValueError):
        tr.x[0] = 5.0


def test_observation_round_trip():
    obs = [TrackObservation("p", t, t * 2, -t) for t in (0.0, 0.5, 2.0)]
    tr = TrackSeries.from_observations(obs)
    assert tr.observations == obs


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=2, max_size=60), st.data())
def test_telescoping_is_bit_exact(xs, data):
    n = len(xs)
    gaps = data.draw(st.lists(st.floats(1e-6, 1e3), min_size=n - 1, max_size=n - 1))
    t = np.concatenate([[0.0], np.cumsum(gaps)])
    if np.any(np.diff(t) <= 0):
        return
    tr = TrackSeries("h", t, xs, xs[::-1])
    ix, iy = extract_increments(tr)
    assert ix.total() == tr.x[-1] - tr.x[0]
    assert iy.total() == tr.y[-1] - tr.y[0]
    assert ix.duration() == t[-1] - t[0]


def test_summarize():
    tr = TrackSeries("a", [0, 1, 3], [1, 2, 5], [0, 0, -1])
    s = summarize(tr)
    assert (s.duration, s.dX, s.dY, s.n) == (3.0, 4.0, -1.0, 2)


def test_increment_series_rejects_non_positive_dt():
    with pytest.raises(DataError):
        IncrementSeries("x", [1.0, 2.0], [1.0, 0.0])


@pytest.mark.parametrize("law,t0,t1,expected", [
    (ConstantDiffusion(0.5), 0.0, 4.0, 2.0),
    (PiecewiseConstantDiffusion((0.0, 1.0), (1.0, 3.0)), 0.0, 2.0, 4.0),
    (ConstantDiffusion(0.5), 3.0, 3.0, 0.0),
    (PiecewiseConstantDiffusion((0.0, 1.0), (1.0, 3.0)), 2.0, 2.0, 0.0),
])
def test_integrate_diffusion(law, t0, t1, expected):
    assert integrate_diffusion(law, t0, t1) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 5), st.floats(0, 5))
def test_integrate_diffusion_additive(a, w1, w2):
    law = PiecewiseConstantDiffusion((-1.0, 0.5, 2.0), (0.3, 2.0, 0.7))
    b, c = a + w1, a + w1 + w2
    whole = integrate_diffusion(law, a, c)
    parts = integrate_diffusion(law, a, b) + integrate_diffusion(law, b, c)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_integrate_diffusion_rejects_reversed_interval():
    with pytest.raises(ValueError):
        integrate_diffusion(ConstantDiffusion(1.0), 2.0, 1.0)


def test_obs_increment_cov_examples():
    err = ErrorCumulants(variance=0.25)
    times = [2.0, 1.0, 1.0, 3.0]
    law = ConstantDiffusion(1.0)
    assert obs_increment_cov(0, 0, law, err, times) == pytest.approx(4.5)
    assert obs_increment_cov(1, 2, law, err, times) == -0.25
    assert obs_increment_cov(2, 1, law, err, times) == -0.25
    assert obs_increment_cov(0, 2, law, err, times) == 0.0
    with pytest.raises(ValueError):
        obs_increment_cov(0, 4, law, err, times)


def test_obs_increment_cov_time_dependent_law():
    law = PiecewiseConstantDiffusion((0.0, 1.0), (1.0, 3.0))
    # interval [0.5, 1.5]: 0.5*1 + 0.5*3 = 2
    assert obs_increment_cov(1, 1, law, ErrorCumulants(), [0.5, 1.0]) == pytest.approx(4.0)


def test_joint_cumulant_examples():
    err = ErrorCumulants(variance=1.0, k3=0.7, k4=5.0)
    assert joint_cumulant_obs(3, 4, 4, 2, err) == 0.0
    assert joint_cumulant_obs(4, 4, 4, 2, err) == 10.0
    assert joint_cumulant_obs(4, 4, 3, 2, err) == 5.0
    assert joint_cumulant_obs(3, 4, 3, 1, err) == -0.7
    assert joint_cumulant_obs(3, 4, 5, 1, err) == 0.7


@given(st.integers(3, 8), st.integers(0, 20), st.integers(2, 10), st.data())
def test_joint_cumulant_zero_beyond_neighbours(order, i, gap, data):
    count = data.draw(st.integers(0, order))
    err = ErrorCumulants(1.0, 1.0, 1.0, {k: 1.0 for k in range(5, 9)})
    assert joint_cumulant_obs(order, i, i + gap, count, err) == 0.0


def test_deltaX_cumulants_examples():
    c = deltaX_cumulants(ConstantDiffusion(1.0), [1, 1, 1], 0.5, ErrorCumulants(0.1))
    assert c.k1 == pytest.approx(1.5)
    assert c.k2 == pytest.approx(6.2)
    assert c.k3 == 0.0 and c.k4 == 0.0
    assert deltaX_cumulants(ConstantDiffusion(1.0), [1.0], 0.0, ErrorCumulants(1.0, 0, 3.0)).k4 == 6.0


def test_standardize_deterministic_path_is_zero():
    t = np.array([0.0, 0.3, 1.0, 2.5])
    ix, _ = extract_increments(TrackSeries("d", t, 0.7 * t, 0 * t))
    u = standardize_increments(ix, 0.7, 1.0)
    assert np.allclose(u, 0.0, atol=1e-15)


def test_standardize_scale_invariance():
    rng = np.random.default_rng(1)
    t = np.cumsum(rng.uniform(0.1, 1.0, 30))
    x = rng.normal(size=30).cumsum()
    c = 3.0
    ix, _ = extract_increments(TrackSeries("a", t, x, x))
    jx, _ = extract_increments(TrackSeries("a", t, c * x, c * x))
    u1 = standardize_increments(ix, 0.2, 0.8)
    u2 = standardize_increments(jx, 0.2 * c, 0.8 * c * c)
    assert np.allclose(u1, u2, rtol=1e-13, atol=1e-14)


def test_standardize_variance_with_error():
    from diffmig.simulate import ExponentialIntervals, GaussianNoise, add_noise, simulate_free_path

    beta, d, s2 = 0.3, 0.5, 0.04
    tr = simulate_free_path((beta, 0), ConstantDiffusion(d), ExponentialIntervals(1.0), 10_000, seed=4)
    tr = add_noise(tr, GaussianNoise(math.sqrt(s2)), seed=5)
    ix, _ = extract_increments(tr)
    u = standardize_increments(ix, beta, d, include_error=True, sigma2=s2)
    assert abs(np.var(u) - 1) < 0.05


def test_standardize_requires_positive_d():
    ix, _ = extract_increments(TrackSeries("a", [0, 1, 2], [0, 1, 2], [0, 0, 0]))
    with pytest.raises(NumericalDomainError):
        standardize_increments(ix, 1.0, 0.0)


def test_tracks_from_columns_groups_and_sorts():
    tracks = tracks_from_columns(["a", "b", "a", "b", "a"], [2, 0, 0, 1, 1], [3, 0, 1, 1, 2], [0] * 5)
    assert [tr.path_id for tr in tracks] == ["a", "b"]
    assert tracks[0].t.tolist() == [0, 1, 2]
    assert tracks[0].x.tolist() == [1, 2, 3]
