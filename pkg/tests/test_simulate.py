import math

import numpy as np
import pytest
from scipy import stats

from diffmig.greens import DomainRect
from diffmig.model import (
    ConstantDiffusion,
    DriftVector,
    PiecewiseConstantDiffusion,
    extract_increments,
    integrate_diffusion,
)
from diffmig.proportions import AreaRect
from diffmig.simulate import (
    ExponentialIntervals,
    FixedIntervals,
    GaussianNoise,
    LaplaceNoise,
    UniformIntervals,
    UniformNoise,
    _reflected_endpoints,
    add_noise,
    fold,
    max_reflected_step,
    mc_migration_proportion,
    simulate_free_path,
    simulate_free_paths,
    simulate_reflected_path,
    stream,
)


def test_zero_diffusion_is_deterministic():
    tr = simulate_free_path((0.5, -1.0), ConstantDiffusion(0.0), UniformIntervals(0.1, 2.0), 50,
                            x0=(3.0, 1.0), seed=1)
    assert np.allclose(tr.x, 3.0 + 0.5 * tr.t, rtol=0, atol=1e-12)
    assert np.allclose(tr.y, 1.0 - 1.0 * tr.t, rtol=0, atol=1e-12)


def test_fixed_interval_increment_variance():
    d, dt = 0.7, 0.4
    tr = simulate_free_path((0.0, 0.0), ConstantDiffusion(d), FixedIntervals((dt,)), 1_000_000, seed=2)
    ix, _ = extract_increments(tr)
    assert abs(np.var(ix.dv) / (2 * d * dt) - 1) < 0.01


def test_increments_pass_normality_check():
    n = 1_000_000
    tr = simulate_free_path((0.2, 0.0), PiecewiseConstantDiffusion((0.0, 50.0), (1.0, 2.0)),
                            ExponentialIntervals(0.1), n, seed=3)
    ix, _ = extract_increments(tr)
    law = PiecewiseConstantDiffusion((0.0, 50.0), (1.0, 2.0))
    t = tr.t
    u = (ix.dv - 0.2 * ix.dt) / np.sqrt(2 * integrate_diffusion(law, t[:-1], t[1:]))
    assert abs(stats.skew(u)) < 4 / math.sqrt(n)
    assert abs(stats.kurtosis(u)) < 8 / math.sqrt(n)


def test_same_seed_same_track():
    args = ((0.1, 0.2), ConstantDiffusion(1.0), ExponentialIntervals(0.3), 20)
    a = simulate_free_path(*args, seed=9)
    b = simulate_free_path(*args, seed=9)
    c = simulate_free_path(*args, seed=10)
    assert a == b
    assert a != c


def test_path_streams_independent_of_count():
    args = ((0.1, 0.2), ConstantDiffusion(1.0), ExponentialIntervals(0.3), 20)
    few = simulate_free_paths(*args, n_paths=2, seed=4)
    many = simulate_free_paths(*args, n_paths=5, seed=4)
    assert few[1] == many[1]


def test_n_must_be_at_least_two():
    with pytest.raises(ValueError):
        simulate_free_path((0, 0), ConstantDiffusion(1.0), ExponentialIntervals(1.0), 1)


def test_interval_distributions_validated():
    with pytest.raises(ValueError):
        FixedIntervals((1.0, 2.0), (0.5, 0.6))
    with pytest.raises(ValueError):
        UniformIntervals(0.0, 1.0)
    with pytest.raises(ValueError):
        ExponentialIntervals(-1.0)
    v = FixedIntervals((1.0, 2.0), (0.25, 0.75)).sample(stream(0), 10_000)
    assert abs(np.mean(v == 2.0) - 0.75) < 0.02


def test_zero_noise_is_identity():
    tr = simulate_free_path((0, 0), ConstantDiffusion(1.0), ExponentialIntervals(1.0), 10, seed=0)
    for model in (GaussianNoise(0.0), UniformNoise(0.0), LaplaceNoise(0.0)):
        assert add_noise(tr, model, seed=1) == tr


def test_uniform_noise_variance():
    e = UniformNoise(1.0).sample(stream(5), 10_000_000)
    assert abs(stats.kstat(e, 2) / (1 / 3) - 1) < 0.005
    assert UniformNoise(1.0).cumulants.k4 == pytest.approx(-2 / 15)


def test_laplace_noise_fourth_cumulant():
    e = LaplaceNoise(1.0).sample(stream(6), 10_000_000)
    assert abs(stats.kstat(e, 4) / 12 - 1) < 0.03
    c = LaplaceNoise(1.0).cumulants
    assert (c.variance, c.k4) == (2.0, 12.0)


def test_noise_higher_cumulants_against_scipy():
    # even moments of symmetric laws, turned into cumulants
    def cumulants_from_moments(m):
        m2, m4, m6 = m[2], m[4], m[6]
        return m2, m4 - 3 * m2**2, m6 - 15 * m4 * m2 + 30 * m2**3

    a, b = 0.7, 0.4
    cases = (
        (UniformNoise(a), {k: a**k / (k + 1) for k in (2, 4, 6)}),
        (LaplaceNoise(b), {k: math.factorial(k) * b**k for k in (2, 4, 6)}),
    )
    for model, m in cases:
        k2, k4, k6 = cumulants_from_moments(m)
        c = model.cumulants
        assert c.variance == pytest.approx(k2, rel=1e-12)
        assert c.k4 == pytest.approx(k4, rel=1e-12)
        assert c.cumulant(6) == pytest.approx(k6, rel=1e-12)


def test_fold_maps_into_domain():
    v = np.array([-3.3, -0.2, 0.0, 0.4, 1.0, 1.7, 5.25])
    f = fold(v, 1.0)
    assert np.allclose(f, [0.7, 0.2, 0.0, 0.4, 1.0, 0.3, 0.75])


def test_reflected_path_stays_inside():
    dom = DomainRect(1.0, 0.5)
    dt = max_reflected_step(2.0, (0.3, -0.2), dom)
    tr = simulate_reflected_path((0.3, -0.2), 2.0, dom, dt, 1.0, (0.5, 0.25), seed=1)
    assert np.all((tr.x >= 0) & (tr.x <= 1.0) & (tr.y >= 0) & (tr.y <= 0.5))


def test_pure_drift_reaches_wall_and_stays():
    dom = DomainRect(1.0, 1.0)
    tr = simulate_reflected_path((1.0, 0.0), 0.0, dom, 0.01, 3.0, (0.2, 0.5), seed=0)
    assert np.all((tr.x >= 0) & (tr.x <= 1))
    assert np.max(tr.x) == pytest.approx(1.0)
    assert np.all(tr.y == 0.5)


def test_reflected_same_seed_same_path():
    dom = DomainRect(1.0, 1.0)
    a = simulate_reflected_path((0, 0), 0.1, dom, 0.002, 0.5, (0.5, 0.5), seed=3)
    b = simulate_reflected_path((0, 0), 0.1, dom, 0.002, 0.5, (0.5, 0.5), seed=3)
    assert a == b


def test_step_rule_enforced_with_suggestion():
    with pytest.raises(ValueError, match="use dt_step <="):
        simulate_reflected_path((0, 0), 1.0, DomainRect(1.0, 1.0), 0.1, 1.0, (0.5, 0.5))


def test_reflected_stationary_distribution_uniform():
    # ensemble of independent endpoints after D T / L^2 = 20, histogram on 10 bins
    dom = DomainRect(1.0, 1.0)
    d, horizon = 1.0, 20.0
    n = 1000
    rng = stream(11)
    x0 = np.full(n, 0.05)
    x, y = _reflected_endpoints(x0, x0, DriftVector(0, 0), d, dom, horizon,
                                max_reflected_step(d, (0, 0), dom), rng)
    for v in (x, y):
        counts, _ = np.histogram(v, bins=10, range=(0, 1))
        chi2 = np.sum((counts - n / 10) ** 2 / (n / 10))
        assert chi2 < stats.chi2.ppf(0.99, 9)


def test_mc_full_domain_and_validation():
    dom = DomainRect(1.0, 1.0)
    a = AreaRect("a", (0.1, 0.3), (0.1, 0.3))
    w, se = mc_migration_proportion(a, AreaRect.whole(dom), (0, 0), 0.1, 0.5, dom, 1000, seed=0)
    assert (w, se) == (1.0, 0.0)
    with pytest.raises(ValueError):
        mc_migration_proportion(a, a, (0, 0), 0.1, 0.5, dom, 999, seed=0)


def test_mc_uniform_limit_half():
    dom = DomainRect(1.0, 1.0)
    a = AreaRect("a", (0.0, 0.2), (0.0, 1.0))
    left = AreaRect("left", (0.0, 0.5), (0.0, 1.0))
    w, se = mc_migration_proportion(a, left, (0, 0), 10.0, 1.0, dom, 2000, seed=1)
    assert abs(w - 0.5) <= 3 * se


def test_mc_deterministic():
    dom = DomainRect(1.0, 1.0)
    a = AreaRect("a", (0.0, 0.2), (0.0, 1.0))
    b = AreaRect("b", (0.4, 0.6), (0.0, 1.0))
    r1 = mc_migration_proportion(a, b, (0.1, 0), 0.2, 0.3, dom, 3000, seed=7, chunk=1000)
    r2 = mc_migration_proportion(a, b, (0.1, 0), 0.2, 0.3, dom, 3000, seed=7, chunk=1000)
    assert r1 == r2


def test_stream_accepts_tuples_and_generators():
    g = np.random.default_rng(0)
    assert stream(g) is g
    assert stream((1, 2)).random() == stream((1, 2)).random()
    assert stream(1, 2).random() == stream((1, 2)).random()
    assert stream(1, 2).random() != stream(1, 3).random()
