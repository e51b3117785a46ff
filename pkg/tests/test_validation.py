import math

import mpmath
import numpy as np
import pytest

from diffmig.validation import (
    batch_cumulant,
    check_adjacent_covariance,
    check_closed_vs_quadrature,
    check_erf,
    check_ftilde_zero,
    check_k4_deltaX,
    erf_series,
    random_nx_configurations,
)


@pytest.mark.parametrize("x", [-5.9, -1.0, -1e-8, 0.0, 0.3, 1.0, 2.5, 6.0])
def test_series_reference_matches_mpmath(x):
    with mpmath.workdps(50):
        ref = float(mpmath.erf(mpmath.mpf(x)))
    assert erf_series(x) == ref


def test_erf_and_ftilde_checks_pass():
    assert check_erf().passed
    assert check_ftilde_zero().passed


def test_quadrature_check_is_sensitive_to_sign_convention():
    good = check_closed_vs_quadrature(n_configs=10, seed=1)
    bad = check_closed_vs_quadrature(n_configs=10, seed=1, corrupt_sign=True)
    assert good.passed and not bad.passed
    assert bad.measured > 0.1


def test_random_configurations_stay_in_range():
    for cfg in random_nx_configurations(50, seed=2):
        a_i, a_f, bdt, s, length = cfg
        assert 0 <= a_i[0] < a_i[1] <= length and 0 <= a_f[0] < a_f[1] <= length
        assert abs(bdt) <= length and s > 0


def test_batch_cumulant_of_known_law():
    rng = np.random.default_rng(0)
    x = rng.exponential(1.0, 400_000)  # k2 = 1, k3 = 2
    est, se = batch_cumulant(lambda v: np.mean((v - v.mean()) ** 3), (x,))
    assert abs(est - 2.0) < 4 * se


def test_discrepancy_checks_reject_alternatives():
    adj = check_adjacent_covariance(200_000, seed=3)
    k4 = check_k4_deltaX(n_samples=200_000, seed=4)
    assert adj.passed and k4.passed
    assert "rejected" in adj.detail and "rejected" in k4.detail


def test_drift_discrepancy_is_informational_and_grows():
    from diffmig.validation import check_drift_discrepancy

    small = check_drift_discrepancy(drifts=(0.05,), n_paths=4000, seed=1)
    big = check_drift_discrepancy(drifts=(1.0,), n_paths=4000, seed=1)
    assert small.passed and big.passed
    assert big.measured > small.measured
    assert len(big.extra["cells"]) == 3
