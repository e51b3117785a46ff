import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffmig.exceptions import NumericalDomainError
from diffmig.greens import DomainRect, nx_if
from diffmig.proportions import (
    AreaRect,
    MotionParams,
    grid_partition,
    migration_proportion,
    proportion_axis,
    proportion_matrix,
)

DOMAIN = DomainRect(4.0, 2.0)


def test_full_target_gives_exactly_one():
    assert proportion_axis((0.3, 0.9), (0.0, 4.0), 0.5, 0.2, 4.0) == 1.0
    p = MotionParams(0.2, -0.1, 0.3, 0.05)
    a = AreaRect("a", (0.5, 1.0), (0.2, 0.4))
    assert migration_proportion(a, AreaRect.whole(DOMAIN), p, 3.0, DOMAIN) == 1.0


@pytest.mark.parametrize("a_i", [(0.0, 0.1), (0.4, 0.6), (0.95, 1.0)])
def test_half_domain_uniform_limit(a_i):
    assert abs(proportion_axis(a_i, (0.0, 0.5), 0.0, 10.0, 1.0) - 0.5) < 1e-6


def test_quarter_uniform_limit():
    d = DomainRect(1.0, 1.0)
    p = MotionParams(0.0, 0.0, 10.0, 10.0)
    w = migration_proportion(AreaRect("i", (0.1, 0.2), (0.6, 0.7)), AreaRect("q", (0.5, 1.0), (0.0, 0.5)),
                             p, 1.0, d)
    assert abs(w - 0.25) < 3e-6


def test_long_horizon_limit_general_areas():
    d = DomainRect(3.0, 1.0)
    p = MotionParams(0.0, 0.0, 10.0 * 9.0, 10.0)
    a_f = AreaRect("f", (0.5, 2.0), (0.1, 0.3))
    w = migration_proportion(AreaRect("i", (2.0, 3.0), (0.0, 1.0)), a_f, p, 1.0, d)
    assert abs(w - a_f.area / d.area) <= 1e-5


def test_mirror_symmetry_at_zero_drift():
    length = 2.0
    a_i = (0.6, 1.4)  # symmetric about L/2
    a_f = (0.1, 0.5)
    mirror = (length - a_f[1], length - a_f[0])
    # equal up to summation order, i.e. a few ulps
    assert proportion_axis(a_i, a_f, 0.0, 0.3, length) == pytest.approx(
        proportion_axis(a_i, mirror, 0.0, 0.3, length), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.45), st.floats(0.5, 0.95), st.floats(0.01, 1.0))
def test_detailed_balance_at_zero_drift(a0, b0, s):
    length = 1.0
    a, b = (a0, a0 + 0.05), (b0, b0 + 0.05)
    lhs = proportion_axis(a, b, 0.0, s, length) * nx_if(a, (0, length), 0.0, s, length)
    rhs = proportion_axis(b, a, 0.0, s, length) * nx_if(b, (0, length), 0.0, s, length)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-300) + 1e-16


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.4), st.floats(0.0, 0.2), st.floats(0.0, 0.2), st.floats(-0.5, 0.5),
       st.floats(0.005, 2.0))
def test_monotone_in_target(lo, grow_lo, grow_hi, drift, s):
    a_i = (0.2, 0.5)
    small = (lo + 0.2, lo + 0.4)
    big = (max(0.0, small[0] - grow_lo), min(1.0, small[1] + grow_hi))
    assert proportion_axis(a_i, big, drift, s, 1.0) >= proportion_axis(a_i, small, drift, s, 1.0)


def test_row_sums_on_random_partitions():
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = DomainRect(rng.uniform(1, 5), rng.uniform(1, 5))
        cells = grid_partition(d, np.sort(rng.uniform(0, d.lx, 2)), np.sort(rng.uniform(0, d.ly, 2)))
        p = MotionParams(*rng.normal(0, 0.3, 2), *(10 ** rng.uniform(-2, 0.5, 2)))
        m = proportion_matrix(cells, cells, p, rng.uniform(0.5, 3), d, check_partition=True)
        assert m.entries.shape == (9, 9)
        assert m.is_partition
        assert np.max(np.abs(m.row_sums - 1)) <= 1e-10
        assert np.all((m.entries >= 0) & (m.entries <= 1))


def test_matrix_against_single_domain_column():
    cells = grid_partition(DOMAIN, [1.0, 3.0], [1.0])
    m = proportion_matrix(cells, [AreaRect.whole(DOMAIN)], MotionParams(0.1, 0, 0.2, 0.2), 1.0, DOMAIN,
                          check_partition=True)
    assert m.entries.shape == (6, 1)
    assert np.all(m.entries == 1.0)


def test_overlapping_final_areas_rejected():
    a = AreaRect("a", (0, 2), (0, 2))
    b = AreaRect("b", (1, 3), (0, 2))
    with pytest.raises(ValueError, match="overlap"):
        proportion_matrix([a], [a, b], MotionParams(0, 0, 1, 1), 1.0, DOMAIN, check_partition=True)


def test_non_positive_diffusion_refused():
    a = AreaRect("a", (0, 1), (0, 1))
    with pytest.raises(NumericalDomainError):
        migration_proportion(a, a, MotionParams(0, 0, 0.0, 1.0), 1.0, DOMAIN)
    with pytest.raises(NumericalDomainError):
        proportion_matrix([a], [a], MotionParams(0, 0, 1.0, -0.1), 1.0, DOMAIN)


def test_area_validation():
    with pytest.raises(ValueError):
        AreaRect("bad", (1, 1), (0, 1))
    with pytest.raises(ValueError):
        AreaRect("a", (0, 5), (0, 1)).check_inside(DOMAIN)


def test_to_dict_is_json_ready():
    import json

    cells = grid_partition(DOMAIN, [2.0], [])
    m = proportion_matrix(cells, cells, MotionParams(0, 0, 0.5, 0.5), 1.0, DOMAIN, check_partition=True)
    d = json.loads(json.dumps(m.to_dict()))
    assert d["final_is_partition"] is True
    assert len(d["entries"]) == 2
