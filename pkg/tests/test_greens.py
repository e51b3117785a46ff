import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from diffmig.exceptions import NumericalDomainError
from diffmig.greens import (
    DomainRect,
    ImageSumControl,
    _nx_if_ftilde,
    ftilde,
    green_free_1d,
    green_reflected_1d,
    nx_if,
    nx_if_quadrature,
)


def test_free_kernel_peak_and_symmetry():
    assert green_free_1d(0.3, 0.3, 0.25) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    assert green_free_1d(0.3 + 0.17, 0.3, 0.4) == green_free_1d(0.3 - 0.17, 0.3, 0.4)


def test_free_kernel_normalised():
    s = 0.7
    w = 40 * math.sqrt(s)
    halves = [integrate.quad(lambda u: green_free_1d(u, 0.0, s), a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
              for a, b in ((-w, 0.0), (0.0, w))]
    val = math.fsum(halves)
    assert abs(val - 1) < 1e-12


def test_free_kernel_rejects_non_positive_diffusion():
    with pytest.raises(NumericalDomainError):
        green_free_1d(0.0, 0.0, 0.0)


def test_ftilde_values():
    assert ftilde(0.0, 1.3) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)
    s = 0.8
    assert abs(ftilde(10 * 2 * math.sqrt(s), s) - 5.0) < 1e-12


@given(st.floats(-50, 50), st.floats(1e-3, 10))
def test_ftilde_even(z, s):
    assert ftilde(-z, s) == ftilde(z, s)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3))
def test_ftilde_derivatives_by_finite_differences(v):
    # with s = 1/4 the scaled argument equals z
    s, h = 0.25, 1e-4
    f = lambda u: float(ftilde(u, s))
    d1 = (f(v + h) - f(v - h)) / (2 * h)
    d2 = (f(v + h) - 2 * f(v) + f(v - h)) / h**2
    assert abs(d1 - 0.5 * math.erf(v)) < 1e-6
    assert abs(d2 - math.exp(-v * v) / math.sqrt(math.pi)) < 1e-6


def test_ftilde_linear_asymptote():
    s = 2.0
    z = 200.0
    assert abs(ftilde(z, s) - z / (4 * math.sqrt(s))) < 1e-12


def test_reflected_uniform_limit():
    grid = np.linspace(0, 3.0, 5)
    xi, xf = np.meshgrid(grid, grid)
    g = green_reflected_1d(xi, xf, 0.0, 10 * 9.0, 3.0)
    assert np.max(np.abs(g - 1 / 3.0)) < 1e-6


def test_reflected_symmetric_at_zero_drift():
    a = green_reflected_1d(0.3, 1.7, 0.0, 0.2, 2.0)
    b = green_reflected_1d(1.7, 0.3, 0.0, 0.2, 2.0)
    assert a == b


def test_reflected_matches_free_far_from_walls():
    length = 1.0
    s = 1e-4 * length**2
    x = np.linspace(0.45, 0.55, 11)
    g = green_reflected_1d(0.5, x, 0.0, s, length)
    f = green_free_1d(x - 0.5, 0.0, s)
    assert np.max(np.abs(g / f - 1)) < 1e-10


@pytest.mark.parametrize("ratio", [0.01, 0.1, 1.0, 10.0])
def test_reflected_conserves_mass(ratio):
    length = 2.0
    s = ratio * length**2
    for xi in (0.0, 0.37, 1.0, 2.0):
        val, _ = integrate.quad(lambda xf: float(green_reflected_1d(xi, xf, 0.0, s, length)), 0, length,
                                points=[xi] if 0 < xi < length else None, epsabs=1e-13, epsrel=1e-13,
                                limit=200)
        assert abs(val - 1) < 1e-8


def test_tail_bound_is_reported_and_small():
    ctrl = ImageSumControl(tail_tol=1e-12)
    for s in (1e-3, 0.1, 5.0, 40.0):
        val, info = green_reflected_1d(0.2, 0.9, 0.3, s, 1.0, ctrl, full_output=True)
        assert info["tail_bound"] < ctrl.tail_tol * abs(val)
        val, info = nx_if((0.1, 0.4), (0.5, 1.0), 0.3, s, 1.0, ctrl, full_output=True)
        assert info["tail_bound"] < ctrl.tail_tol * abs(val)


def test_large_drift_handled_by_centred_shells():
    # drift displacement of many domain lengths still gives a normalised kernel
    length, s = 1.0, 0.05
    assert nx_if((0.2, 0.3), (0.0, length), 57.3, s, length) == pytest.approx(
        nx_if_quadrature((0.2, 0.3), (0.0, length), 57.3, s, length), rel=1e-8)


def test_nx_symmetric_at_zero_drift():
    a, b = (0.1, 0.6), (0.8, 1.9)
    assert nx_if(a, b, 0.0, 0.3, 2.0) == pytest.approx(nx_if(b, a, 0.0, 0.3, 2.0), rel=1e-13)


def test_nx_uniform_limit_proportional_to_lengths():
    length = 2.0
    s = 10 * length**2
    pairs = [((0.0, 0.5), (1.0, 2.0)), ((0.3, 1.7), (0.2, 0.4)), ((1.0, 2.0), (0.0, 2.0))]
    ratios = [nx_if(a, b, 0.0, s, length) / ((a[1] - a[0]) * (b[1] - b[0])) for a, b in pairs]
    assert max(ratios) / min(ratios) - 1 < 1e-6


def test_nx_degenerate_interval():
    assert nx_if((0.5, 0.5), (0.0, 1.0), 0.0, 0.1, 1.0) == 0.0
    assert nx_if_quadrature((0.2, 0.4), (1.0, 1.0), 0.0, 0.1, 1.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(-1.0, 1.0), st.floats(3e-3, 3.0),
       st.lists(st.floats(0.02, 0.98), min_size=1, max_size=5, unique=True),
       st.floats(0.0, 0.8), st.floats(0.05, 0.2))
def test_nx_additive_over_partitions(length, drift, ratio, cuts, lo, width):
    s = ratio * length**2
    a_i = (lo * length, (lo + width) * length)
    edges = [0.0, *sorted(c * length for c in cuts), length]
    whole = nx_if(a_i, (0.0, length), drift * length, s, length)
    parts = math.fsum(nx_if(a_i, (edges[k], edges[k + 1]), drift * length, s, length)
                      for k in range(len(edges) - 1))
    assert abs(parts - whole) <= 1e-10 * whole


@pytest.mark.parametrize("args", [
    ((0.1, 0.35), (0.5, 0.9), 0.0, 0.02, 1.0),
    ((0.0, 1.0), (0.0, 0.3), 0.4, 0.3, 1.0),
    ((1.0, 2.5), (2.0, 3.0), -0.7, 0.05, 3.0),
])
def test_closed_form_matches_quadrature(args):
    closed = nx_if(*args)
    quad = nx_if_quadrature(*args)
    assert abs(closed - quad) <= 1e-8 * abs(quad)


def test_quadrature_refinement_converged():
    args = ((0.1, 0.35), (0.3, 0.9), 0.2, 0.01, 1.0)
    v, info = nx_if_quadrature(*args, full_output=True)
    assert info["change"] < 1e-9 * abs(v)


def test_printed_sign_convention_disagrees_with_quadrature():
    args = ((0.1, 0.35), (0.5, 0.9), 0.1, 0.05, 1.0)
    quad = nx_if_quadrature(*args)
    assert abs(_nx_if_ftilde(*args) - quad) <= 1e-8 * quad
    assert abs(_nx_if_ftilde(*args, direct_sign=-1.0) - quad) > 0.1 * quad


def test_domain_rect():
    assert DomainRect(2.0, 3.0).area == 6.0
    with pytest.raises(ValueError):
        DomainRect(0.0, 1.0)
