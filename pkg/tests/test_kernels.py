import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_points
from heisineq import _kernels
from heisineq.ccgeo import midpoint, theta_angle
from heisineq.distortion import tau
from heisineq.hgroup import HPoint
from heisineq.ineqlab import pmean


@pytest.mark.parametrize("s", [0.1, 0.5, 0.83])
def test_midpoints_match_numpy(rng, s):
    x, y = random_points(rng, 3000), random_points(rng, 3000)
    th, z = _kernels.midpoints_batch(x.to_real(), y.to_real(), s)
    np.testing.assert_allclose(z, midpoint(x, y, s).to_real(), atol=1e-10)
    np.testing.assert_allclose(th, theta_angle(x, y), atol=1e-9)


def test_midpoints_small_theta_branch(rng):
    # nearly horizontal displacements exercise the series branches
    x = random_points(rng, 500)
    d = rng.normal(size=(500, 3)) * [1, 1, 1e-4]
    y = HPoint.from_real(x.to_real() + d)
    th, z = _kernels.midpoints_batch(x.to_real(), y.to_real(), 0.3)
    np.testing.assert_allclose(z, midpoint(x, y, 0.3).to_real(), atol=1e-11)


def test_vertical_and_equal_pairs():
    x = np.array([[0.2, -0.1, 0.4]])
    th, z = _kernels.midpoints_batch(x, x, 0.5)
    assert th[0] == 0.0 and np.array_equal(z, x)
    y = x + [[0.0, 0.0, 1.0]]
    th, _ = _kernels.midpoints_batch(x, y, 0.5)
    assert th[0] == pytest.approx(2 * math.pi)


@given(st.floats(0.01, 0.99), st.floats(0.0, 6.28))
def test_tau_power_matches_distortion(s, th):
    assert _kernels.tau_power(s, th) == pytest.approx(float(tau(s, th)) ** 3, rel=1e-10)


def test_tau_power_infinite_at_cut():
    assert _kernels.tau_power(0.5, 2 * math.pi) == math.inf


@given(st.floats(1e-3, 10.0), st.floats(1e-3, 10.0), st.floats(0.05, 0.95),
       st.sampled_from([-0.3, 0.0, 0.5, 1.0, 2.0, math.inf, -math.inf]))
def test_pmean_kernel_matches_numpy(a, b, s, p):
    assert _kernels.pmean(a, b, s, p) == pytest.approx(float(pmean(a, b, s, p)), rel=1e-12)


def test_pmean_zero_convention():
    assert _kernels.pmean(0.0, 3.0, 0.5, math.inf) == 0.0
    assert float(pmean(0.0, 3.0, 0.5, -0.2)) == 0.0


def test_midpoint_bounds_cover_batch(rng):
    X, Y = random_points(rng, 40).to_real(), random_points(rng, 30).to_real()
    b = _kernels.midpoint_bounds(X, Y, 0.4)
    _, z = _kernels.midpoints_batch(np.repeat(X, 30, axis=0), np.tile(Y, (40, 1)), 0.4)
    np.testing.assert_array_equal(b, [z.min(axis=0), z.max(axis=0)])
