import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import H, random_points
from heisineq._sampling import cc_ball_real, stream
from heisineq.ccgeo import (
    cc_ball_volume, cc_dist, cc_log, cc_norm, extend, midpoint, midpoint_with_flags, solve_nu, theta_angle,
)
from heisineq.hgroup import TWO_PI, HPoint, dilate, gamma, inv, mul

coord = st.floats(-2, 2, allow_nan=False)
pt = st.lists(coord, min_size=3, max_size=3).map(lambda c: H(*c))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_log_roundtrip(rng, n):
    g = random_points(rng, 20000, n, 2.0)
    lg = cc_log(g)
    back = gamma(1.0, lg.param).to_real()
    np.testing.assert_allclose(back, g.to_real(), atol=1e-10)
    assert lg.residual.max() < 1e-10
    assert np.all(np.abs(lg.param.theta) < TWO_PI)


def test_solve_nu_against_mpmath():
    for c in [1e-6, 0.01, 0.4, 1.0, 7.0, 1e3, 1e7]:
        with mp.workdps(30):
            ref = mp.findroot(lambda th: (th - mp.sin(th)) / (1 - mp.cos(th)) - c,
                              (mp.mpf(1e-9), mp.mpf(2 * mp.pi) - mp.mpf(1e-12)), solver="illinois", tol=1e-28, maxsteps=500)
        assert float(solve_nu(c)) == pytest.approx(float(ref), rel=1e-11)


def test_closed_form_distances():
    z = np.array([[0.3 - 1.2j], [2.0 + 0j], [-0.7j]])
    assert np.allclose(cc_norm(HPoint(z, np.zeros(3))), np.abs(z[:, 0]), atol=1e-14)
    t = np.array([0.1, 1.0, 10.0, -3.0])
    np.testing.assert_allclose(cc_norm(HPoint(np.zeros((4, 1), complex), t)), np.sqrt(np.pi * np.abs(t)), rtol=1e-12)


def test_center_flags():
    lg = cc_log(H(0, 0, 1))
    assert bool(lg.on_center) and not bool(lg.unique)
    assert float(lg.param.theta) == pytest.approx(TWO_PI)
    assert bool(cc_log(H(0, 0, 0)).at_origin)


@given(pt, pt)
def test_distance_symmetric_and_left_invariant(x, y):
    d = cc_dist(x, y)
    assert float(cc_dist(y, x)) == pytest.approx(float(d), rel=1e-9, abs=1e-9)
    z = H(0.4, -0.3, 1.1)
    # vertical rounding of size eps enters the distance as sqrt(pi eps)
    assert float(cc_dist(mul(z, x), mul(z, y))) == pytest.approx(float(d), rel=1e-8, abs=2e-7)


@given(pt, pt, st.floats(0.1, 5))
def test_distance_homogeneous(x, y, lam):
    d = float(cc_dist(x, y))
    assert float(cc_dist(dilate(lam, x), dilate(lam, y))) == pytest.approx(lam * d, rel=1e-8, abs=1e-9)


@given(pt, pt, pt)
def test_triangle_inequality(x, y, z):
    assert float(cc_dist(x, z)) <= float(cc_dist(x, y)) + float(cc_dist(y, z)) + 1e-9


def test_cc_dominates_koranyi_scale(rng):
    # d_CC and the Koranyi gauge are comparable; on the t-axis the ratio is sqrt(pi)
    from heisineq.hgroup import koranyi_gauge
    g = random_points(rng, 5000, 1, 2.0)
    r = cc_norm(g) / koranyi_gauge(g)
    assert r.min() > 0.9 and r.max() < 2.0


@given(pt, pt, st.floats(0.05, 0.95))
def test_midpoint_splits_distance(x, y, s):
    d = float(cc_dist(x, y))
    z = midpoint(x, y, s)
    assert float(cc_dist(x, z)) == pytest.approx(s * d, rel=1e-7, abs=1e-8)
    if bool(midpoint_with_flags(x, y, s)[1]):
        assert float(cc_dist(z, y)) == pytest.approx((1 - s) * d, rel=1e-7, abs=1e-8)


def test_extend_inverts_midpoint(rng):
    x = random_points(rng, 2000, 1)
    y = random_points(rng, 2000, 1)
    s = 0.4
    z = midpoint(x, y, s)
    back, ok = extend(x, z, s)
    assert ok.mean() > 0.99
    np.testing.assert_allclose(back.to_real()[ok], y.to_real()[ok], atol=1e-8)


def test_theta_angle_cases():
    assert float(theta_angle(H(0, 0, 0), H(1, 0, 0))) == 0.0
    assert float(theta_angle(H(0, 0, 0), H(0, 0, 2))) == pytest.approx(TWO_PI)


@pytest.mark.parametrize("n", [1, 2])
def test_cc_ball_volume_against_monte_carlo(n):
    # hit-or-miss in the box |Re, Im zeta| <= 1, |t| <= 2/pi (which contains the ball)
    rng = stream(3, n)
    m = 400000
    box = np.r_[np.ones(2 * n), 2 / np.pi]
    w = rng.uniform(-1, 1, (m, 2 * n + 1)) * box
    p = float(np.mean(cc_norm(HPoint.from_real(w)) <= 1.0))
    est = p * np.prod(2 * box)
    se = np.prod(2 * box) * np.sqrt(p * (1 - p) / m)
    assert abs(est - cc_ball_volume(1.0, n)) < 4 * se
    assert cc_ball_volume(0.5, n) == pytest.approx(0.5 ** (2 * n + 2) * cc_ball_volume(1.0, n), rel=1e-12)


def test_ball_sampler_stays_inside_and_covers_top(rng):
    w = cc_ball_real(rng, 0.7, 1, 20000)
    assert cc_norm(HPoint.from_real(w)).max() <= 0.7 + 1e-12
    # the vertical extent of B(0, r) is (2/pi) r^2, reached near the top
    assert np.abs(w[:, 2]).max() > 0.9 * (2 / np.pi) * 0.49
