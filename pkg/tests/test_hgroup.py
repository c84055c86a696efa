import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import H, random_points
from heisineq._special import efun, nu, nu_prime, qfun, sinc, tcoef
from heisineq.hgroup import (
    DimensionError, GeodesicParam, GroupContext, HPoint, dilate, gamma, inv, jac_gamma,
    koranyi_dist, koranyi_gauge, mul,
)

coord = st.floats(-3, 3, allow_nan=False)
pt = st.lists(coord, min_size=3, max_size=3).map(lambda c: H(*c))


@given(pt, pt, pt)
def test_associative(x, y, z):
    a = mul(mul(x, y), z).to_real()
    b = mul(x, mul(y, z)).to_real()
    np.testing.assert_allclose(a, b, atol=1e-12)


@given(pt)
def test_inverse_is_exact(x):
    assert np.all(mul(inv(x), x).to_real() == 0)
    assert np.all(mul(x, inv(x)).to_real() == 0)


@given(pt, pt, st.floats(0.1, 5))
def test_dilation_is_automorphism(x, y, lam):
    a = dilate(lam, mul(x, y)).to_real()
    b = mul(dilate(lam, x), dilate(lam, y)).to_real()
    np.testing.assert_allclose(a, b, atol=1e-10 * (1 + lam**2))


def test_group_law_cross_term():
    # (1,0,0).(i,0) has t = 2 Im(1 * conj(i)) = -2
    x = HPoint(np.array([1.0 + 0j]), 0.0)
    y = HPoint(np.array([1j]), 0.0)
    assert float(mul(x, y).t) == -2.0


def test_real_roundtrip_n2(rng):
    c = rng.normal(size=(10, 5))
    np.testing.assert_array_equal(HPoint.from_real(c).to_real(), c)
    with pytest.raises(DimensionError):
        HPoint.from_real(np.zeros(4))


def test_context_dims():
    ctx = GroupContext(2)
    assert ctx.topological_dim == 5 and ctx.homogeneous_dim == 6
    with pytest.raises(ValueError):
        GroupContext(0)


def test_horizontal_geodesic_is_a_segment():
    p = GeodesicParam(np.array([0.3 - 0.2j]), 0.0)
    g = gamma(0.7, p)
    np.testing.assert_allclose(g.zeta, [0.7 * (0.3 - 0.2j)])
    assert float(g.t) == 0.0


def _jac_fd(s, chi, theta, h=1e-6):
    def f(v):
        return gamma(s, GeodesicParam(np.array([v[0] + 1j * v[1]]), v[2])).to_real()
    v = np.array([chi.real, chi.imag, theta])
    J = np.column_stack([(f(v + h * e) - f(v - h * e)) / (2 * h) for e in np.eye(3)])
    return np.linalg.det(J)


@pytest.mark.parametrize("s,chi,theta", [(0.3, 0.8 + 0.1j, 1.0), (0.9, -0.5 + 0.7j, -4.0), (0.5, 1.0, 1e-3)])
def test_jacobian_against_finite_differences(s, chi, theta):
    exact = float(jac_gamma(s, GeodesicParam(np.array([chi]), theta)))
    assert abs(exact - _jac_fd(s, chi, theta)) <= 1e-7 * max(1.0, abs(exact))


def test_jacobian_rejects_full_turn():
    with pytest.raises(ValueError):
        jac_gamma(0.5, GeodesicParam(np.array([1.0 + 0j]), 2 * np.pi))


@given(pt, pt, st.floats(0.2, 4))
def test_koranyi_homogeneous_and_invariant(x, y, lam):
    d = koranyi_dist(x, y)
    np.testing.assert_allclose(koranyi_dist(dilate(lam, x), dilate(lam, y)), lam * d, rtol=1e-9, atol=1e-12)
    z = H(0.3, -1.0, 2.0)
    np.testing.assert_allclose(koranyi_dist(mul(z, x), mul(z, y)), d, rtol=1e-9, atol=1e-9)


def test_koranyi_gauge_axis_values():
    assert float(koranyi_gauge(H(0, 0, 16))) == pytest.approx(4.0)
    assert float(koranyi_gauge(H(3, 4, 0))) == pytest.approx(5.0)


# ---- special functions: series branch against mpmath near the switch point

def _mp(f, x):
    with mp.workdps(40):
        return float(f(mp.mpf(x)))


@pytest.mark.parametrize("x", [1e-8, 1e-4, 0.03, 0.0999, 0.1, 0.1001, 0.5, 3.0, 6.2])
def test_series_kernels_match_mpmath(x):
    assert tcoef(x) == pytest.approx(_mp(lambda y: (y - mp.sin(y)) / y**2, x), rel=1e-14)
    assert qfun(x) == pytest.approx(_mp(lambda y: (mp.sin(y) - y * mp.cos(y)) / y**3, x), rel=1e-13)
    assert sinc(x) == pytest.approx(_mp(lambda y: mp.sin(y) / y, x), rel=1e-15)
    if x < 6.2:
        assert nu(x) == pytest.approx(_mp(lambda y: (y - mp.sin(y)) / (1 - mp.cos(y)), x), rel=1e-13)
        dn = _mp(lambda y: mp.diff(lambda u: (u - mp.sin(u)) / (1 - mp.cos(u)), y), x)
        assert nu_prime(x) == pytest.approx(dn, rel=1e-12)


def test_efun_formula():
    x = np.array([0.2, 1.5, -3.0])
    np.testing.assert_allclose(efun(x), 1j * (np.exp(-1j * x) - 1) / x, rtol=1e-14)
    assert efun(np.array([0.0]))[0] == 1.0
