import numpy as np
import pytest

from conftest import H, random_points
from heisineq.hgroup import GeodesicParam, HPoint, gamma, inv, jac_gamma, mul
from heisineq.riemapprox import (
    EpsParam, bridge_limit, bridge_limit_check, eps_length, eps_log, fit_order, gamma_eps,
    jac_gamma_eps, reversed_param, sandwich_check, v_eps,
)


def _jac_fd(s, chi, theta, eps, h=1e-6):
    def f(v):
        return gamma_eps(s, EpsParam(np.array([v[0] + 1j * v[1]]), v[2], eps)).to_real()
    v = np.array([chi.real, chi.imag, theta])
    return np.linalg.det(np.column_stack([(f(v + h * e) - f(v - h * e)) / (2 * h) for e in np.eye(3)]))


@pytest.mark.parametrize("s,chi,theta,eps", [(0.6, 0.7 - 0.4j, 2.1, 0.3), (0.2, 1.0 + 0.5j, -5.0, 1.0),
                                             (0.9, 0.1j, 0.01, 0.05)])
def test_jacobian_against_finite_differences(s, chi, theta, eps):
    exact = float(jac_gamma_eps(s, EpsParam(np.array([chi]), theta, eps)))
    assert exact == pytest.approx(_jac_fd(s, chi, theta, eps), rel=1e-6)


def test_eps_geodesic_tends_to_cc_geodesic(rng):
    chi = rng.normal(size=(50, 1)) + 1j * rng.normal(size=(50, 1))
    th = rng.uniform(-6, 6, 50)
    a = gamma(0.7, GeodesicParam(chi, th)).to_real()
    errs = [np.abs(gamma_eps(0.7, EpsParam(chi, th, e)).to_real() - a).max() for e in (1e-1, 1e-2, 1e-3)]
    assert fit_order([1e-1, 1e-2, 1e-3], errs) == pytest.approx(2.0, abs=0.05)


def test_speed_from_initial_vector():
    w = np.array([0.3, -0.4, 0.5])
    p = EpsParam.from_initial_vector(w, 0.2)
    assert float(eps_length(p)) == pytest.approx(np.linalg.norm(w))


def test_eps_log_roundtrip(rng):
    g = random_points(rng, 3000, 1, 2.0)
    for eps in (1.0, 0.3, 0.05):
        p = eps_log(g, eps)
        assert p.residual.max() < 1e-9
        assert np.all(p.within_2pi)


def test_eps_log_center_branches():
    eps = 0.5
    p = eps_log(H(0, 0, 0.01), eps)  # short vertical segment
    assert float(p.theta_eps) == pytest.approx(4 * 0.01 / eps**2)
    assert float(p.residual) < 1e-12
    q = eps_log(H(0, 0, 3.0), eps)  # beyond 2pi: circle family
    assert float(q.residual) < 1e-12


def test_reversed_param_runs_back(rng):
    p = EpsParam(np.array([0.5 + 0.2j]), 1.3, 0.4)
    y = gamma_eps(1.0, p)
    back = mul(y, gamma_eps(1.0, reversed_param(p)))
    np.testing.assert_allclose(back.to_real(), 0.0, atol=1e-12)


def test_v_eps_limit_and_lower_bound():
    rep = bridge_limit_check(0.4, np.array([0.8 + 0.3j]), 2.5, [1e-1, 1e-2, 1e-3])
    assert rep.fitted_order >= 1.9
    assert rep.extra["limit_ge_s2"]
    s = np.linspace(0.05, 0.95, 19)[:, None]
    th = np.linspace(-6.2, 6.2, 31)[None, :]
    v = v_eps(s, EpsParam(np.ones((19, 31, 1), complex), np.broadcast_to(th, (19, 31)), 0.3))
    assert np.all(v >= s**2 * (1 - 1e-12))


def test_sandwich_proxy_is_upper_bound(rng):
    x, y = random_points(rng, 40, 1), random_points(rng, 40, 1)
    rep = sandwich_check(x, y, [0.5, 0.25, 0.125])
    assert rep.extra["upper_bound_holds"]
    assert np.isfinite(rep.extra["c_est"])
    with pytest.raises(ValueError):
        sandwich_check(H(1, 2, 3), H(1, 2, 3), [0.1, 0.05, 0.01])


def test_fit_order_exact_power():
    e = np.array([0.1, 0.01, 0.001])
    assert fit_order(e, 3 * e**2) == pytest.approx(2.0)
    assert fit_order(e, np.zeros(3)) == float("inf")
