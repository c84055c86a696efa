import mpmath as mp
import numpy as np
import pytest

from conftest import H
from heisineq.distortion import inf_times_zero, tau, tau_hat, tau_tilde, v0, v_from_theta, v_heis
from heisineq.hgroup import TWO_PI


def _tau_mp(s, th, n):
    # direct Jacobian-ratio formula at high precision
    with mp.workdps(40):
        s, th = mp.mpf(s), mp.mpf(th)
        if th == 0:
            return float((s ** (2 * n + 3)) ** (1 / mp.mpf(2 * n + 1)))
        def jac(u):
            a = th * u / 2
            return u ** (2 * n + 3) * (mp.sin(a) / a) ** (2 * n - 1) * (mp.sin(a) - a * mp.cos(a)) / a**3
        return float((jac(s) / jac(1)) ** (1 / mp.mpf(2 * n + 1)))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("s,th", [(0.5, 0.0), (0.5, 1e-4), (0.2, 0.09), (0.2, 0.11), (0.8, 3.0), (0.5, 6.0)])
def test_tau_against_mpmath(n, s, th):
    assert float(tau(s, th, n)) == pytest.approx(_tau_mp(s, th, n), rel=1e-12)


def test_tau_endpoints():
    assert float(tau(0.5, 0.0, 1)) == pytest.approx(0.5 ** (5 / 3), rel=1e-15)
    assert np.isinf(tau(0.5, TWO_PI, 1))
    with pytest.raises(ValueError):
        tau(1.0, 0.1)
    with pytest.raises(ValueError):
        tau(0.5, 7.0)


def test_tau_increasing_and_bounded_below():
    th = np.linspace(0, TWO_PI, 500, endpoint=False)
    for n in (1, 2):
        for s in (0.1, 0.5, 0.9):
            v = tau(s, th, n)
            assert np.all(np.diff(v) > 0)
            assert np.all(v >= s ** ((2 * n + 3) / (2 * n + 1)) * (1 - 1e-14))
    # tau blows up like (2pi - theta)^{-1/3} for n = 1
    g = np.array([1e-3, 1e-4, 1e-5])
    slope = np.polyfit(np.log(g), np.log(tau(0.5, TWO_PI - g, 1)), 1)[0]
    assert slope == pytest.approx(-1 / 3, abs=0.01)


def test_tilde_power_is_v0_and_at_least_s2():
    x, y = H(0, 0, 0), H(0.3, 0.4, 0.2)
    th = 1.2
    for s in (0.2, 0.7):
        assert float(tau_tilde(s, th, 1) ** 3) == pytest.approx(s * float(v_from_theta(s, th, 1)), rel=1e-13)
        assert float(v0(s, x, y)) >= s * s
    assert float(v0(0.3, x, x)) == pytest.approx(0.09)


def test_v_heis_center_is_infinite():
    assert np.isinf(v_heis(0.5, H(0, 0, 0), H(0, 0, 1)))
    with pytest.raises(ValueError):
        v_heis(0.5, H(1, 1, 1), H(1, 1, 1))


def test_tau_hat_static_branch():
    assert float(tau_hat(0.3, 2.0, 1, moving=False)) == 0.3
    assert float(tau_hat(0.3, 2.0, 1, moving=True)) == float(tau(0.3, 2.0, 1))


def test_inf_times_zero():
    assert float(inf_times_zero(np.inf, 0.0)) == 0.0
    assert np.isinf(inf_times_zero(np.inf, 2.0))
    assert float(inf_times_zero(3.0, 2.0)) == 6.0
