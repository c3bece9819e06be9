import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import special

from helpers.errors import DomainError, NonConvergence
from helpers.lcft_constants import constants
from helpers.quadrature import (_exp_quotient, check_beta_kernel, check_c1_integral, check_cot_integral, check_digamma_integral,
                                check_length_integral, check_s_kernel, check_three_point, grid_pairs, integrate,
                                integrate_origin_power, integrate_removable, integrate_tail_power,
                                length_closed_form, length_integral, power_tail, s_kernel_closed_form,
                                split_consistency, three_point_closed_form)


def test_integrate_polynomial_and_exponential():
    assert integrate(lambda x: x * x, 0.0, 1.0).value == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert integrate(lambda x: np.exp(-x), 0.0, math.inf).value == pytest.approx(1.0, abs=1e-12)
    assert integrate(lambda x: x * x, 1.0, 0.0).value == pytest.approx(-1.0 / 3.0, abs=1e-14)
    assert integrate(lambda x: x, 2.0, 2.0).value == 0.0


def test_integrate_matches_scipy_quad():
    f = lambda x: np.cos(3.0 * x) * np.exp(-0.5 * x)
    expected, _ = sp_integrate.quad(f, 0.0, 4.0, epsabs=1e-13)
    assert integrate(f, 0.0, 4.0).value == pytest.approx(expected, abs=1e-11)


def test_integrate_rejects_tolerance_below_floor():
    with pytest.raises(DomainError):
        integrate(lambda x: x, 0.0, 1.0, tol=1e-14)
    with pytest.raises(DomainError):
        integrate(lambda x: x, -math.inf, 1.0)


def test_budget_exhaustion_reports_estimate():
    with pytest.raises(NonConvergence) as info:
        integrate(np.sqrt, 0.0, 1.0, tol=1e-13, rtol=0.0, max_evals=45)
    assert info.value.evaluations >= 45
    assert info.value.estimate == pytest.approx(2.0 / 3.0, abs=1e-3)


def test_non_finite_integrand_is_reported():
    with pytest.raises(NonConvergence):
        integrate(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_endpoint_maps():
    assert integrate_origin_power(lambda x: x ** -0.5, 1.0, -0.5).value == pytest.approx(2.0, abs=1e-12)
    assert integrate_tail_power(lambda x: x ** -2.5, 1.0, -2.5).value == pytest.approx(1.0 / 1.5, abs=1e-12)
    with pytest.raises(DomainError):
        integrate_origin_power(lambda x: 1.0 / x, 1.0, -1.0)
    with pytest.raises(DomainError):
        integrate_tail_power(lambda x: 1.0 / x, 1.0, -1.0)


def test_removable_point():
    def sinc(x):
        return np.sin(x) / x
    value = integrate_removable(sinc, 0.0, math.pi, 0.0, 1.0).value
    assert value == pytest.approx(special.sici(math.pi)[0], abs=1e-11)


def test_power_tail():
    assert power_tail([(2.0, -3.0)], 2.0) == pytest.approx(2.0 * 2.0 ** -2 / 2.0)
    with pytest.raises(DomainError):
        power_tail([(1.0, -0.5)], 1.0)


def test_split_consistency():
    direct, pieces = split_consistency(lambda x: 1.0 / (1.0 + x * x), split=2.0)
    assert direct.value == pytest.approx(math.pi / 2.0, abs=1e-12)
    assert pieces.value == pytest.approx(direct.value, abs=1e-12)


@pytest.mark.parametrize("a,b", list(grid_pairs((0.3, 0.7, 1.5, 2.5, 4.0))))
def test_digamma_integral(a, b):
    assert check_digamma_integral(a, b).abs_err < 1e-8


@pytest.mark.parametrize("a,b", list(grid_pairs((-0.9, -0.7, -0.5, -0.3, -0.1))))
def test_cot_integral(a, b):
    assert check_cot_integral(a, b).abs_err < 1e-8


def test_digamma_integral_is_antisymmetric_in_its_exponents():
    forward = check_digamma_integral(0.3, 4.0)
    backward = check_digamma_integral(4.0, 0.3)
    assert backward.abs_err < 1e-8
    assert backward.lhs == pytest.approx(-forward.lhs, abs=1e-9)


def test_exponential_quotient_stays_finite_far_out():
    x = np.array([1e-3, 1.0, 50.0, 800.0, 5000.0])
    for p, q in ((2.5, 0.3), (0.3, 2.5), (0.9, 0.1)):
        values = _exp_quotient(p, q)(x)
        assert np.all(np.isfinite(values))
        assert abs(values[-1]) < 1e-100


def test_identity_domains():
    with pytest.raises(DomainError):
        check_digamma_integral(0.0, 1.0)
    with pytest.raises(DomainError):
        check_cot_integral(-0.5, 0.2)
    with pytest.raises(DomainError):
        check_beta_kernel(1.0)
    with pytest.raises(DomainError):
        check_s_kernel(-1.0, 0.5)


LENGTH_GRID = [(g, f * (4.0 / g ** 2 - 1.0)) for g in (1.5, 1.633, 1.8) for f in (0.15, 0.3, 0.5, 0.7, 0.85)]


@pytest.mark.parametrize("gamma,theta", LENGTH_GRID)
def test_length_integral(gamma, theta):
    check = check_length_integral(gamma, theta)
    assert check.abs_err < 1e-7


def test_length_integral_domain():
    with pytest.raises(DomainError):
        length_integral(1.5, 4.0 / 1.5 ** 2 - 1.0)
    with pytest.raises(DomainError):
        length_integral(1.3, 0.2)


@pytest.mark.parametrize("mu", [0.25, 1.0, 3.0])
@pytest.mark.parametrize("theta", [0.3, 0.7])
def test_s_kernel(mu, theta):
    assert check_s_kernel(mu, theta).abs_err < 1e-9


def test_s_kernel_closed_form_continuous_at_one():
    assert s_kernel_closed_form(1.0 + 1e-7, 0.4) == pytest.approx(s_kernel_closed_form(1.0, 0.4), rel=1e-6)


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_beta_kernel(theta):
    assert check_beta_kernel(theta).abs_err < 1e-9


@pytest.mark.parametrize("gamma", [1.5, 1.633, 1.8])
def test_c1_integral(gamma):
    assert check_c1_integral(gamma).abs_err < 1e-8


@pytest.mark.parametrize("gamma,theta", [(1.5, 0.5), (1.633, 0.4), (1.8, 0.2)])
def test_three_point_closed_form_is_kernel_reduction(gamma, theta):
    e4 = constants(gamma).e4
    reduced = -e4 * math.pi / math.sin(math.pi * theta) * length_closed_form(gamma, theta)
    assert three_point_closed_form(gamma, theta, e4) == pytest.approx(reduced, rel=1e-13)


@pytest.mark.slow
@pytest.mark.parametrize("gamma,theta", [(1.5, 0.5), (1.633, 0.4), (1.8, 0.2)])
def test_three_point_nested(gamma, theta):
    check = check_three_point(gamma, theta)
    assert check.rel_err < 1e-4
    assert check.reduced == pytest.approx(check.rhs, rel=1e-6)
