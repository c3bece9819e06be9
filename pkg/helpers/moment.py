"""Moment generating function of -log|ψ'(i)| under the SLE bubble measure.

F(λ) = 1 + 2 Γ(4(1-θ)/κ) Γ(4(1+θ)/κ) / (κ cos(4π/κ) Γ(8/κ-1)) · R(θ),
R(θ) = (sin(8πθ/κ) - θ sin(8π/κ)) / sin(4πθ/κ),
θ² = (κ/4-1)² - κλ/2.

F depends on θ only through θ², so the principal square root is used and
θ = 0 is a removable point of R. θ = ±1 is removable as well: the pole of
Γ(4(1∓θ)/κ) meets a zero of the sine bracket.
"""
import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from __init__ import LOGGER
from helpers.errors import DomainError, NumericalError, RootNotFound
from helpers.exponent import (DEGENERATE_RHO_TOL, KAPPA0_TOL, ExponentSolution, KappaParams, bisect,
                              delta_alpha, scan_sign_changes, solve_kappa0)
from helpers.specialfn import gamma as cgamma
from helpers.specialfn import log_gamma

SMALL_THETA = 1e-4
IMAG_TOL = 1e-9
BOUNDARY_GAP = 1e-10
SCAN_EDGE = 1e-7
UNIT_THETA = 1e-5

ComplexVal = Union[float, complex]


@dataclass(frozen=True)
class MomentValue:
    lam: complex
    theta_sq: complex
    value: complex

    @property
    def real(self) -> float:
        return self.value.real


def theta_squared(params: KappaParams, lam: ComplexVal) -> complex:
    return complex((params.kappa / 4.0 - 1.0) ** 2 - params.kappa * complex(lam) / 2.0)


def _ratio(theta: complex, a: float) -> complex:
    """(sin 2aθ - θ sin 2a) / sin aθ with a = 4π/κ."""
    if abs(theta) < SMALL_THETA:
        head = (2.0 * a - math.sin(2.0 * a)) / a
        return head + theta * theta * (head * a * a / 6.0 - 4.0 * a * a / 3.0)
    return (cmath.sin(2.0 * a * theta) - theta * math.sin(2.0 * a)) / cmath.sin(a * theta)


def _gamma_times_bracket(theta: complex, kappa: float, a: float) -> complex:
    """Γ(4(1-θ)/κ)·(sin 2aθ - θ sin 2a), continued through the cancelling pole at θ = 1."""
    d = theta - 1.0
    if abs(d) < UNIT_THETA:
        s2, c2 = math.sin(2.0 * a), math.cos(2.0 * a)
        # bracket/(θ-1) by Taylor at 1, and Γ(z) = Γ(1+z)/z
        slope = (2.0 * a * c2 - s2) - 2.0 * a * a * s2 * d - 4.0 * a ** 3 * c2 * d * d / 3.0
        return -kappa / 4.0 * cgamma(1.0 - 4.0 * d / kappa) * slope
    bracket = cmath.sin(2.0 * a * theta) - theta * math.sin(2.0 * a)
    return cmath.exp(log_gamma(4.0 * (1.0 - theta) / kappa)) * bracket


def _moment_from_theta(params: KappaParams, theta: complex) -> complex:
    kappa = params.kappa
    a = params.angle
    if abs(theta + 1.0) < UNIT_THETA:
        theta = -theta
    scale = 2.0 * cmath.exp(log_gamma(4.0 * (1.0 + theta) / kappa) - log_gamma(8.0 / kappa - 1.0))
    scale /= kappa * math.cos(a)
    if abs(theta) < SMALL_THETA:
        return 1.0 + scale * cmath.exp(log_gamma(4.0 * (1.0 - theta) / kappa)) * _ratio(theta, a)
    return 1.0 + scale * _gamma_times_bracket(theta, kappa, a) / cmath.sin(a * theta)


def unit_theta_value(params: KappaParams) -> float:
    """F at θ = 1 (λ = κ/8 - 1): 1 - (8/κ - 1)(u cot u - 1) with u = 8π/κ."""
    u = 8.0 * math.pi / params.kappa
    return 1.0 - (8.0 / params.kappa - 1.0) * (u / math.tan(u) - 1.0)


def moment_f(params: KappaParams, lam: ComplexVal) -> MomentValue:
    lam = complex(lam)
    if lam.real <= 2.0 / params.kappa - 1.0 + BOUNDARY_GAP:
        raise DomainError(f"Re lambda={lam.real} at or below the pole boundary 2/kappa-1={2.0 / params.kappa - 1.0}")
    theta_sq = theta_squared(params, lam)
    theta = cmath.sqrt(theta_sq)
    value = _moment_from_theta(params, theta)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NumericalError(f"non-finite moment at lambda={lam}")
    if lam.imag == 0.0:
        if abs(value.imag) > IMAG_TOL * max(1.0, abs(value)):
            raise NumericalError(f"imaginary residue {value.imag:.3g} at real lambda={lam.real}")
        value = complex(value.real, 0.0)
    return MomentValue(lam, theta_sq, value)


def moment_f_theta(params: KappaParams, theta: complex) -> complex:
    """F evaluated at an explicit θ, used to check evenness in θ."""
    return _moment_from_theta(params, complex(theta))


def moment_f_gamma(params: KappaParams, alpha: float) -> float:
    """The same moment in the γ-parametrisation, θ = (2/γ)(Q - α), λ = 2Δα - 2."""
    gamma, q_big = params.gamma, params.q_big
    if not (gamma < alpha < q_big):
        raise DomainError(f"alpha={alpha} outside (gamma, Q)=({gamma}, {q_big})")
    g2 = gamma * gamma
    theta = 2.0 / gamma * (q_big - alpha)
    a = math.pi * g2 / 4.0
    den = 8.0 * math.cos(a) * cgamma(g2 / 2.0 - 1.0).real
    if abs(theta) < SMALL_THETA:
        body = cgamma(g2 * (1.0 - theta) / 4.0).real * _ratio(theta, a).real
    else:
        body = _gamma_times_bracket(theta, 16.0 / g2, a).real / math.sin(a * theta)
    return 1.0 + g2 * cgamma(g2 * (theta + 1.0) / 4.0).real * body / den


def lambda_from_alpha(params: KappaParams, alpha: float) -> float:
    return 2.0 * delta_alpha(alpha, params) - 2.0


def _shifted(params: KappaParams):
    def f(x):
        return np.array([moment_f(params, -float(v)).real - 1.0 for v in np.ravel(x)])
    return f


def xi_from_moment(params: KappaParams) -> ExponentSolution:
    """Solve F(-x) = 1 on (0, 1-2/κ).

    F has no root at x = 1-κ/8: the gamma pole at θ = 1 cancels the zero
    of the sine bracket there, except at κ0 where both roots coincide.
    """
    kappa = params.kappa
    trivial = params.xi_trivial
    if abs(kappa - solve_kappa0()) < KAPPA0_TOL:
        return ExponentSolution(kappa, trivial, 1.0, 0.0, (trivial, trivial), degenerate=True)
    f = _shifted(params)
    brackets = scan_sign_changes(f, SCAN_EDGE, params.xi_upper - SCAN_EDGE, step=1e-4)
    candidates = []
    for a, b in brackets:
        root = bisect(lambda x: float(f(x)[0]), a, b)
        residual = float(f(root)[0])
        # a sign change through a pole leaves a large residual behind
        if abs(residual) > 1e-6:
            LOGGER.debug(f"kappa={kappa}: discarding bracket [{a}, {b}], residual {residual:.3g}")
            continue
        candidates.append((root, residual, (a, b)))
    if not candidates:
        raise RootNotFound(f"kappa={kappa}: F(-x)=1 has no root in (0, 1-2/kappa)")
    if len(candidates) > 1:
        raise NumericalError(f"kappa={kappa}: {len(candidates)} roots of F(-x)=1, expected one")
    xi, residual, bracket = candidates[0]
    rho = params.rho_from_xi(xi)
    return ExponentSolution(kappa, xi, rho, residual, bracket, degenerate=abs(rho - 1.0) < DEGENERATE_RHO_TOL)


def count_unit_crossings(params: KappaParams, step: float = 1e-3) -> int:
    """Sign changes of F(-x) - 1 on (0, 1-2/κ), poles excluded."""
    f = _shifted(params)
    brackets = scan_sign_changes(f, SCAN_EDGE, params.xi_upper - SCAN_EDGE, step=step)
    return sum(1 for a, b in brackets if abs(float(f(0.5 * (a + b))[0])) < 1.0)
