"""Boundary Liouville constants: Ḡ at three β values, E1..E4 and C1.

Everything is assembled in log-space from signed log-gamma values and
exponentiated once at the end; (2π)^{±4/γ²} alone spans several decades
as γ approaches √2.
"""
import enum
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Iterable, Optional, Tuple

from __init__ import LOGGER
from helpers.errors import DomainError
from helpers.specialfn import log_abs_gamma

LOG_2 = math.log(2.0)
LOG_PI = math.log(math.pi)
LOG_2PI = math.log(2.0 * math.pi)


class BetaCase(enum.Enum):
    ZERO = "zero"
    GAMMA = "gamma"
    BETA0 = "beta0"


class _Signed:
    """Running product kept as (log|x|, sign)."""

    __slots__ = ("log", "sign")

    def __init__(self, log: float = 0.0, sign: int = 1):
        self.log = log
        self.sign = sign

    def mul_gamma(self, x: float, power: float = 1.0) -> "_Signed":
        lg, s = log_abs_gamma(x)
        if s < 0 and power != int(power):
            raise DomainError(f"negative gamma value at {x} raised to non-integer power {power}")
        self.log += power * lg
        if s < 0 and int(power) % 2:
            self.sign = -self.sign
        return self

    def mul(self, value: float) -> "_Signed":
        if value == 0.0:
            raise DomainError("zero factor in log-space product")
        self.log += math.log(abs(value))
        if value < 0:
            self.sign = -self.sign
        return self

    def add_log(self, log_value: float) -> "_Signed":
        self.log += log_value
        return self

    def value(self) -> float:
        return self.sign * math.exp(self.log)


def _check_gamma(gamma: float):
    if not (math.sqrt(2) < gamma < 2):
        raise DomainError(f"gamma={gamma} outside (sqrt 2, 2)")


def _q_big(gamma: float) -> float:
    return 2.0 / gamma + gamma / 2.0


def gbar(alpha: float, beta_case: BetaCase, gamma: float) -> float:
    """Normalised one-bulk-one-boundary structure constant Ḡ(α, β)."""
    _check_gamma(gamma)
    q_big = _q_big(gamma)
    if not (gamma / 2.0 < alpha <= q_big):
        raise DomainError(f"alpha={alpha} outside (gamma/2, Q) for gamma={gamma}")
    g2 = gamma * gamma
    c = 4.0 / g2
    exponent = 2.0 * (q_big - alpha) / gamma
    log_base = -gamma * alpha / 2.0 * LOG_2 + LOG_2PI - log_abs_gamma(1.0 - g2 / 4.0)[0]
    acc = _Signed().add_log(exponent * log_base).mul_gamma(gamma * alpha / 2.0 - g2 / 4.0)
    beta_case = BetaCase(beta_case)
    if beta_case is BetaCase.GAMMA:
        acc.add_log(-LOG_PI)
    elif beta_case is BetaCase.BETA0:
        acc.add_log((3.0 - g2 / 2.0 - c) * LOG_2 - (c - 1.0) * LOG_PI)
        acc.mul_gamma(1.0 - g2 / 4.0, c - 1.0).mul_gamma(g2 / 2.0 - 1.0)
        acc.mul_gamma(2.0 - c, -1).mul_gamma(g2 / 4.0, -1)
        acc.mul_gamma(2.0 * alpha / gamma - c).mul_gamma(gamma * alpha / 2.0 + 1.0 - g2 / 2.0)
        acc.mul_gamma(2.0 * alpha / gamma - 1.0, -1).mul_gamma(gamma * alpha / 2.0 - 1.0, -1)
    return acc.value()


@dataclass(frozen=True)
class ConstantBundle:
    gamma: float
    e1: float
    e2: float
    e3: float
    e4: float
    c1: float

    @property
    def gbar_alpha0(self) -> Callable[[float], float]:
        return partial(gbar, beta_case=BetaCase.ZERO, gamma=self.gamma)

    @property
    def gbar_alpha_gamma(self) -> Callable[[float], float]:
        return partial(gbar, beta_case=BetaCase.GAMMA, gamma=self.gamma)

    @property
    def gbar_alpha_beta0(self) -> Callable[[float], float]:
        return partial(gbar, beta_case=BetaCase.BETA0, gamma=self.gamma)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "E1": self.e1, "E2": self.e2, "E3": self.e3,
                "E4": self.e4, "C1": self.c1}


def _e1(gamma: float) -> _Signed:
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    return (_Signed().add_log((c - 1.0) * LOG_2PI).mul(1.0 / (1.0 - g2 / 4.0))
            .mul_gamma(1.0 - g2 / 4.0, -c))


def _e2(gamma: float) -> _Signed:
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    acc = _Signed().mul_gamma(g2 / 4.0).mul(1.0 / (4.0 * math.pi * (_q_big(gamma) - gamma) ** 2))
    return acc.add_log((c - 1.0) * LOG_2PI).mul_gamma(1.0 - g2 / 4.0, -(c - 1.0))


def _e3(gamma: float) -> _Signed:
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    return (_Signed().add_log((1.0 - c) * LOG_2PI).mul_gamma(1.0 - g2 / 4.0, c)
            .mul_gamma(2.0 - c, -1))


def e4_definition(gamma: float) -> float:
    """E4 = E1 E3² γ / (2 Γ(4/γ²-2) Γ(4/γ²+1))."""
    _check_gamma(gamma)
    c = 4.0 / gamma ** 2
    acc = _e1(gamma)
    e3 = _e3(gamma)
    acc.log += 2.0 * e3.log
    return acc.mul(gamma / 2.0).mul_gamma(c - 2.0, -1).mul_gamma(c + 1.0, -1).value()


def e4_simplified(gamma: float) -> float:
    _check_gamma(gamma)
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    acc = _Signed().add_log((-1.0 - c) * LOG_2PI)
    acc.mul(-4.0 * gamma ** 3 * (g2 - 2.0) * math.sin(math.pi * c) ** 2 / (g2 - 4.0) ** 2)
    return acc.mul_gamma(1.0 - g2 / 4.0, c).value()


def c1_closed(gamma: float) -> float:
    _check_gamma(gamma)
    g2 = gamma * gamma
    return (math.pi * 2.0 ** (1.0 - g2 / 2.0) * (g2 - 4.0) ** 2 * math.sin(math.pi * g2 / 4.0)
            / (gamma ** 3 * math.sin(-4.0 * math.pi / g2)))


def c1_intermediate(gamma: float) -> float:
    """C1 before the reflection identities are applied."""
    _check_gamma(gamma)
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    acc = _Signed().add_log((1.0 - g2 / 2.0) * LOG_2)
    acc.mul(4.0 * math.pi * (_q_big(gamma) - gamma) ** 2 / gamma)
    acc.mul_gamma(2.0 - c).mul_gamma(c - 1.0).mul_gamma(g2 / 4.0, -1).mul_gamma(1.0 - g2 / 4.0, -1)
    return acc.value()


def c1_assembled(gamma: float) -> float:
    """C1 = 2^{1-γ²/2} Γ(4/γ²-1) Ḡ(γ, 4/γ-γ) / (E2 E3 γ)."""
    _check_gamma(gamma)
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    acc = _Signed().add_log((1.0 - g2 / 2.0) * LOG_2).mul_gamma(c - 1.0)
    acc.mul(gbar(gamma, BetaCase.BETA0, gamma) / gamma)
    acc.log -= _e2(gamma).log + _e3(gamma).log
    return acc.value()


def constants(gamma: float) -> ConstantBundle:
    _check_gamma(gamma)
    bundle = ConstantBundle(
        gamma=gamma,
        e1=_e1(gamma).value(),
        e2=_e2(gamma).value(),
        e3=_e3(gamma).value(),
        e4=e4_definition(gamma),
        c1=c1_closed(gamma),
    )
    LOGGER.debug(f"constants gamma={gamma}: {bundle.to_dict()}")
    return bundle


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def dual_expression_gaps(gammas: Iterable[float]) -> Tuple[float, float]:
    """Worst relative disagreement of (C1 closed vs assembled, E4 definition vs simplified)."""
    worst_c1 = worst_e4 = 0.0
    for g in gammas:
        worst_c1 = max(worst_c1, relative_gap(c1_closed(g), c1_assembled(g)))
        worst_e4 = max(worst_e4, relative_gap(e4_definition(g), e4_simplified(g)))
    return worst_c1, worst_e4


def f_alpha(gamma: float, alpha: float, integral: Optional[float] = None) -> float:
    """The α-dependent part of the moment, built from C1, the Ḡ ratio and the H̄ integral.

    `integral` is ∫ H̄/C2 · s^{θ-1}/(1+s) ds; the closed form is used when it
    is not supplied. The result equals the bracketed term of the moment
    formula in its γ-parametrisation, i.e. F - 1.
    """
    from helpers.quadrature import three_point_closed_form

    _check_gamma(gamma)
    q_big = _q_big(gamma)
    if not (gamma < alpha < q_big):
        raise DomainError(f"alpha={alpha} outside (gamma, Q) for gamma={gamma}")
    g2, c = gamma * gamma, 4.0 / (gamma * gamma)
    theta = 2.0 / gamma * (q_big - alpha)
    bundle = constants(gamma)
    if integral is None:
        integral = three_point_closed_form(gamma, theta, bundle.e4)
    acc = _Signed().mul(4.0 * bundle.c1 / g2).mul_gamma(c - 2.0)
    acc.mul_gamma(theta, -1).mul_gamma(c - 1.0 - theta, -1)
    acc.mul(gbar(alpha, BetaCase.GAMMA, gamma) / gbar(alpha, BetaCase.BETA0, gamma))
    return acc.mul(integral).value()
