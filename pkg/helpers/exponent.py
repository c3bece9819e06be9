"""Backbone exponent ξ(κ) and the parameter maps around it.

In the variable ρ = sqrt(κξ/2 + (1-κ/4)²) the exponent equation reads

    g(ρ) = sin(8π/κ)·ρ - sin(8πρ/κ) = 0,   ρ ∈ (κ/4-1, κ/4).

ρ = 1 is always a root (it gives ξ = 1-κ/8), so the solver works with
h(ρ) = g(ρ)/(ρ-1), whose only root in the interval is the backbone one.
The two roots merge at κ0, where tan(8π/κ0) = 8π/κ0.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from __init__ import LOGGER
from helpers.errors import DomainError, NumericalError, RootNotFound

SCAN_STEP = 1e-4
BISECT_XTOL = 1e-14
KAPPA6_TRIVIAL_GAP = 1e-6
POLYCHROMATIC_ARMS = range(2, 7)
KAPPA0_TOL = 1e-7
DEGENERATE_RHO_TOL = 1e-6
KAPPA_EIGHT_GAP = 1e-9
Q4_KAPPA_OFFSET = 1e-8

# one-arm and polychromatic half of the arm-exponent family
ONE_ARM_EXPONENT = 5.0 / 48.0


@dataclass(frozen=True)
class KappaParams:
    kappa: float
    gamma: float = field(init=False)
    q_big: float = field(init=False)

    def __post_init__(self):
        kappa = float(self.kappa)
        if not (4.0 < kappa < 8.0):
            raise DomainError(f"kappa={kappa} outside (4, 8)")
        gamma = 4.0 / math.sqrt(kappa)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "q_big", 2.0 / gamma + gamma / 2.0)

    @classmethod
    def from_gamma(cls, gamma: float) -> "KappaParams":
        if not (math.sqrt(2) < gamma < 2):
            raise DomainError(f"gamma={gamma} outside (sqrt 2, 2)")
        params = cls(16.0 / gamma ** 2)
        # keep the caller's γ exactly instead of 4/sqrt(16/γ²)
        object.__setattr__(params, "gamma", float(gamma))
        object.__setattr__(params, "q_big", 2.0 / gamma + gamma / 2.0)
        return params

    @property
    def angle(self) -> float:
        """4π/κ, which also equals πγ²/4."""
        return 4.0 * math.pi / self.kappa

    @property
    def sin_double(self) -> float:
        return math.sin(8.0 * math.pi / self.kappa)

    @property
    def cos_angle(self) -> float:
        return math.cos(self.angle)

    @property
    def rho_min(self) -> float:
        return self.kappa / 4.0 - 1.0

    @property
    def rho_max(self) -> float:
        return math.sqrt(self.kappa / 2.0 - 1.0 + (1.0 - self.kappa / 4.0) ** 2)

    @property
    def xi_trivial(self) -> float:
        return 1.0 - self.kappa / 8.0

    @property
    def xi_upper(self) -> float:
        return 1.0 - 2.0 / self.kappa

    def xi_from_rho(self, rho: float) -> float:
        return (rho * rho - (1.0 - self.kappa / 4.0) ** 2) * 2.0 / self.kappa

    def rho_from_xi(self, xi: float) -> float:
        return math.sqrt(self.kappa * xi / 2.0 + (1.0 - self.kappa / 4.0) ** 2)


@dataclass(frozen=True)
class ExponentSolution:
    kappa: float
    xi: float
    rho: float
    residual: float
    bracket: Tuple[float, float]
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "xi": self.xi,
            "rho": self.rho,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "degenerate": self.degenerate,
        }


# ---------------------------------------------------------------------------
# scan + bisection engine


def scan_sign_changes(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                      step: float = SCAN_STEP) -> List[Tuple[float, float]]:
    """Brackets [x_i, x_{i+1}] on a uniform grid where a vectorised f changes sign."""
    count = max(2, int(math.ceil((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, count)
    values = np.asarray(f(grid), dtype=float)
    brackets = []
    for i in range(count - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            brackets.append((grid[i], grid[i]))
        elif a * b < 0.0:
            brackets.append((grid[i], grid[i + 1]))
    if values[-1] == 0.0:
        brackets.append((grid[-1], grid[-1]))
    return brackets


def bisect(f: Callable[[float], float], a: float, b: float, xtol: float = BISECT_XTOL,
           max_iter: int = 200) -> float:
    fa = f(a)
    if a == b or fa == 0.0:
        return a
    fb = f(b)
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise RootNotFound(f"no sign change on [{a}, {b}]")
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if b - a <= xtol * max(1.0, abs(mid)) or not a < mid < b:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fa * fm < 0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# exponent equation


def backbone_g(rho, params: KappaParams):
    return params.sin_double * rho - np.sin(8.0 * np.pi * rho / params.kappa)


def _g_prime_at_one(params: KappaParams) -> float:
    u = 8.0 * math.pi / params.kappa
    return math.sin(u) - u * math.cos(u)


def _g_second_at_one(params: KappaParams) -> float:
    u = 8.0 * math.pi / params.kappa
    return u * u * math.sin(u)


def reduced_g(rho, params: KappaParams):
    """g(ρ)/(ρ-1), continued through ρ = 1 by its Taylor expansion."""
    rho = np.asarray(rho, dtype=float)
    d = rho - 1.0
    near = np.abs(d) < DEGENERATE_RHO_TOL
    safe = np.where(near, 2.0, rho)
    out = backbone_g(safe, params) / (safe - 1.0)
    taylor = _g_prime_at_one(params) + 0.5 * _g_second_at_one(params) * d
    return np.where(near, taylor, out)


def kappa_from_q(q: float) -> float:
    if not (0 < q <= 4):
        raise DomainError(f"q={q} outside (0, 4]")
    return 4.0 * math.pi / (math.pi - math.acos(math.sqrt(q) / 2.0))


def q_from_kappa(kappa: float) -> float:
    if not (4 <= kappa < 8):
        raise DomainError(f"kappa={kappa} outside [4, 8)")
    return 4.0 * math.cos(math.pi - 4.0 * math.pi / kappa) ** 2


@lru_cache(maxsize=1)
def solve_kappa0() -> float:
    # u = 8π/κ0 is the root of sin u - u cos u in (π, 3π/2)
    u = bisect(lambda t: math.sin(t) - t * math.cos(t), math.pi + 1e-12, 1.5 * math.pi - 1e-12)
    kappa0 = 8.0 * math.pi / u
    LOGGER.debug(f"kappa0={kappa0!r}, residual={math.tan(u) - u:.3g}")
    return kappa0


def solve_xi(kappa: float) -> ExponentSolution:
    kappa = float(kappa)
    if not (4.0 < kappa < 8.0) or 8.0 - kappa < KAPPA_EIGHT_GAP:
        raise DomainError(f"kappa={kappa} outside (4, 8)")
    params = KappaParams(kappa)
    if abs(kappa - solve_kappa0()) < KAPPA0_TOL:
        return ExponentSolution(kappa, params.xi_trivial, 1.0, 0.0, (1.0, 1.0), degenerate=True)

    lo, hi = params.rho_min, params.rho_max
    brackets = scan_sign_changes(lambda r: reduced_g(r, params), lo, hi)
    # the open interval excludes the endpoints, where ξ would be 0 or 1-2/κ
    brackets = [(a, b) for a, b in brackets if not (b <= lo or a >= hi)]
    if len(brackets) > 1:
        raise NumericalError(f"kappa={kappa}: {len(brackets)} non-trivial sign changes, expected one")
    if not brackets:
        raise RootNotFound(f"kappa={kappa}: no non-trivial root of the exponent equation")
    a, b = brackets[0]
    rho = bisect(lambda r: float(reduced_g(r, params)), a, b)
    residual = float(backbone_g(rho, params))
    xi = params.xi_from_rho(rho)
    if abs(rho - 1.0) < DEGENERATE_RHO_TOL:
        return ExponentSolution(kappa, params.xi_trivial, 1.0, residual, (a, b), degenerate=True)
    return ExponentSolution(kappa, xi, rho, residual, (a, b))


def solve_xi_kappa6() -> ExponentSolution:
    """ξ(6) through the percolation form: ρ' = sqrt(12ξ+1) solves √3ρ'/4 + sin(2πρ'/3) = 0."""
    f = lambda r: math.sqrt(3.0) * r / 4.0 + math.sin(2.0 * math.pi * r / 3.0)
    # r = 2 is the trivial root (ρ = 1); scan the open interval to the right of it
    brackets = scan_sign_changes(np.vectorize(f), 2.0 + KAPPA6_TRIVIAL_GAP, 3.0)
    if len(brackets) != 1:
        raise RootNotFound(f"expected one root of the kappa=6 equation in (2, 3), found {len(brackets)}")
    rho_p = bisect(f, *brackets[0])
    xi = (rho_p * rho_p - 1.0) / 12.0
    return ExponentSolution(6.0, xi, rho_p / 2.0, f(rho_p), brackets[0])


TABLE_QS = (1.0, 2.0, 3.0, 2.0 + math.sqrt(3.0), 4.0)


def exponent_table() -> List[Tuple[float, float, float]]:
    rows = []
    for q in TABLE_QS:
        kappa = kappa_from_q(q)
        # κ(4) = 4 sits on the edge; ξ(4) is the one-sided limit
        solve_at = kappa + Q4_KAPPA_OFFSET if kappa <= 4.0 + Q4_KAPPA_OFFSET else kappa
        rows.append((q, kappa, solve_xi(solve_at).xi))
    return rows


def delta_alpha(alpha: float, params: KappaParams) -> float:
    return alpha / 2.0 * (params.q_big - alpha / 2.0)


def polychromatic_exponent(j: int) -> float:
    """Whole-plane j-arm exponent with both colours present, (j²-1)/12."""
    if j < 2:
        raise DomainError(f"polychromatic exponents need j >= 2, got {j}")
    return (j * j - 1) / 12.0


def three_arm_exponent(kappa: float) -> float:
    """Exponent of the BWW-type event for the CLE_κ analogue, 1 - 2/κ."""
    KappaParams(kappa)
    return 1.0 - 2.0 / kappa


def arm_exponents(kappa: float = 6.0) -> dict:
    exponents = {
        "one_arm": ONE_ARM_EXPONENT,
        "backbone": solve_xi(kappa).xi,
        "three_arm": three_arm_exponent(kappa),
    }
    exponents.update({f"polychromatic_{j}": polychromatic_exponent(j) for j in POLYCHROMATIC_ARMS})
    return exponents


def xi_curve(kappas) -> List[ExponentSolution]:
    return [solve_xi(k) for k in kappas]


def nearest_degenerate(kappa: float) -> Optional[float]:
    """Distance to κ0 when it is small enough for the double root to matter."""
    gap = kappa - solve_kappa0()
    return gap if abs(gap) < 1e-3 else None
