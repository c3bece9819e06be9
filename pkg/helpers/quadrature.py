"""Adaptive Gauss-Kronrod integration and the integral-identity checks.

All integrands are vectorised: they receive a numpy array of abscissae and
return an array of the same shape. The global adaptive scheme keeps every
subinterval on a heap ordered by its error estimate and bisects the worst
one until the summed error meets the tolerance or the evaluation budget is
spent.
"""
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from __init__ import LOGGER
from config import config
from helpers.errors import DomainError, NonConvergence
from helpers.specialfn import digamma

Integrand = Callable[[np.ndarray], np.ndarray]

# 15-point Kronrod nodes on [-1, 1] (non-negative half) and the embedded 7-point Gauss weights
XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-XGK[:-1], XGK[::-1]])
_KRONROD_W = np.concatenate([WGK[:-1], WGK[::-1]])
_GAUSS_W = np.zeros(15)
# Gauss nodes sit at odd positions of XGK (indices 1, 3, 5 and the centre)
for _i, _w in zip((1, 3, 5, 7), WG):
    _GAUSS_W[_i] = _w
    _GAUSS_W[14 - _i] = _w

REMOVABLE_DELTA = 1e-6


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    evaluations: int

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value,
                          self.err_estimate + other.err_estimate,
                          self.evaluations + other.evaluations)


class IdentityCheck(NamedTuple):
    lhs: float
    rhs: float
    abs_err: float


def _gk15(f: Integrand, a: float, b: float) -> Tuple[float, float]:
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    values = np.asarray(f(centre + half * _NODES), dtype=float)
    if not np.all(np.isfinite(values)):
        bad = (centre + half * _NODES)[~np.isfinite(values)]
        raise NonConvergence(f"integrand not finite at x={bad[0]!r}")
    kronrod = half * float(np.dot(_KRONROD_W, values))
    gauss = half * float(np.dot(_GAUSS_W, values))
    return kronrod, abs(kronrod - gauss)


def _semi_infinite(f: Integrand, a: float) -> Integrand:
    # t = a + u/(1-u), dt = du/(1-u)^2
    def mapped(u: np.ndarray) -> np.ndarray:
        one_minus = 1.0 - u
        return f(a + u / one_minus) / (one_minus * one_minus)
    return mapped


def integrate(f: Integrand, a: float, b: float, tol: Optional[float] = None,
              rtol: float = 1e-13, max_evals: Optional[int] = None) -> QuadResult:
    """Integrate f over [a, b]; b may be +inf."""
    tol = config.TOL if tol is None else tol
    max_evals = config.MAX_EVALS if max_evals is None else max_evals
    if tol < 1e-13:
        raise DomainError(f"tolerance {tol} below the supported floor 1e-13")
    if math.isinf(a):
        raise DomainError("lower limit must be finite")
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    if b < a:
        res = integrate(f, b, a, tol, rtol, max_evals)
        return QuadResult(-res.value, res.err_estimate, res.evaluations)
    if math.isinf(b):
        return integrate(_semi_infinite(f, a), 0.0, 1.0, tol, rtol, max_evals)

    value, err = _gk15(f, a, b)
    evaluations = 15
    heap = [(-err, a, b, value, err)]
    total, total_err = value, err
    while heap:
        if total_err <= max(tol, rtol * abs(total)):
            return QuadResult(total, total_err, evaluations)
        if evaluations >= max_evals:
            raise NonConvergence(
                f"integral over [{a}, {b}] did not converge within {max_evals} evaluations "
                f"(estimate {total:.15g}, error {total_err:.3g})",
                evaluations, total, total_err)
        _, lo, hi, val, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # floating point cannot split further; the piece keeps its estimate
            continue
        left, left_err = _gk15(f, lo, mid)
        right, right_err = _gk15(f, mid, hi)
        evaluations += 30
        total += left + right - val
        total_err += left_err + right_err - e
        heapq.heappush(heap, (-left_err, lo, mid, left, left_err))
        heapq.heappush(heap, (-right_err, mid, hi, right, right_err))
    return QuadResult(total, max(total_err, 0.0), evaluations)


def integrate_origin_power(f: Integrand, b: float, power: float, **kwargs) -> QuadResult:
    """∫_0^b f where f(x) ~ x**power near 0 (power > -1).

    Substituting x = b * t**(1/(power+1)) turns the leading singularity
    into a constant.
    """
    if power <= -1:
        raise DomainError(f"endpoint power {power} is not integrable")
    k = 1.0 / (power + 1.0)

    def mapped(t: np.ndarray) -> np.ndarray:
        x = b * t ** k
        return f(x) * b * k * t ** (k - 1.0)
    return integrate(mapped, 0.0, 1.0, **kwargs)


def integrate_tail_power(f: Integrand, a: float, decay: float, **kwargs) -> QuadResult:
    """∫_a^∞ f where f(x) ~ x**decay for large x (decay < -1), a > 0."""
    if decay >= -1:
        raise DomainError(f"tail exponent {decay} is not integrable")
    if a <= 0:
        raise DomainError("tail map needs a positive starting point")
    k = -1.0 / (decay + 1.0)

    def mapped(t: np.ndarray) -> np.ndarray:
        x = a * t ** (-k)
        return f(x) * a * k * t ** (-k - 1.0)
    return integrate(mapped, 0.0, 1.0, **kwargs)


def integrate_removable(f: Integrand, a: float, b: float, point: float, limit: float,
                        delta: float = REMOVABLE_DELTA, **kwargs) -> QuadResult:
    """Integrate across a removable singularity at `point`.

    The ball (point-delta, point+delta) is excised and replaced by
    2*delta*limit. When `point` coincides with an endpoint only the
    one-sided half is replaced.
    """
    total = QuadResult(0.0, 0.0, 0)
    if point - delta > a:
        total = total + integrate(f, a, point - delta, **kwargs)
        patch = delta * limit
    else:
        patch = 0.0
    if point + delta < b:
        total = total + integrate(f, point + delta, b, **kwargs)
        patch += delta * limit
    # error of the patch is O(delta^2 * f'')
    return QuadResult(total.value + patch, total.err_estimate + delta * delta, total.evaluations)


def power_tail(terms: Iterable[Tuple[float, float]], start: float) -> float:
    """Closed-form Σ c ∫_start^∞ x**e dx for (c, e) pairs with e < -1."""
    total = 0.0
    for coeff, exponent in terms:
        if exponent >= -1:
            raise DomainError(f"tail term x^{exponent} is not integrable")
        total += coeff * start ** (exponent + 1.0) / -(exponent + 1.0)
    return total


# ---------------------------------------------------------------------------
# Identity checks


def _exp_quotient(p: float, q: float) -> Integrand:
    """x -> (e^{-px} - e^{-qx}) / (1 - e^{-x}), with limit q - p at x = 0."""
    low, sign = (p, 1.0) if p <= q else (q, -1.0)
    gap = abs(q - p)

    def fn(x: np.ndarray) -> np.ndarray:
        # factor out the slower exponential so expm1 never sees a positive argument
        return sign * np.exp(-low * x) * -np.expm1(-gap * x) / -np.expm1(-x)
    return fn


def _exp_quotient_integral(p: float, q: float, **kwargs) -> QuadResult:
    if p == q:
        return QuadResult(0.0, 0.0, 0)
    return integrate_removable(_exp_quotient(p, q), 0.0, math.inf, 0.0, q - p, **kwargs)


def check_digamma_integral(a: float, b: float, **kwargs) -> IdentityCheck:
    """∫_1^∞ (t^-a - t^-b)/(t-1) dt = ψ(b) - ψ(a), evaluated after t = e^x."""
    if a <= 0 or b <= 0:
        raise DomainError(f"need a, b > 0, got a={a}, b={b}")
    lhs = _exp_quotient_integral(a, b, **kwargs).value
    rhs = digamma(b) - digamma(a)
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def check_cot_integral(a: float, b: float, **kwargs) -> IdentityCheck:
    """∫_0^∞ (t^a - t^b)/(t-1) dt = π(cot πb - cot πa) for a, b in (-1, 0).

    Split at t = 1; with t = e^{±x} each half becomes an exponential
    difference quotient with a removable point at x = 0.
    """
    if not (-1 < a < 0 and -1 < b < 0):
        raise DomainError(f"need a, b in (-1, 0), got a={a}, b={b}")
    upper = _exp_quotient_integral(-a, -b, **kwargs)
    lower = _exp_quotient_integral(b + 1.0, a + 1.0, **kwargs)
    lhs = upper.value + lower.value
    rhs = math.pi * (1.0 / math.tan(math.pi * b) - 1.0 / math.tan(math.pi * a))
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def _weight_ratio(mu: np.ndarray, c: float) -> Tuple[np.ndarray, np.ndarray]:
    """Return (mu^c/(mu^c-1)^2, log mu) evaluated without cancellation."""
    log_mu = np.log(mu)
    ratio = np.empty_like(mu)
    above = mu > 1.0
    w = np.exp(-c * log_mu[above])
    ratio[above] = w / np.expm1(-c * log_mu[above]) ** 2
    v = np.exp(c * log_mu[~above])
    ratio[~above] = v / np.expm1(c * log_mu[~above]) ** 2
    return ratio, log_mu


def length_integrand(gamma: float, theta: float) -> Integrand:
    c = 4.0 / gamma ** 2

    def fn(mu: np.ndarray) -> np.ndarray:
        ratio, log_mu = _weight_ratio(mu, c)
        out = (mu - 1.0) * np.expm1((theta - 1.0) * log_mu) * ratio + np.exp((1.0 - c) * log_mu)
        far = mu > 2.0
        if np.any(far):
            m = mu[far]
            w = np.exp(-c * log_mu[far])
            bracket = m ** theta - m ** (theta - 1.0) + 1.0 - m * w * (2.0 - w)
            out[far] = w / (1.0 - w) ** 2 * bracket
        return out
    return fn


def length_closed_form(gamma: float, theta: float) -> float:
    g2 = gamma ** 2
    num = gamma ** 4 * math.pi * (theta * math.sin(math.pi * g2 / 2) - math.sin(math.pi * g2 * theta / 2))
    den = (32 * math.cos(math.pi * g2 / 4) * math.sin(math.pi * g2 * theta / 4)
           * math.sin(math.pi * g2 * (theta + 1) / 4))
    return num / den


TAIL_START = 1e4
TAIL_TERMS = 12


def _length_tail(c: float, theta: float, start: float) -> float:
    # w/(1-w)^2 = Σ k w^k and w^2(2-w)/(1-w)^2 = Σ_{j>=2} j w^j, with w = mu^-c
    terms = []
    for k in range(1, TAIL_TERMS + 1):
        terms += [(k, theta - k * c), (-k, theta - 1.0 - k * c), (k, -k * c)]
        if k >= 2:
            terms.append((-k, 1.0 - k * c))
    return power_tail(terms, start)


def length_integral(gamma: float, theta: float, **kwargs) -> QuadResult:
    c = 4.0 / gamma ** 2
    if not (math.sqrt(2) < gamma < 2):
        raise DomainError(f"gamma={gamma} outside (sqrt 2, 2)")
    if not (0 < theta < c - 1):
        raise DomainError(f"theta={theta} outside (0, {c - 1}); the integral diverges at the boundary")
    fn = length_integrand(gamma, theta)
    limit = 1.0 + (theta - 1.0) / c ** 2
    head = integrate_origin_power(fn, 0.5, 1.0 - c, **kwargs)
    middle = integrate_removable(fn, 0.5, TAIL_START, 1.0, limit, **kwargs)
    tail = _length_tail(c, theta, TAIL_START)
    total = head + middle
    return QuadResult(total.value + tail, total.err_estimate, total.evaluations)


def check_length_integral(gamma: float, theta: float, **kwargs) -> IdentityCheck:
    lhs = length_integral(gamma, theta, **kwargs).value
    rhs = length_closed_form(gamma, theta)
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def s_kernel_closed_form(mu: float, theta: float) -> float:
    if abs(mu - 1.0) < 1e-8:
        return (1.0 - theta) * math.pi / math.sin(math.pi * theta)
    return -math.pi / math.sin(math.pi * theta) * (mu ** (theta - 1.0) - 1.0) / (mu - 1.0)


def check_s_kernel(mu: float, theta: float, **kwargs) -> IdentityCheck:
    """∫_0^∞ s^{θ-1}/((μ+s)(1+s)) ds against its closed form."""
    if mu <= 0 or not (0 < theta < 1):
        raise DomainError(f"need mu > 0 and theta in (0,1), got mu={mu}, theta={theta}")

    def fn(s: np.ndarray) -> np.ndarray:
        return s ** (theta - 1.0) / ((mu + s) * (1.0 + s))
    lhs = (integrate_origin_power(fn, 1.0, theta - 1.0, **kwargs)
           + integrate_tail_power(fn, 1.0, theta - 3.0, **kwargs)).value
    rhs = s_kernel_closed_form(mu, theta)
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def check_beta_kernel(theta: float, **kwargs) -> IdentityCheck:
    """∫_0^∞ s^{θ-1}/(1+s) ds = π / sin(πθ)."""
    if not (0 < theta < 1):
        raise DomainError(f"theta={theta} outside (0, 1)")

    def fn(s: np.ndarray) -> np.ndarray:
        return s ** (theta - 1.0) / (1.0 + s)
    lhs = (integrate_origin_power(fn, 1.0, theta - 1.0, **kwargs)
           + integrate_tail_power(fn, 1.0, theta - 2.0, **kwargs)).value
    rhs = math.pi / math.sin(math.pi * theta)
    return IdentityCheck(lhs, rhs, abs(lhs - rhs))


def check_c1_integral(gamma: float, **kwargs) -> IdentityCheck:
    """∫_0^∞ (c(1-t)/(1-t^c)^2 - 1/(1-t^c)) t^{c-2} dt = 1, c = 4/γ².

    This is the t-integral that collapses the length transform behind the
    C1 computation to μ^{-1}.
    """
    if not (math.sqrt(2) < gamma < 2):
        raise DomainError(f"gamma={gamma} outside (sqrt 2, 2)")
    c = 4.0 / gamma ** 2

    def fn(t: np.ndarray) -> np.ndarray:
        log_t = np.log(t)
        one_minus = -np.expm1(c * log_t)
        # c(1-t) - (1-t^c), divided by (1-t^c)^2
        numer = c * -np.expm1(log_t) - one_minus
        return numer / one_minus ** 2 * np.exp((c - 2.0) * log_t)
    # ~ (c-1) t^{c-2} at 0 and ~ t^{-2} at infinity
    limit = (c - 1.0) / (2.0 * c)
    head = integrate_origin_power(fn, 0.5, c - 2.0, **kwargs)
    middle = integrate_removable(fn, 0.5, 2.0, 1.0, limit, **kwargs)
    tail = integrate_tail_power(fn, 2.0, -2.0, **kwargs)
    lhs = (head + middle + tail).value
    return IdentityCheck(lhs, 1.0, abs(lhs - 1.0))


# ---------------------------------------------------------------------------
# Nested check of the boundary three-point integral


def inner_kernel(mu: np.ndarray, c: float) -> np.ndarray:
    """K(μ) = μ^{c-1}(μ-1)²/(μ^c-1)² - μ^{1-c}, factored to avoid cancellation."""
    log_mu = np.log(mu)
    out = np.empty_like(mu)
    above = mu > 1.0
    m = mu[above]
    lm = log_mu[above]
    w = np.exp(-c * lm)
    one_minus_w = -np.expm1(-c * lm)
    out[above] = (np.expm1((1.0 - c) * lm) * ((m - 1.0) + m * one_minus_w)
                  * w / (m * one_minus_w ** 2))
    m = mu[~above]
    lm = log_mu[~above]
    v = np.exp(c * lm)
    one_minus_v = -np.expm1(c * lm)
    out[~above] = (-(m * one_minus_v + v * (1.0 - m)) * -m * np.expm1((c - 1.0) * lm)
                   / (m * v * one_minus_v ** 2))
    return out


def inner_regular_part(s: float, c: float, **kwargs) -> float:
    """P(s) = ∫_0^∞ μ/(μ+s) K(μ) dμ.

    The inner μ-integral of the three-point representation equals
    P(s) - s^{2-c} π / sin(π(2-c)); the second piece is the only one that
    does not decay in s.
    """
    def fn(mu: np.ndarray) -> np.ndarray:
        return mu / (mu + s) * inner_kernel(mu, c)
    limit = (1.0 / c ** 2 - 1.0) / (1.0 + s)
    head = integrate_origin_power(fn, 0.5, 1.0 - c, **kwargs)
    middle = integrate_removable(fn, 0.5, 2.0, 1.0, limit, **kwargs)
    tail = integrate_tail_power(fn, 2.0, -c, **kwargs)
    return (head + middle + tail).value


def inner_integral(s: float, c: float, **kwargs) -> float:
    """∫_0^∞ (μ^c(μ-1)²/((μ+s)(μ^c-1)²) - μ^{1-c}) dμ."""
    return inner_regular_part(s, c, **kwargs) - s ** (2.0 - c) * math.pi / math.sin(math.pi * (2.0 - c))


def three_point_closed_form(gamma: float, theta: float, e4: float) -> float:
    g2 = gamma ** 2
    num = e4 * gamma ** 4 * math.pi ** 2 * (math.sin(math.pi * g2 * theta / 2) - theta * math.sin(math.pi * g2 / 2))
    den = (32 * math.cos(math.pi * g2 / 4) * math.sin(math.pi * theta)
           * math.sin(math.pi * g2 * theta / 4) * math.sin(math.pi * g2 * (theta + 1) / 4))
    return num / den


class NestedCheck(NamedTuple):
    lhs: float
    rhs: float
    rel_err: float
    reduced: float


def check_three_point(gamma: float, theta: float, inner_tol: float = 1e-10, **kwargs) -> NestedCheck:
    """Nested quadrature of ∫_0^∞ H(s) s^{θ-1}/(1+s) ds against the closed form.

    H(s) = E4 ∫_0^∞ (...) dμ is evaluated by quadrature at every outer node.
    Its non-decaying part -E4 s^{2-c} π/sin(π(2-c)) is integrated against
    s^{θ-1}/(1+s) in closed form. `reduced` is the same quantity computed
    through the s-kernel identity, i.e. (-E4 π / sin πθ) times the length
    integral.
    """
    from helpers.lcft_constants import constants

    c = 4.0 / gamma ** 2
    if not (math.sqrt(2) < gamma < 2):
        raise DomainError(f"gamma={gamma} outside (sqrt 2, 2)")
    if not (0 < theta < c - 1):
        raise DomainError(f"theta={theta} outside (0, {c - 1})")
    e4 = constants(gamma).e4
    inner_kwargs = dict(kwargs, tol=inner_tol)

    def outer(s: np.ndarray) -> np.ndarray:
        values = np.array([inner_regular_part(float(x), c, **inner_kwargs) for x in np.ravel(s)])
        return values.reshape(np.shape(s)) * s ** (theta - 1.0) / (1.0 + s)

    outer_kwargs = dict(kwargs)
    outer_kwargs.setdefault("tol", 1e-7)
    regular = (integrate_origin_power(outer, 1.0, theta - 1.0, **outer_kwargs)
               + integrate_tail_power(outer, 1.0, theta - 1.0 - c, **outer_kwargs)).value
    a = theta + 2.0 - c
    growing = math.pi / math.sin(math.pi * (2.0 - c)) * math.pi / math.sin(math.pi * a)
    lhs = e4 * (regular - growing)
    rhs = three_point_closed_form(gamma, theta, e4)
    reduced = -e4 * math.pi / math.sin(math.pi * theta) * length_integral(gamma, theta, **kwargs).value
    LOGGER.debug(f"three-point gamma={gamma} theta={theta}: lhs={lhs:.12g} rhs={rhs:.12g} reduced={reduced:.12g}")
    return NestedCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), reduced)


def split_consistency(f: Integrand, split: float = 1.0, **kwargs) -> Tuple[QuadResult, QuadResult]:
    """(direct ∫_0^∞ f, ∫_0^split f + ∫_split^∞ f) for comparing both routes."""
    direct = integrate(f, 0.0, math.inf, **kwargs)
    pieces = integrate(f, 0.0, split, **kwargs) + integrate(f, split, math.inf, **kwargs)
    return direct, pieces


def grid_pairs(values: Sequence[float]) -> Iterable[Tuple[float, float]]:
    for a in values:
        for b in values:
            yield a, b
