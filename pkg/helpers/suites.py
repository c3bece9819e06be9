"""Verification suites: every identity the toolkit relies on, checked
numerically and reported one row at a time.

A row carries the identity name, its parameters, both sides, the error
and the tolerance it was judged against. Quadrature-backed rows are
retried with a doubled evaluation budget when they fail to converge.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from tenacity import retry, retry_if_exception_type, stop_after_attempt

from __init__ import LOGGER, SUITES
from config import config
from helpers import exponent, lcft_constants, moment, numtheory, quadrature
from helpers.errors import DomainError, NonConvergence

# (q, ξ) pairs printed in the exponent table
TABLE_REFERENCE = (
    (2.0, 0.2678678166),
    (3.0, 0.2059232891),
    (2.0 + math.sqrt(3.0), 0.1602191369),
)
XI_KAPPA6 = 0.35666683671288
KAPPA0 = 5.593245


@dataclass(frozen=True)
class CheckRow:
    name: str
    params: Dict[str, float]
    lhs: float
    rhs: float
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.error) and self.error <= self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "lhs": self.lhs, "rhs": self.rhs,
                "error": self.error, "tol": self.tol, "pass": self.passed}

    def __str__(self) -> str:
        params = ",".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params.items())
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.name:<24} {params:<34} {self.lhs: .15e} {self.rhs: .15e} "
                f"{self.error:.3e} {status}")


@dataclass
class SuiteReport:
    suite: str
    rows: List[CheckRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> List[CheckRow]:
        return [r for r in self.rows if not r.passed]

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "count": len(self.rows),
                "failures": len(self.failures), "rows": [r.to_dict() for r in self.rows]}


class CheckJob(NamedTuple):
    name: str
    fn: Callable[..., Tuple[float, float]]
    params: Dict[str, float]
    tol: float
    relative: bool = False
    budgeted: bool = False


def _log_retry(retry_state):
    LOGGER.warning(f"Retrying {retry_state.args[0].name} with a larger evaluation budget "
                   f"(attempt {retry_state.attempt_number})...")


def _evaluate(job: CheckJob) -> CheckRow:
    budget = {"max_evals": config.MAX_EVALS}

    def grow(retry_state):
        _log_retry(retry_state)
        budget["max_evals"] *= 2

    @retry(
        stop=stop_after_attempt(config.RETRY_ATTEMPTS),
        retry=retry_if_exception_type(NonConvergence),
        before_sleep=grow,
        reraise=True,
    )
    def attempt(job: CheckJob) -> Tuple[float, float]:
        if job.budgeted:
            return job.fn(max_evals=budget["max_evals"], **job.params)
        return job.fn(**job.params)

    lhs, rhs = attempt(job)
    error = abs(lhs - rhs)
    if job.relative:
        error /= max(abs(rhs), 1e-300)
    return CheckRow(job.name, dict(job.params), float(lhs), float(rhs), float(error), job.tol)


# ---------------------------------------------------------------------------
# individual identities, kept at module level so worker processes can import them


def _pair(check) -> Tuple[float, float]:
    return check.lhs, check.rhs


def digamma_integral(a: float, b: float, **kwargs):
    return _pair(quadrature.check_digamma_integral(a, b, **kwargs))


def cot_integral(a: float, b: float, **kwargs):
    return _pair(quadrature.check_cot_integral(a, b, **kwargs))


def length_integral(gamma: float, theta: float, **kwargs):
    return _pair(quadrature.check_length_integral(gamma, theta, **kwargs))


def s_kernel(mu: float, theta: float, **kwargs):
    return _pair(quadrature.check_s_kernel(mu, theta, **kwargs))


def beta_kernel(theta: float, **kwargs):
    return _pair(quadrature.check_beta_kernel(theta, **kwargs))


def c1_integral(gamma: float, **kwargs):
    return _pair(quadrature.check_c1_integral(gamma, **kwargs))


def three_point_integral(gamma: float, theta: float, **kwargs):
    return _pair(quadrature.check_three_point(gamma, theta, **kwargs))


def c1_dual(gamma: float):
    return lcft_constants.c1_closed(gamma), lcft_constants.c1_assembled(gamma)


def c1_reflection(gamma: float):
    return lcft_constants.c1_closed(gamma), lcft_constants.c1_intermediate(gamma)


def e4_dual(gamma: float):
    return lcft_constants.e4_definition(gamma), lcft_constants.e4_simplified(gamma)


def gbar_unit(gamma: float):
    return lcft_constants.gbar(gamma, lcft_constants.BetaCase.BETA0, gamma), 1.0


def moment_at_exponent(kappa: float):
    params = exponent.KappaParams(kappa)
    return moment.moment_f(params, -exponent.solve_xi(kappa).xi).real, 1.0


def moment_at_zero(kappa: float):
    return moment.moment_f(exponent.KappaParams(kappa), 0.0).real, 0.0


def moment_at_unit_theta(kappa: float):
    params = exponent.KappaParams(kappa)
    return moment.moment_f(params, kappa / 8.0 - 1.0).real, moment.unit_theta_value(params)


def moment_even(kappa: float, re: float, im: float):
    params = exponent.KappaParams(kappa)
    theta = complex(re, im)
    gap = moment.moment_f_theta(params, theta) - moment.moment_f_theta(params, -theta)
    return abs(gap), 0.0


def parametrization_worst(gamma: float):
    """Worst gap between the γ- and κ-forms of the moment over an α grid."""
    params = exponent.KappaParams.from_gamma(gamma)
    worst = (0.0, 0.0, -1.0)
    for frac in np.linspace(0.025, 0.975, 20):
        alpha = gamma + (params.q_big - gamma) * float(frac)
        lhs = moment.moment_f_gamma(params, alpha)
        rhs = moment.moment_f(params, moment.lambda_from_alpha(params, alpha)).real
        gap = abs(lhs - rhs) / max(1.0, abs(rhs))
        if gap > worst[2]:
            worst = (lhs, rhs, gap)
    return worst[0], worst[1]


def f_alpha_chain(gamma: float, frac: float):
    params = exponent.KappaParams.from_gamma(gamma)
    alpha = gamma + (params.q_big - gamma) * frac
    return lcft_constants.f_alpha(gamma, alpha), moment.moment_f_gamma(params, alpha) - 1.0


def kappa6_reduction():
    return exponent.solve_xi(6.0).xi, exponent.solve_xi_kappa6().xi


def kappa6_value():
    return exponent.solve_xi(6.0).xi, XI_KAPPA6


def table_value(q: float, expected: float):
    return exponent.solve_xi(exponent.kappa_from_q(q)).xi, expected


def q4_limit():
    return exponent.exponent_table()[-1][2], 0.125


def kappa0_value():
    return exponent.solve_kappa0(), KAPPA0


def moment_root(kappa: float):
    params = exponent.KappaParams(kappa)
    return moment.xi_from_moment(params).xi, exponent.solve_xi(kappa).xi


def cyclotomic_products(max_n: int):
    matched = sum(1 for n in range(1, max_n + 1)
                  if numtheory.product_of_cyclotomics(n) == numtheory.IntPolynomial.monomial(n) - 1)
    return float(matched), float(max_n)


def two_cos_roots(max_n: int):
    matched = sum(1 for n in range(1, max_n + 1) if numtheory.two_cos_roots_match(n))
    return float(matched), float(max_n)


def classification_degrees(max_n: int):
    pairs = matched = 0
    for n in range(1, max_n + 1):
        degree = numtheory.min_poly_two_cos(n).degree
        for k in numtheory.coprime_residues(n):
            pairs += 1
            matched += numtheory.classify_two_cos(k, n).degree == degree
    return float(matched), float(pairs)


def totient_sums(max_n: int):
    # Σ_{d|n} φ(d) = n
    matched = sum(1 for n in range(1, max_n + 1)
                  if sum(numtheory.totient(d) for d in numtheory.divisors(n)) == n)
    return float(matched), float(max_n)


def scan_sqrt2():
    found = numtheory.small_poly_scan(math.sqrt(2.0), 4, 30)
    return float(found == numtheory.IntPolynomial(-2, 0, 1)), 1.0


def scan_backbone():
    found = numtheory.small_poly_scan(exponent.solve_xi(6.0).xi, 4, 30)
    if found is not None:
        LOGGER.warning(f"small-polynomial scan matched xi(6) with {found}")
    return float(found is None), 1.0


# ---------------------------------------------------------------------------
# suite definitions


def _integral_jobs(tol: Optional[float]) -> List[CheckJob]:
    jobs = []
    digamma_tol = 1e-8 if tol is None else tol
    for a, b in quadrature.grid_pairs((0.3, 0.7, 1.5, 2.5, 4.0)):
        jobs.append(CheckJob("digamma_integral", digamma_integral, {"a": a, "b": b}, digamma_tol, budgeted=True))
    for a, b in quadrature.grid_pairs((-0.9, -0.7, -0.5, -0.3, -0.1)):
        jobs.append(CheckJob("cot_integral", cot_integral, {"a": a, "b": b}, digamma_tol, budgeted=True))
    length_tol = 1e-7 if tol is None else tol
    for gamma in (1.5, 1.633, 1.8):
        top = 4.0 / gamma ** 2 - 1.0
        for frac in (0.15, 0.3, 0.5, 0.7, 0.85):
            jobs.append(CheckJob("length_integral", length_integral, {"gamma": gamma, "theta": top * frac},
                                 length_tol, budgeted=True))
    kernel_tol = 1e-9 if tol is None else tol
    for mu in (0.25, 1.0, 3.0):
        for theta in (0.3, 0.7):
            jobs.append(CheckJob("s_kernel", s_kernel, {"mu": mu, "theta": theta}, kernel_tol, budgeted=True))
    for theta in (0.25, 0.5, 0.75):
        jobs.append(CheckJob("beta_kernel", beta_kernel, {"theta": theta}, kernel_tol, budgeted=True))
    for gamma in (1.5, 1.633, 1.8):
        jobs.append(CheckJob("c1_integral", c1_integral, {"gamma": gamma}, digamma_tol, budgeted=True))
    for gamma, theta in ((1.5, 0.5), (1.633, 0.4), (1.8, 0.2)):
        jobs.append(CheckJob("three_point_integral", three_point_integral, {"gamma": gamma, "theta": theta},
                             1e-4, relative=True, budgeted=True))
    return jobs


def _gamma_grid(count: int = 50) -> List[float]:
    return [float(g) for g in np.linspace(1.42, 1.99, count)]


def _constant_jobs(tol: Optional[float]) -> List[CheckJob]:
    tol = 1e-10 if tol is None else tol
    jobs = []
    for gamma in _gamma_grid():
        jobs.append(CheckJob("c1_dual", c1_dual, {"gamma": gamma}, tol, relative=True))
        jobs.append(CheckJob("e4_dual", e4_dual, {"gamma": gamma}, tol, relative=True))
    for gamma in _gamma_grid(10):
        jobs.append(CheckJob("c1_reflection", c1_reflection, {"gamma": gamma}, tol, relative=True))
    return jobs


def _identity_jobs(tol: Optional[float]) -> List[CheckJob]:
    jobs = [
        CheckJob("kappa0", kappa0_value, {}, 1e-5),
        CheckJob("xi_kappa6", kappa6_value, {}, 1e-10),
        CheckJob("kappa6_reduction", kappa6_reduction, {}, 1e-12),
        CheckJob("xi_q4_limit", q4_limit, {}, 1e-4),
    ]
    for q, expected in TABLE_REFERENCE:
        jobs.append(CheckJob("xi_table", table_value, {"q": q, "expected": expected}, 1e-9))
    for kappa in np.linspace(4.05, 7.95, 50):
        jobs.append(CheckJob("moment_at_exponent", moment_at_exponent, {"kappa": float(kappa)},
                             1e-9 if tol is None else tol))
    for kappa in (4.5, 5.0, 6.0, 7.0, 7.5):
        jobs.append(CheckJob("moment_at_zero", moment_at_zero, {"kappa": kappa}, 1e-11))
        jobs.append(CheckJob("moment_at_unit_theta", moment_at_unit_theta, {"kappa": kappa}, 1e-11))
        jobs.append(CheckJob("moment_root", moment_root, {"kappa": kappa}, 1e-9))
    for kappa, re, im in ((6.0, 0.3, 0.2), (5.0, 0.7, -0.4), (7.0, 1.3, 0.5)):
        jobs.append(CheckJob("moment_even", moment_even, {"kappa": kappa, "re": re, "im": im}, 1e-10))
    for gamma in np.linspace(1.45, 1.95, 20):
        jobs.append(CheckJob("parametrization", parametrization_worst, {"gamma": float(gamma)}, 1e-12,
                             relative=True))
    for gamma in _gamma_grid(10):
        jobs.append(CheckJob("gbar_beta0_unit", gbar_unit, {"gamma": gamma}, 1e-12))
    for gamma in (1.5, 1.633, 1.8):
        for frac in (0.2, 0.5, 0.8):
            jobs.append(CheckJob("f_alpha_chain", f_alpha_chain, {"gamma": gamma, "frac": frac}, 1e-9,
                                 relative=True))
    return jobs


def _numtheory_jobs(tol: Optional[float]) -> List[CheckJob]:
    return [
        CheckJob("cyclotomic_products", cyclotomic_products, {"max_n": 500}, 0.0),
        CheckJob("totient_sums", totient_sums, {"max_n": 500}, 0.0),
        CheckJob("two_cos_roots", two_cos_roots, {"max_n": 50}, 0.0),
        CheckJob("classification_degrees", classification_degrees, {"max_n": 200}, 0.0),
        CheckJob("scan_sqrt2", scan_sqrt2, {}, 0.0),
        CheckJob("scan_backbone_none", scan_backbone, {}, 0.0),
    ]


SUITE_JOBS = {
    "integrals": _integral_jobs,
    "constants": _constant_jobs,
    "identities": _identity_jobs,
    "numtheory": _numtheory_jobs,
}


def suite_jobs(suite: str, tol: Optional[float] = None) -> List[CheckJob]:
    if suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}, expected one of {SUITES}")
    if tol is not None and not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    return SUITE_JOBS[suite](tol)


def run_suite(suite: str, tol: Optional[float] = None, workers: int = 1) -> SuiteReport:
    jobs = suite_jobs(suite, tol)
    LOGGER.info(f"Running suite {suite}: {len(jobs)} checks on {workers} worker(s)")
    if workers > 1:
        rows = Parallel(n_jobs=workers)(delayed(_evaluate)(job) for job in jobs)
    else:
        rows = [_evaluate(job) for job in jobs]
    report = SuiteReport(suite, list(rows))
    for row in report.failures:
        LOGGER.warning(f"{suite}: {row.name} {row.params} outside tolerance ({row.error:.3g} > {row.tol:.3g})")
    LOGGER.info(f"Suite {suite}: {len(rows) - len(report.failures)}/{len(rows)} passed")
    return report
