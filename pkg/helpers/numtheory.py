"""Exact integer machinery: totients, cyclotomic polynomials and the minimal
polynomials of 2cos(2πk/n), plus a brute-force small-polynomial scan.

Polynomials are dense tuples of Python ints, constant term first, so
1 - 2x + x^3 is (1, -2, 0, 1).
"""
import functools
import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from __init__ import LOGGER
from helpers.errors import CapacityError, DomainError

MAX_TOTIENT = 10 ** 6
MAX_CYCLOTOMIC = 2000
MAX_SCAN_DEGREE = 6
MAX_SCAN_HEIGHT = 50
SCAN_RTOL = 1e-11
RATIONAL_COSINE_ORDERS = {1: 2, 2: -2, 3: -1, 4: 0, 6: 1}


@dataclass(frozen=True, init=False)
class IntPolynomial:
    coefficients: Tuple[int, ...]

    def __init__(self, *coefficients: int):
        end = len(coefficients)
        while end >= 1 and coefficients[end - 1] == 0:
            end -= 1
        for c in coefficients[:end]:
            if not isinstance(c, (int, np.integer)):
                raise DomainError(f"non-integer coefficient {c!r}")
        object.__setattr__(self, "coefficients", tuple(int(c) for c in coefficients[:end]))

    @classmethod
    def monomial(cls, degree: int, coefficient: int = 1) -> "IntPolynomial":
        return cls(*([0] * degree + [coefficient]))

    @property
    def degree(self) -> int:
        """Degree of the leading term; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    @property
    def leading(self) -> int:
        return self.coefficients[-1] if self.coefficients else 0

    @property
    def height(self) -> int:
        return max((abs(c) for c in self.coefficients), default=0)

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_monic(self) -> bool:
        return self.leading == 1

    def content(self) -> int:
        return functools.reduce(math.gcd, self.coefficients, 0)

    def primitive(self) -> "IntPolynomial":
        g = self.content()
        if g == 0:
            return self
        if self.leading < 0:
            g = -g
        return IntPolynomial(*(c // g for c in self.coefficients))

    def __call__(self, x):
        # Horner; works for ints, floats, complex and numpy arrays
        result = 0
        for c in reversed(self.coefficients):
            result = result * x + c
        return result

    def __add__(self, other: Union[int, "IntPolynomial"]) -> "IntPolynomial":
        coeffs = (other,) if isinstance(other, int) else other.coefficients
        return IntPolynomial(*(a + b for a, b in itertools.zip_longest(self.coefficients, coeffs, fillvalue=0)))

    def __sub__(self, other: Union[int, "IntPolynomial"]) -> "IntPolynomial":
        coeffs = (other,) if isinstance(other, int) else other.coefficients
        return IntPolynomial(*(a - b for a, b in itertools.zip_longest(self.coefficients, coeffs, fillvalue=0)))

    def __neg__(self) -> "IntPolynomial":
        return IntPolynomial(*(-c for c in self.coefficients))

    def __mul__(self, other: Union[int, "IntPolynomial"]) -> "IntPolynomial":
        if isinstance(other, int):
            return IntPolynomial(*(c * other for c in self.coefficients))
        if self.is_zero() or other.is_zero():
            return IntPolynomial()
        result = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a:
                for j, b in enumerate(other.coefficients):
                    result[i + j] += a * b
        return IntPolynomial(*result)

    __radd__ = __add__
    __rmul__ = __mul__

    def __divmod__(self, divisor: "IntPolynomial") -> Tuple["IntPolynomial", "IntPolynomial"]:
        """Quotient and remainder over the integers; the divisor's leading
        coefficient must divide every leading term met along the way."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        remainder = list(self.coefficients)
        quotient = [0] * max(0, len(remainder) - len(divisor.coefficients) + 1)
        lead = divisor.leading
        dlen = len(divisor.coefficients)
        for shift in range(len(remainder) - dlen, -1, -1):
            top = remainder[shift + dlen - 1]
            if top == 0:
                continue
            t, rest = divmod(top, lead)
            if rest:
                raise DomainError(f"{top} is not divisible by {lead}")
            quotient[shift] = t
            for j, d in enumerate(divisor.coefficients):
                remainder[shift + j] -= t * d
        return IntPolynomial(*quotient), IntPolynomial(*remainder)

    def exact_div(self, divisor: "IntPolynomial") -> "IntPolynomial":
        quotient, remainder = divmod(self, divisor)
        if not remainder.is_zero():
            raise DomainError(f"{self} is not divisible by {divisor}: remainder {remainder}")
        return quotient

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = []
        for i, c in reversed(list(enumerate(self.coefficients))):
            if c == 0:
                continue
            sign = " + " if (c > 0 and parts) else " - " if (c < 0 and parts) else "" if c > 0 else "-"
            term = "" if i == 0 else "x" if i == 1 else f"x^{i}"
            coeff = str(abs(c)) if (abs(c) != 1 or i == 0) else ""
            parts.append(sign + coeff + term)
        return "".join(parts)

    def to_dict(self) -> dict:
        return {"coefficients": list(self.coefficients), "text": str(self)}


X = IntPolynomial(0, 1)


def _factorize(n: int) -> List[Tuple[int, int]]:
    factors = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            factors.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        factors.append((n, 1))
    return factors


def totient(n: int) -> int:
    if n < 1:
        raise DomainError(f"totient needs n >= 1, got {n}")
    if n > MAX_TOTIENT:
        raise CapacityError(f"totient limited to n <= {MAX_TOTIENT}, got {n}")
    result = n
    for p, _ in _factorize(n):
        result -= result // p
    return result


def divisors(n: int) -> List[int]:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


@functools.lru_cache(maxsize=None)
def cyclotomic(n: int) -> IntPolynomial:
    if n < 1:
        raise DomainError(f"cyclotomic needs n >= 1, got {n}")
    if n > MAX_CYCLOTOMIC:
        raise CapacityError(f"cyclotomic limited to n <= {MAX_CYCLOTOMIC}, got {n}")
    poly = IntPolynomial.monomial(n) - 1
    for d in divisors(n)[:-1]:
        poly = poly.exact_div(cyclotomic(d))
    return poly


@functools.lru_cache(maxsize=None)
def dickson(j: int) -> IntPolynomial:
    """D_j with D_j(x + 1/x) = x^j + x^{-j}."""
    if j == 0:
        return IntPolynomial(2)
    if j == 1:
        return X
    return X * dickson(j - 1) - dickson(j - 2)


def min_poly_two_cos(n: int) -> IntPolynomial:
    """Minimal polynomial ψ_n of 2cos(2π/n), so that ψ_n(x + 1/x) = x^{-φ(n)/2} Φ_n(x)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if n == 1:
        return IntPolynomial(-2, 1)
    if n == 2:
        return IntPolynomial(2, 1)
    phi = cyclotomic(n).coefficients
    m = len(phi) // 2
    # Φ_n is palindromic for n >= 2: x^{-m}Φ_n = c_m + Σ c_{m+j}(x^j + x^{-j})
    result = IntPolynomial(phi[m])
    for j in range(1, m + 1):
        result = result + dickson(j) * phi[m + j]
    return result


@dataclass(frozen=True)
class TwoCosClass:
    rational: bool
    value: Optional[int] = None
    degree: int = 1

    def __str__(self) -> str:
        if self.rational:
            return f"Integer({self.value})"
        return f"IrrationalAlgebraic({self.degree})"


def classify_two_cos(k: int, n: int) -> TwoCosClass:
    """2cos(2πk/n) is an integer exactly for n in {1, 2, 3, 4, 6}; otherwise
    it is algebraic of degree φ(n)/2."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if math.gcd(k, n) != 1:
        raise DomainError(f"gcd({k}, {n}) != 1")
    if n in RATIONAL_COSINE_ORDERS:
        return TwoCosClass(True, RATIONAL_COSINE_ORDERS[n], 1)
    return TwoCosClass(False, None, totient(n) // 2)


def product_of_cyclotomics(n: int) -> IntPolynomial:
    result = IntPolynomial(1)
    for d in divisors(n):
        result = result * cyclotomic(d)
    return result


# ---------------------------------------------------------------------------
# small polynomial scan


@dataclass(frozen=True)
class _Hit:
    height: int
    coefficients: Tuple[int, ...]


VECTOR_COEFFS = 3


def _scan_stratum(x: float, degree: int, leading: int, height: int) -> Optional[_Hit]:
    """Best relation with the given degree and leading coefficient, or None.

    The lowest free coefficients c1..c_k (k <= 3) form a numpy grid, the
    remaining ones are looped over, and c0 is forced to the nearest integer
    of -(rest)."""
    powers = x ** np.arange(degree + 1)
    span = np.arange(-height, height + 1, dtype=np.int64)
    free = degree - 1
    k = min(free, VECTOR_COEFFS)
    if k:
        grids = np.meshgrid(*([span] * k), indexing="ij")
        inner = np.stack([g.ravel() for g in grids], axis=1)
    else:
        inner = np.zeros((1, 0), dtype=np.int64)
    inner_value = inner @ powers[1:k + 1]
    inner_scale = np.abs(inner) @ np.abs(powers[1:k + 1])
    best = None
    for outer in itertools.product(range(-height, height + 1), repeat=free - k):
        top = leading * powers[degree] + sum(c * powers[k + 1 + i] for i, c in enumerate(outer))
        top_scale = leading * abs(powers[degree]) + sum(abs(c * powers[k + 1 + i]) for i, c in enumerate(outer))
        partial_sum = inner_value + top
        c0 = -np.rint(partial_sum)
        scale = np.maximum(1.0, np.abs(c0) + inner_scale + top_scale)
        ok = (np.abs(c0) <= height) & (np.abs(partial_sum + c0) < SCAN_RTOL * scale)
        for idx in np.flatnonzero(ok):
            coeffs = (int(c0[idx]), *(int(c) for c in inner[idx]), *outer, leading)
            h = max(abs(c) for c in coeffs)
            if best is None or h < best.height:
                best = _Hit(h, coeffs)
    return best


def small_poly_scan(x: float, max_degree: int, max_height: int, workers: int = 1) -> Optional[IntPolynomial]:
    """Smallest-degree, then smallest-height, integer polynomial vanishing at x
    to floating precision. Absence of a hit proves nothing beyond the box."""
    if not (1 <= max_degree <= MAX_SCAN_DEGREE):
        raise CapacityError(f"max_degree must be in [1, {MAX_SCAN_DEGREE}], got {max_degree}")
    if not (1 <= max_height <= MAX_SCAN_HEIGHT):
        raise CapacityError(f"max_height must be in [1, {MAX_SCAN_HEIGHT}], got {max_height}")
    for degree in range(1, max_degree + 1):
        LOGGER.debug(f"scan x={x!r} degree={degree} height<={max_height}")
        if workers == 1:
            hits = [_scan_stratum(x, degree, lead, max_height) for lead in range(1, max_height + 1)]
        else:
            hits = Parallel(n_jobs=workers)(
                delayed(_scan_stratum)(x, degree, lead, max_height) for lead in range(1, max_height + 1)
            )
        hits = [h for h in hits if h is not None]
        if hits:
            best = min(hits, key=lambda h: (h.height, h.coefficients[::-1]))
            return IntPolynomial(*best.coefficients).primitive()
    return None


def two_cos_roots_match(n: int, tol: float = 1e-9) -> bool:
    """The roots of ψ_n are exactly the values 2cos(2πk/n), gcd(k, n) = 1.

    The distinct values number deg ψ_n and each must be a root up to tol
    relative to the size of the terms, measured at |v| no smaller than 1."""
    # k and n - k give the same value
    ks = [k for k in coprime_residues(n) if 2 * k <= n] or [n]
    values = [2.0 * math.cos(2.0 * math.pi * k / n) for k in ks]
    poly = min_poly_two_cos(n)
    if len(values) != poly.degree:
        return False
    magnitude = IntPolynomial(*(abs(c) for c in poly.coefficients))
    return all(abs(poly(v)) <= tol * magnitude(max(1.0, abs(v))) for v in values)


def coprime_residues(n: int) -> Sequence[int]:
    return [k for k in range(1, n + 1) if math.gcd(k, n) == 1]
