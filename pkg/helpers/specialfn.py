"""Gamma-family special functions.

Complex log-gamma uses a 14-term Lanczos sum (g = 671/128) with the
reflection formula for Re z < 1/2; digamma uses upward recurrence and the
asymptotic series. Both are plain scalar functions and hold no state.
"""
import cmath
import math
from typing import Tuple, Union

from helpers.errors import PoleError

POLE_TOL = 1e-12

LANCZOS_G = 5.2421875
LANCZOS_SER0 = 0.999999999999997092
LANCZOS_COEFFS = (
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
)
SQRT_2PI = 2.5066282746310005
LOG_PI = math.log(math.pi)

Number = Union[int, float, complex]


def _check_pole(z: complex):
    if z.real <= 0.5 and abs(z.imag) < POLE_TOL:
        nearest = round(z.real)
        if nearest <= 0 and abs(z.real - nearest) < POLE_TOL:
            raise PoleError(f"gamma pole at z={z!r} (non-positive integer {nearest})")


def _lanczos(z: complex) -> complex:
    tmp = z + LANCZOS_G
    tmp = (z + 0.5) * cmath.log(tmp) - tmp
    ser = LANCZOS_SER0
    for j, c in enumerate(LANCZOS_COEFFS):
        ser += c / (z + j + 1)
    # log(ser) and log(z) kept apart: each stays on the principal branch for Re z >= 1/2
    return tmp + math.log(SQRT_2PI) + cmath.log(ser) - cmath.log(z)


def log_gamma(z: Number) -> complex:
    """log Γ(z) for complex z.

    For Re z >= 1/2 this is the principal branch. Below that the reflection
    formula is used; exp() of the result is Γ(z), but the imaginary part may
    differ from the principal branch by a multiple of 2π.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise PoleError(f"non-finite argument {z!r}")
    _check_pole(z)
    if z.real < 0.5:
        if z.imag == 0.0:
            s = math.sin(math.pi * z.real)
            log_sin = complex(math.log(abs(s)), 0.0 if s > 0 else math.pi)
        else:
            log_sin = cmath.log(cmath.sin(math.pi * z))
        return LOG_PI - log_sin - log_gamma(1.0 - z)
    return _lanczos(z)


def gamma(z: Number) -> complex:
    return cmath.exp(log_gamma(z))


def gamma_real(x: float) -> float:
    """Signed Γ(x) for real x."""
    lg, sign = log_abs_gamma(x)
    return sign * math.exp(lg)


def log_abs_gamma(x: float) -> Tuple[float, int]:
    """(log|Γ(x)|, sign Γ(x)) for real x off the poles."""
    x = float(x)
    _check_pole(complex(x))
    if x > 0:
        return _lanczos(complex(x)).real, 1
    # Γ(x) < 0 exactly when floor(x) is odd
    sign = -1 if math.floor(x) % 2 else 1
    return log_gamma(x).real, sign


def digamma(x: float) -> float:
    x = float(x)
    if x <= 0:
        nearest = round(x)
        if abs(x - nearest) < POLE_TOL:
            raise PoleError(f"digamma pole at x={x!r}")
        # ψ(1−x) − ψ(x) = π cot(πx)
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    if x < 1e-6:
        return -1.0 / x - 0.5772156649015329 + 1.6449340668482264 * x
    result = 0.0
    while x < 8.5:
        result -= 1.0 / x
        x += 1.0
    r = 1.0 / (x * x)
    result += math.log(x) - 0.5 / x
    result -= r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r / 132))))
    return result
