"""Real special functions used by the stable-process constants and the
manufactured right-hand sides.

Gamma uses the Lanczos approximation (g = 7, nine coefficients) with the
reflection formula below 1/2. Only the terminating Gauss series is offered
for 2F1 since the examples only ever need a negative-integer parameter.
"""

from __future__ import annotations

import math

__all__ = [
    "PoleError",
    "gamma_fn",
    "beta_fn",
    "hyp2f1_terminating",
    "stable_constant",
]

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
# Gamma(171.62...) is the largest value representable as a double.
_GAMMA_XMAX = 171.624376956302


class PoleError(ValueError):
    """Raised when a Gamma-type function is evaluated at a pole."""


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma_fn(x: float) -> float:
    """Gamma function for real, finite ``x`` off the non-positive integers.

    Raises
    ------
    PoleError
        If ``x`` is 0, -1, -2, ...
    OverflowError
        If ``x`` exceeds ~171.62, where Gamma overflows a double.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"gamma_fn needs a finite argument, got {x!r}")
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at x = {x:g}")
    if x > _GAMMA_XMAX:
        raise OverflowError(f"Gamma({x:g}) overflows a double")
    if x < 0.5:
        # sin(pi x) via the reduced argument keeps accuracy near integers
        return math.pi / (_sinpi(x) * gamma_fn(1.0 - x))

    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    # split the power so t**(z+0.5) does not overflow before exp(-t) applies
    half = t ** ((z + 0.5) / 2.0)
    return _SQRT_2PI * half * math.exp(-t) * half * acc


def _sinpi(x: float) -> float:
    # reduce to [-1, 1] without a round trip through r + 2, which loses
    # digits for small |x|; 1 - r and -1 - r are exact near the ends
    r = math.fmod(x, 2.0)
    if r > 1.0:
        r -= 2.0
    elif r < -1.0:
        r += 2.0
    if r > 0.5:
        return math.sin(math.pi * (1.0 - r))
    if r < -0.5:
        return math.sin(math.pi * (-1.0 - r))
    return math.sin(math.pi * r)


def beta_fn(a: float, b: float) -> float:
    """Euler Beta function Gamma(a)Gamma(b)/Gamma(a+b)."""
    return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)


def hyp2f1_terminating(a: float, m: int, c: float, z: float) -> float:
    """Gauss hypergeometric 2F1(a, -m; c; z) for a non-negative integer ``m``.

    The series stops after ``m + 1`` terms, so this is an exact polynomial
    evaluation in ``z``.
    """
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m!r}")
    m = int(m)
    for k in range(m):
        if c + k == 0.0:
            raise PoleError(f"(c)_k vanishes for c = {c:g}, k = {k + 1}")
    term = 1.0
    total = 1.0
    for k in range(m):
        term *= (a + k) * (k - m) / ((c + k) * (k + 1)) * z
        total += term
    return total


def stable_constant(n: int, s: float) -> float:
    """Normalising constant C(n, s) of the fractional Laplacian kernel.

    C(n, s) = s 4^s Gamma(n/2 + s) / (pi^(n/2) Gamma(1 - s)).
    """
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    return (
        s * 2.0 ** (2.0 * s) * gamma_fn(n / 2.0 + s)
        / (math.pi ** (n / 2.0) * gamma_fn(1.0 - s))
    )
