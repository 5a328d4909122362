"""Problem definitions and the three manufactured-solution examples.

Coefficients are vectorised over rows: ``t`` has shape (m,) and ``x`` has
shape (m, n). ``b`` returns (m, n); ``c``, ``f``, ``g`` and ``chi`` return
(m,). All callbacks must be pure, since many paths evaluate them at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .geometry import Ball, Domain, rowdot
from .specfun import beta_fn, gamma_fn, hyp2f1_terminating, stable_constant

__all__ = [
    "TERMINAL",
    "INITIAL",
    "ProblemSpec",
    "SteadyProblemSpec",
    "ExampleCase",
    "build_example1",
    "build_example2",
    "build_example3",
    "build_example",
    "reverse_time",
    "bump_fractional_laplacian",
    "EXAMPLE_IDS",
]

TERMINAL = "terminal"
INITIAL = "initial"

Coef = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """Dirichlet problem for u_t - (-Delta)^s u + b.grad u + c u + f = 0.

    In terminal orientation ``g`` is the value at t = T on the domain; in
    initial orientation (after :func:`reverse_time`) it is the value at t = 0.
    ``chi`` is the exterior datum on [0, T] x (R^n minus D), also evaluated at
    boundary points.
    """

    n: int
    s: float
    T: float
    domain: Domain
    b: Coef
    c: Coef
    f: Coef
    g: Callable[[np.ndarray], np.ndarray]
    chi: Coef
    orientation: str = TERMINAL
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s!r}")
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T!r}")
        if self.domain.dim != self.n:
            raise ValueError("domain dimension does not match n")
        if self.orientation not in (TERMINAL, INITIAL):
            raise ValueError(f"unknown orientation {self.orientation!r}")


@dataclass(frozen=True)
class SteadyProblemSpec:
    """Dirichlet problem -(-Delta)^s u + b.grad u + c u + f = 0 in D, u = g outside.

    Callbacks take only ``x`` (m, n).
    """

    n: int
    s: float
    domain: Domain
    b: Callable[[np.ndarray], np.ndarray]
    c: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    name: str = "custom-steady"


@dataclass(frozen=True)
class ExampleCase:
    id: str
    n: int
    s: float
    problem: ProblemSpec
    exact: Coef
    # Holder regularity of the exact solution in x, drives the expected order
    beta: float
    i: Optional[int] = None


EXAMPLE_IDS = ("example1", "example2", "example3i1", "example3i2")


def reverse_time(p: ProblemSpec) -> ProblemSpec:
    """Switch between terminal-value and initial-value orientation.

    With v(t, x) = u(T - t, x) the drift, potential and source change sign
    and are evaluated at T - t; the exterior datum is evaluated at T - t.
    Applying the map twice gives back the original coefficients.
    """
    T = p.T
    b, c, f, chi = p.b, p.c, p.f, p.chi
    flipped = INITIAL if p.orientation == TERMINAL else TERMINAL
    return replace(
        p,
        b=lambda t, x: -b(T - t, x),
        c=lambda t, x: -c(T - t, x),
        f=lambda t, x: -f(T - t, x),
        chi=lambda t, x: chi(T - t, x),
        orientation=flipped,
    )


def _r2(x: np.ndarray) -> np.ndarray:
    return rowdot(x, x)


def _bump(x: np.ndarray, power: float) -> np.ndarray:
    return np.maximum(1.0 - _r2(x), 0.0) ** power


def bump_fractional_laplacian(n: int, s: float, i: int, r2):
    """(-Delta)^s of (1 - |x|^2)_+^(1+i+s) evaluated at |x|^2 = r2 < 1.

    Closed form through a terminating 2F1 (the second parameter is -(i+1)).
    ``i = 0`` gives the bump used in Examples 1 and 2.
    """
    coef = -stable_constant(n, s) * beta_fn(-s, i + s + 2.0) * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)
    return coef * hyp2f1_terminating(s + n / 2.0, i + 1, n / 2.0, np.asarray(r2, dtype=float))


def _zeros_like_t(t, x):
    return np.zeros(np.shape(x)[0])


def _zero_drift(t, x):
    return np.zeros_like(x, dtype=float)


def _check_example_args(n, s):
    if int(n) != n or n < 2:
        raise ValueError(f"examples need an integer dimension n >= 2, got {n!r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")


def build_example1(n: int, s: float) -> ExampleCase:
    """Fractional heat equation on the unit ball, u = t (1 - |x|^2)_+^(1+s)."""
    _check_example_args(n, s)
    T = 1.0
    p = 1.0 + s
    k = 2.0 ** (2 * s) * gamma_fn(2 + s) * gamma_fn(n / 2 + s) / gamma_fn(n / 2)
    slope = 1.0 + 2.0 * s / n

    def f(t, x):
        r2 = _r2(x)
        return k * (1.0 - slope * r2) * t - np.maximum(1.0 - r2, 0.0) ** p

    def exact(t, x):
        return np.asarray(t, dtype=float) * _bump(x, p)

    problem = ProblemSpec(
        n=n, s=s, T=T, domain=Ball.unit(n),
        b=_zero_drift, c=_zeros_like_t, f=f,
        g=lambda x: T * _bump(x, p),
        chi=_zeros_like_t,
        name="example1",
    )
    return ExampleCase("example1", n, s, problem, exact, beta=1.0 + s)


def build_example2(n: int, s: float) -> ExampleCase:
    """Drift, potential and nonzero exterior data; u = t (1 - |x|^2)_+^(1+s) + t."""
    _check_example_args(n, s)
    T = 1.0
    p = 1.0 + s
    k = 2.0 ** (2 * s) * gamma_fn(2 + s) * gamma_fn(n / 2 + s) / gamma_fn(n / 2)
    slope = 1.0 + 2.0 * s / n

    def b(t, x):
        return np.asarray(t, dtype=float)[:, None] * np.sin(x)

    def c(t, x):
        return np.exp(t) / (1.0 + np.exp(-np.sqrt(_r2(x))))

    def f(t, x):
        r2 = _r2(x)
        inner = np.maximum(1.0 - r2, 0.0)
        # minus b . grad u, where grad u = -2 (1+s) t (1-|x|^2)^s x
        drift_term = 2.0 * t * (1.0 + s) * inner**s * rowdot(t[:, None] * np.sin(x), x)
        return (
            k * (1.0 - slope * r2) * t
            + drift_term
            - np.exp(t) * (t * inner**p + t) / (1.0 + np.exp(-np.sqrt(r2)))
            - inner**p
            - 1.0
        )

    def chi(t, x):
        return np.broadcast_to(np.asarray(t, dtype=float), (np.shape(x)[0],)).copy()

    def exact(t, x):
        t = np.asarray(t, dtype=float)
        return t * _bump(x, p) + t

    problem = ProblemSpec(
        n=n, s=s, T=T, domain=Ball.unit(n),
        b=b, c=c, f=f,
        g=lambda x: T * _bump(x, p) + T,
        chi=chi,
        name="example2",
    )
    return ExampleCase("example2", n, s, problem, exact, beta=1.0 + s)


def build_example3(n: int, s: float, i: int, verbatim_source: bool = False) -> ExampleCase:
    """Smoother bump u_i = t (1 - |x|^2)_+^(1+i+s), i in {1, 2}.

    The time-derivative term of f carries the exponent 1+i+s. With
    ``verbatim_source=True`` it is fixed at 2+s for both i, the historical
    form of this source; for i = 2 it does not reproduce u_2.
    """
    _check_example_args(n, s)
    if i not in (1, 2):
        raise ValueError(f"example 3 needs i in {{1, 2}}, got {i!r}")
    T = 1.0
    p = 1.0 + i + s
    p_time = 2.0 + s if verbatim_source else p

    def f(t, x):
        r2 = _r2(x)
        return -np.maximum(1.0 - r2, 0.0) ** p_time + bump_fractional_laplacian(n, s, i, r2) * t

    def exact(t, x):
        return np.asarray(t, dtype=float) * _bump(x, p)

    problem = ProblemSpec(
        n=n, s=s, T=T, domain=Ball.unit(n),
        b=_zero_drift, c=_zeros_like_t, f=f,
        g=lambda x: T * _bump(x, p),
        chi=_zeros_like_t,
        name=f"example3i{i}",
    )
    return ExampleCase(f"example3i{i}", n, s, problem, exact, beta=p, i=i)


def build_example(example_id: str, n: int, s: float, verbatim_source: bool = False) -> ExampleCase:
    """Look up a built-in example by its CLI name."""
    if example_id == "example1":
        return build_example1(n, s)
    if example_id == "example2":
        return build_example2(n, s)
    if example_id in ("example3i1", "example3i2"):
        return build_example3(n, s, int(example_id[-1]), verbatim_source=verbatim_source)
    raise ValueError(
        f"unknown example {example_id!r}; choose one of {', '.join(EXAMPLE_IDS)}"
    )
