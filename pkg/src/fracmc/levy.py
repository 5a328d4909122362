"""Sampling primitives for the symmetric 2s-stable process with jumps of
size at most ``eps`` removed.

The Levy measure is nu(dy) = C(n, s) |y|^(-n-2s) dy. Removing the jumps
with |y| <= eps leaves a finite measure of mass ``lambda_eps``; the
remaining process is a compound Poisson process. The compensator of the
band eps < |y| < 1 that appears in the truncated process is
int y nu(dy) over a symmetric set, which is zero, so no drift correction
is needed between jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import rowdot
from .rng import (
    RngStream,
    normals_from_uniform,
    raw_block,
    signs_from_raw,
    uniform_from_raw,
)
from .specfun import gamma_fn, stable_constant

__all__ = [
    "StableNoiseParams",
    "make_params",
    "sample_jump_time",
    "sample_jump",
    "sample_rademacher",
    "jump_times_from_uniform",
    "jump_radii_from_uniform",
    "jumps_batch",
    "rademacher_batch",
]


@dataclass(frozen=True)
class StableNoiseParams:
    """Derived constants of the truncated stable noise for (n, s, eps).

    ``lambda_eps`` is the mass of nu outside the eps-ball (jumps per unit
    time). ``sigma_bar`` is the per-axis standard deviation scale of the
    removed small jumps, sigma_bar^2 = int_{|y|<eps} y_1^2 nu(dy).
    """

    n: int
    s: float
    eps: float
    c_ns: float
    lambda_eps: float
    sigma_bar: float


def make_params(n: int, s: float, eps: float) -> StableNoiseParams:
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s!r}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    n = int(n)
    c_ns = stable_constant(n, s)
    half_n = n / 2.0
    lam = (
        2.0 ** (2.0 * s) * gamma_fn(half_n + s) * eps ** (-2.0 * s)
        / (gamma_fn(1.0 - s) * gamma_fn(half_n))
    )
    sigma2 = (
        c_ns * eps ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
        * math.pi**half_n / gamma_fn(half_n + 1.0)
    )
    return StableNoiseParams(n, float(s), float(eps), c_ns, lam, math.sqrt(sigma2))


def jump_times_from_uniform(u, lambda_eps: float):
    """Inverse CDF of Exp(lambda_eps) at u in (0, 1]."""
    return -np.log(u) / lambda_eps


def jump_radii_from_uniform(u, eps: float, s: float):
    """Inverse of P(|J| > r) = (eps / r)^(2s) for r >= eps."""
    return eps * u ** (-1.0 / (2.0 * s))


def sample_jump_time(rng: RngStream, params: StableNoiseParams) -> float:
    return float(jump_times_from_uniform(rng.uniform(1), params.lambda_eps)[0])


def _direction_draws(n: int) -> int:
    return 2 * ((n + 1) // 2)


def sample_jump(rng: RngStream, params: StableNoiseParams) -> np.ndarray:
    """One jump R * omega with omega uniform on the sphere and |J| > eps."""
    n = params.n
    radius = jump_radii_from_uniform(rng.uniform(1), params.eps, params.s)[0]
    while True:
        z = normals_from_uniform(rng.uniform(_direction_draws(n)), n)
        norm = np.sqrt(rowdot(z[None, :], z[None, :])[0])
        if norm > 0.0:
            return radius * (z / norm)


def sample_rademacher(rng: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"n must be positive, got {n!r}")
    return rng.rademacher(n)


def jumps_batch(keys: np.ndarray, params: StableNoiseParams) -> np.ndarray:
    """Jumps for many jump-channel keys at once, shape (m, n).

    Consumes draws in the same order as :func:`sample_jump` on a stream
    with the same key, so the two agree path by path.
    """
    n = params.n
    k = _direction_draws(n)
    m = len(keys)
    u = uniform_from_raw(raw_block(keys, 1 + k))
    radius = jump_radii_from_uniform(u[:, 0], params.eps, params.s)
    z = normals_from_uniform(u[:, 1:], n)
    norm = np.sqrt(rowdot(z, z))
    bad = np.flatnonzero(norm == 0.0)
    offset = 1 + k
    while bad.size:
        # a zero Gaussian vector has probability ~2^-53 per pair; redraw
        zb = normals_from_uniform(
            uniform_from_raw(raw_block(keys[bad], k, offset)), n
        )
        z[bad] = zb
        norm[bad] = np.sqrt(rowdot(zb, zb))
        bad = bad[norm[bad] == 0.0]
        offset += k
    return radius[:, None] * (z / norm[:, None]) if m else np.zeros((0, n))


def rademacher_batch(keys: np.ndarray, n: int) -> np.ndarray:
    return signs_from_raw(raw_block(keys, n))
