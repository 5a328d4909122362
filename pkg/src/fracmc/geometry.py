"""Domains and first-exit times along the deterministic inter-jump motion.

A point on the boundary counts as outside: trajectories stop at the first
boundary contact and the contact point is the exit state.

Two motions occur between jumps:

* linear, ``x0 + d * v`` (drift only);
* square-root, ``x0 + d * b + sqrt(d) * w`` (drift plus the frozen
  small-jump replacement ``w = sigma_bar * xi``).

Batch functions take row-stacked inputs of shape (m, n) and return exit
durations with ``inf`` meaning "no exit within dt_max". The scalar wrappers
return ``None`` instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "Ball",
    "GeneralDomain",
    "Domain",
    "contains",
    "first_exit_linear",
    "first_exit_sqrt",
    "exit_linear_batch",
    "exit_sqrt_batch",
    "motion_point",
    "DEFAULT_SCAN_K",
    "BISECT_TOL",
]

DEFAULT_SCAN_K = 64
BISECT_TOL = 1e-12
_MAX_NUDGE = 64


def rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise dot product summed left to right.

    einsum and sum pick their summation order from the array layout, so a
    row could round differently inside a large batch than on its own; that
    would break batch-independent results and flip boundary classification.
    """
    acc = a[:, 0] * b[:, 0]
    for k in range(1, a.shape[1]):
        acc = acc + a[:, k] * b[:, k]
    return acc


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def unit(cls, n: int) -> "Ball":
        return cls(np.zeros(n), 1.0)

    @property
    def dim(self) -> int:
        return self.center.size

    def inside(self, x: np.ndarray) -> np.ndarray:
        d = x - self.center
        return rowdot(d, d) < self.radius * self.radius


@dataclass(frozen=True)
class GeneralDomain:
    """Domain given by a vectorised inside-predicate and a bounding ball.

    ``inside`` maps an (m, n) array to an (m,) boolean array and must be
    False everywhere outside ``bounding``.
    """

    inside_fn: Callable[[np.ndarray], np.ndarray]
    bounding: Ball = field(default=None)

    def __post_init__(self):
        if not isinstance(self.bounding, Ball):
            raise TypeError("GeneralDomain needs a bounding Ball")

    @property
    def dim(self) -> int:
        return self.bounding.dim

    def inside(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.inside_fn(x), dtype=bool) & self.bounding.inside(x)


Domain = Union[Ball, GeneralDomain]


def _rows(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ValueError(f"dimension mismatch: domain is {n}-d, got shape {x.shape}")
    return x.reshape(-1, n)


def contains(dom: Domain, x) -> Union[bool, np.ndarray]:
    """Interior membership for one point (n,) or a stack of points (m, n)."""
    x = np.asarray(x, dtype=float)
    res = dom.inside(_rows(x, dom.dim))
    return bool(res[0]) if x.ndim == 1 else res


def _push_out(dom: Domain, x0, v, delta, w=None):
    """Nudge exit durations upward until the computed exit point is not interior.

    Closed-form roots and bisection brackets can land a rounding error short
    of the boundary; the exit state must never be classified as inside.
    """
    rows = np.flatnonzero(np.isfinite(delta))
    step = np.zeros(delta.shape)
    for _ in range(_MAX_NUDGE):
        if not rows.size:
            break
        pts = motion_point(x0[rows], v[rows], delta[rows], None if w is None else w[rows])
        rows = rows[dom.inside(pts)]
        # doubling increments: near-tangent crossings need more than a few ulps
        step[rows] = np.where(step[rows] == 0.0, np.spacing(delta[rows]), 2.0 * step[rows])
        delta[rows] = delta[rows] + step[rows]
    return delta


def motion_point(x0, b, delta, w=None):
    """Position after duration ``delta`` along the inter-jump motion (rows)."""
    p = x0 + delta[:, None] * b
    if w is not None:
        p = p + np.sqrt(delta)[:, None] * w
    return p


def exit_linear_batch(dom: Domain, x0, v, dt_max, scan_k: int = DEFAULT_SCAN_K):
    """First d in (0, dt_max] with x0 + d v outside the domain, else inf."""
    n = dom.dim
    x0 = _rows(x0, n)
    v = _rows(v, n)
    m = x0.shape[0]
    dt_max = np.broadcast_to(np.asarray(dt_max, dtype=float), (m,)).copy()
    out = np.full(m, np.inf)
    if isinstance(dom, Ball):
        rel = x0 - dom.center
        a = rowdot(v, v)
        bq = rowdot(rel, v)
        c = rowdot(rel, rel) - dom.radius**2
        moving = a > 0.0
        if not moving.any():
            return out
        a, bq, c = a[moving], bq[moving], c[moving]
        sq = np.sqrt(np.maximum(bq * bq - a * c, 0.0))
        # positive root of a d^2 + 2 bq d + c = 0 without cancellation
        with np.errstate(divide="ignore", invalid="ignore"):
            root = np.where(bq > 0.0, -c / (bq + sq), (sq - bq) / a)
        root = np.where(root > 0.0, root, np.nextafter(0.0, 1.0))
        idx = np.flatnonzero(moving)
        out[idx] = root
        out = _push_out(dom, x0, v, out)
        out[out > dt_max] = np.inf
        return out
    return _scan_bisect(dom, x0, v, None, dt_max, scan_k)


def exit_sqrt_batch(dom: Domain, x0, b, w, dt_max, scan_k: int = DEFAULT_SCAN_K):
    """First d in (0, dt_max] with x0 + d b + sqrt(d) w outside, else inf.

    Works in u = sqrt(d): the first sign change of the inside-distance is
    located on ``scan_k`` equal subintervals of [0, sqrt(dt_max)] and then
    bisected to ``BISECT_TOL`` in u. Rows with w == 0 reduce exactly to the
    linear case.
    """
    n = dom.dim
    x0 = _rows(x0, n)
    b = _rows(b, n)
    w = _rows(w, n)
    m = x0.shape[0]
    dt_max = np.broadcast_to(np.asarray(dt_max, dtype=float), (m,)).copy()
    out = np.full(m, np.inf)
    flat = ~np.any(w != 0.0, axis=1)
    if flat.any():
        out[flat] = exit_linear_batch(dom, x0[flat], b[flat], dt_max[flat], scan_k)
    curved = np.flatnonzero(~flat)
    if curved.size:
        out[curved] = _scan_bisect(
            dom, x0[curved], b[curved], w[curved], dt_max[curved], scan_k
        )
    return out


def _outside_on_grid(dom, x0, b, w, grid):
    """Boolean (m, k) table: is the motion outside at each grid parameter?

    ``grid`` is in d for linear motion (w is None) and in u = sqrt(d) otherwise.
    """
    if isinstance(dom, Ball):
        rel = x0 - dom.center
        r2 = dom.radius**2
        if w is None:
            a = rowdot(b, b)[:, None]
            bq = rowdot(rel, b)[:, None]
            c = rowdot(rel, rel)[:, None] - r2
            return (a * grid + 2.0 * bq) * grid + c >= 0.0
        p0 = rowdot(rel, rel) - r2
        p1 = 2.0 * rowdot(rel, w)
        p2 = rowdot(w, w) + 2.0 * rowdot(rel, b)
        p3 = 2.0 * rowdot(w, b)
        p4 = rowdot(b, b)
        u = grid
        val = (((p4[:, None] * u + p3[:, None]) * u + p2[:, None]) * u + p1[:, None]) * u
        return val + p0[:, None] >= 0.0
    m, k = grid.shape
    if w is None:
        pts = x0[:, None, :] + grid[:, :, None] * b[:, None, :]
    else:
        pts = (
            x0[:, None, :]
            + (grid * grid)[:, :, None] * b[:, None, :]
            + grid[:, :, None] * w[:, None, :]
        )
    return ~dom.inside(pts.reshape(m * k, -1)).reshape(m, k)


def _scan_bisect(dom, x0, b, w, dt_max, scan_k):
    m = x0.shape[0]
    out = np.full(m, np.inf)
    if m == 0:
        return out
    top = dt_max if w is None else np.sqrt(dt_max)
    frac = np.arange(1, scan_k + 1) / scan_k
    grid = top[:, None] * frac[None, :]
    outside = _outside_on_grid(dom, x0, b, w, grid)
    hit = outside.any(axis=1)
    rows = np.flatnonzero(hit)
    if not rows.size:
        return out
    j = outside[rows].argmax(axis=1)
    hi = grid[rows, j]
    lo = np.where(j > 0, grid[rows, np.maximum(j - 1, 0)], 0.0)
    xr, br = x0[rows], b[rows]
    wr = None if w is None else w[rows]

    def pts(par):
        if wr is None:
            return xr + par[:, None] * br
        return xr + (par * par)[:, None] * br + par[:, None] * wr

    # the scan table may disagree with a direct evaluation by rounding
    hi_in = dom.inside(pts(hi))
    while hi_in.any():
        hi = np.where(hi_in, np.nextafter(hi, np.inf), hi)
        hi_in = dom.inside(pts(hi))
    while True:
        mid = 0.5 * (lo + hi)
        active = (hi - lo > BISECT_TOL) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        mid_out = ~dom.inside(pts(mid))
        hi = np.where(active & mid_out, mid, hi)
        lo = np.where(active & ~mid_out, mid, lo)
    delta = hi if w is None else hi * hi
    delta = _push_out(dom, xr, br, delta, wr)
    delta[delta > dt_max[rows]] = np.inf
    out[rows] = delta
    return out


def _scalar(result) -> Optional[float]:
    val = float(result[0])
    return None if np.isinf(val) else val


def first_exit_linear(dom: Domain, x0, v, dt_max: float) -> Optional[float]:
    if not dt_max > 0:
        raise ValueError("dt_max must be positive")
    return _scalar(exit_linear_batch(dom, x0, v, dt_max))


def first_exit_sqrt(
    dom: Domain, x0, b, w, dt_max: float, scan_k: int = DEFAULT_SCAN_K
) -> Optional[float]:
    if not dt_max > 0:
        raise ValueError("dt_max must be positive")
    return _scalar(exit_sqrt_batch(dom, x0, b, w, dt_max, scan_k))
