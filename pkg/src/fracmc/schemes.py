"""Jump-adapted Euler path simulators.

Both schemes step from one jump time of the truncated stable process to
the next. Between jumps the state moves deterministically:

* ``scheme1``: x + b(tau_i, x_i) (t - tau_i), small jumps removed;
* ``scheme2``: x + b(tau_i, x_i) (t - tau_i) + sigma_bar sqrt(t - tau_i) xi,
  with xi a Rademacher vector redrawn at every step, which stands in for
  the removed small jumps.

The exit time along that motion is computed exactly (up to bisection
tolerance), so a trajectory can leave the domain either by drift or by a
jump. Y and Z follow explicit Euler with coefficients frozen at
(tau_i, x_i), also on the last, truncated step.

Randomness is addressed by (path stream, step, channel), see
:mod:`fracmc.rng`. The per-path functions here and the vectorised
:func:`simulate_batch` consume identical draws, so they produce the same
trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import geometry
from .levy import (
    StableNoiseParams,
    jump_times_from_uniform,
    jumps_batch,
    make_params,
    rademacher_batch,
    sample_jump,
    sample_jump_time,
    sample_rademacher,
)
from .problems import TERMINAL, ProblemSpec, SteadyProblemSpec
from .rng import (
    CH_JUMP,
    CH_RADEMACHER,
    CH_TIME,
    N_CHANNELS,
    RngStream,
    derive_key,
    raw_block,
    uniform_from_raw,
)

__all__ = [
    "SCHEMES",
    "DRIFT_EXIT",
    "JUMP_EXIT",
    "HORIZON",
    "REASONS",
    "SchemeConfig",
    "PathState",
    "PathOutcome",
    "PathBatch",
    "MaxStepsExceeded",
    "simulate_path_scheme1",
    "simulate_path_scheme2",
    "simulate_path_steady",
    "simulate_batch",
    "simulate_batch_steady",
    "seed_key",
]

SCHEMES = ("scheme1", "scheme2")
DRIFT_EXIT = "drift_exit"
JUMP_EXIT = "jump_exit"
HORIZON = "horizon"
REASONS = (DRIFT_EXIT, JUMP_EXIT, HORIZON)


@dataclass(frozen=True)
class SchemeConfig:
    """Discretisation settings shared by every path of a run.

    ``dt_cap`` additionally stops each step after at most that duration
    (no jump happens at a capped step). ``sigma_override`` replaces the
    small-jump scale of scheme 2; it exists to test the reduction to
    scheme 1 at zero scale.
    """

    scheme: str = "scheme1"
    eps: float = 0.1
    dt_cap: Optional[float] = None
    max_steps: int = 10**7
    scan_k: int = geometry.DEFAULT_SCAN_K
    sigma_override: Optional[float] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")
        if self.dt_cap is not None and not self.dt_cap > 0:
            raise ValueError(f"dt_cap must be positive, got {self.dt_cap!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.scan_k < 1:
            raise ValueError("scan_k must be at least 1")
        if self.sigma_override is not None and self.sigma_override < 0:
            raise ValueError("sigma_override must be non-negative")

    def small_jump_scale(self, params: StableNoiseParams) -> float:
        if self.scheme == "scheme1":
            return 0.0
        if self.sigma_override is not None:
            return float(self.sigma_override)
        return params.sigma_bar


@dataclass
class PathState:
    t: float
    x: np.ndarray
    y: float
    z: float
    steps: int


@dataclass(frozen=True)
class PathOutcome:
    stop_time: float
    stop_x: np.ndarray
    y: float
    z: float
    payoff: float
    steps: int
    stop_reason: str


@dataclass
class PathBatch:
    """Outcomes of many paths, one array entry per path."""

    indices: np.ndarray
    stop_time: np.ndarray
    stop_x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    payoff: np.ndarray
    steps: np.ndarray
    reason: np.ndarray  # index into REASONS

    def outcome(self, k: int) -> PathOutcome:
        return PathOutcome(
            float(self.stop_time[k]), self.stop_x[k].copy(), float(self.y[k]),
            float(self.z[k]), float(self.payoff[k]), int(self.steps[k]),
            REASONS[int(self.reason[k])],
        )


class MaxStepsExceeded(RuntimeError):
    """A path used its whole step budget without stopping.

    Usually means lambda_eps * (T - t0) is far larger than ``max_steps``.
    """

    def __init__(self, state: PathState, path_index: Optional[int] = None):
        self.state = state
        self.path_index = path_index
        where = "" if path_index is None else f" on path {path_index}"
        super().__init__(
            f"max_steps={state.steps} exceeded{where} at t={state.t:.6g}; "
            "increase max_steps or eps"
        )


def seed_key(seed: int) -> np.uint64:
    """Root key of an experiment; path j uses derive_key(seed_key(seed), j)."""
    return np.uint64(derive_key(0, seed))


# ---------------------------------------------------------------------------
# per-path reference simulators


class _Terminal:
    """Adapter giving parabolic problems the common stepping interface."""

    def __init__(self, p: ProblemSpec):
        if p.orientation != TERMINAL:
            raise ValueError(
                "simulators need terminal orientation; apply reverse_time first"
            )
        self.p = p
        self.T = float(p.T)
        self.domain = p.domain
        self.n = p.n

    def coefs(self, t, x):
        p = self.p
        return p.b(t, x), p.c(t, x), p.f(t, x)

    def exit_value(self, t, x):
        return self.p.chi(t, x)

    def horizon_value(self, x):
        return self.p.g(x)


class _Steady:
    def __init__(self, p: SteadyProblemSpec):
        self.p = p
        self.T = math.inf
        self.domain = p.domain
        self.n = p.n

    def coefs(self, t, x):
        p = self.p
        return p.b(x), p.c(x), p.f(x)

    def exit_value(self, t, x):
        return self.p.g(x)

    def horizon_value(self, x):  # pragma: no cover - no horizon
        raise AssertionError("steady problems have no horizon")


def _simulate_path(model, cfg: SchemeConfig, t0: float, x0, rng: RngStream) -> PathOutcome:
    n = model.n
    x = np.array(x0, dtype=float).reshape(n)
    if not geometry.contains(model.domain, x):
        raise ValueError("starting point must lie inside the domain")
    if not t0 < model.T:
        raise ValueError(f"t0 must be below the horizon T={model.T}")
    params = make_params(n, model.p.s, cfg.eps)
    sigma = cfg.small_jump_scale(params)
    cap = math.inf if cfg.dt_cap is None else float(cfg.dt_cap)

    t, y, z, steps = float(t0), 1.0, 0.0, 0
    while True:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(PathState(t, x.copy(), y, z, steps))
        tau = sample_jump_time(rng.step(steps, CH_TIME), params)
        tt = np.array([t])
        b, c, f = (np.asarray(a, dtype=float) for a in model.coefs(tt, x[None, :]))
        b = np.broadcast_to(b, (1, n))
        c, f = float(c[0]), float(f[0])
        remaining = model.T - t
        dt = min(tau, remaining, cap)
        if cfg.scheme == "scheme2":
            w = sigma * sample_rademacher(rng.step(steps, CH_RADEMACHER), n)[None, :]
            d_exit = geometry.exit_sqrt_batch(model.domain, x, b, w, dt, cfg.scan_k)[0]
        else:
            w = None
            d_exit = geometry.exit_linear_batch(model.domain, x, b, dt)[0]
        d_exit = None if math.isinf(d_exit) else float(d_exit)
        steps += 1

        d = dt if d_exit is None else d_exit
        z = z + f * y * d
        y = y + c * y * d
        x = geometry.motion_point(x[None, :], b, np.array([d]), w)[0]

        if d_exit is not None:
            t = t + d
            payoff = float(model.exit_value(np.array([t]), x[None, :])[0]) * y + z
            return PathOutcome(t, x, y, z, payoff, steps, DRIFT_EXIT)
        if remaining <= tau and remaining <= cap:
            t = model.T
            payoff = float(model.horizon_value(x[None, :])[0]) * y + z
            return PathOutcome(t, x, y, z, payoff, steps, HORIZON)
        t = t + d
        if cap < tau:
            continue
        x = x + sample_jump(rng.step(steps - 1, CH_JUMP), params)
        if not geometry.contains(model.domain, x):
            payoff = float(model.exit_value(np.array([t]), x[None, :])[0]) * y + z
            return PathOutcome(t, x, y, z, payoff, steps, JUMP_EXIT)


def simulate_path_scheme1(p: ProblemSpec, cfg: SchemeConfig, t0: float, x0, rng: RngStream) -> PathOutcome:
    """One trajectory of the small-jump-removing scheme."""
    if cfg.scheme != "scheme1":
        cfg = SchemeConfig(**{**cfg.__dict__, "scheme": "scheme1"})
    return _simulate_path(_Terminal(p), cfg, t0, x0, rng)


def simulate_path_scheme2(p: ProblemSpec, cfg: SchemeConfig, t0: float, x0, rng: RngStream) -> PathOutcome:
    """One trajectory of the scheme with the Rademacher small-jump term."""
    if cfg.scheme != "scheme2":
        cfg = SchemeConfig(**{**cfg.__dict__, "scheme": "scheme2"})
    return _simulate_path(_Terminal(p), cfg, t0, x0, rng)


def simulate_path_steady(p: SteadyProblemSpec, cfg: SchemeConfig, x0, rng: RngStream) -> PathOutcome:
    """One trajectory for the steady problem: no horizon, stop at exit only."""
    return _simulate_path(_Steady(p), cfg, 0.0, x0, rng)


# ---------------------------------------------------------------------------
# vectorised engine


def _run_batch(model, cfg: SchemeConfig, t0: float, x0, seed: int, indices) -> PathBatch:
    n = model.n
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    m = indices.size
    x0 = np.asarray(x0, dtype=float).reshape(n)
    if not geometry.contains(model.domain, x0):
        raise ValueError("starting point must lie inside the domain")
    if not t0 < model.T:
        raise ValueError(f"t0 must be below the horizon T={model.T}")
    params = make_params(n, model.p.s, cfg.eps)
    sigma = cfg.small_jump_scale(params)
    cap = math.inf if cfg.dt_cap is None else float(cfg.dt_cap)
    scheme2 = cfg.scheme == "scheme2"

    path_keys = derive_key(seed_key(seed), indices.astype(np.uint64))
    t = np.full(m, float(t0))
    x = np.tile(x0, (m, 1))
    y = np.ones(m)
    z = np.zeros(m)
    res = PathBatch(
        indices=indices, stop_time=np.empty(m), stop_x=np.empty((m, n)),
        y=np.empty(m), z=np.empty(m), payoff=np.empty(m),
        steps=np.zeros(m, dtype=np.int64), reason=np.empty(m, dtype=np.int8),
    )

    def finish(rows, tt, xx, yy, zz, values, reason, step):
        res.stop_time[rows] = tt
        res.stop_x[rows] = xx
        res.y[rows] = yy
        res.z[rows] = zz
        res.payoff[rows] = values * yy + zz
        res.steps[rows] = step
        res.reason[rows] = REASONS.index(reason)

    act = np.arange(m)
    step = 0
    while act.size:
        if step >= cfg.max_steps:
            k = act[0]
            state = PathState(float(t[k]), x[k].copy(), float(y[k]), float(z[k]), step)
            raise MaxStepsExceeded(state, path_index=int(indices[k]))
        keys = path_keys[act]
        label = step * N_CHANNELS
        u = uniform_from_raw(raw_block(derive_key(keys, label + CH_TIME), 1)[:, 0])
        tau = jump_times_from_uniform(u, params.lambda_eps)
        ta, xa, ya, za = t[act], x[act], y[act], z[act]
        b, c, f = (np.asarray(a, dtype=float) for a in model.coefs(ta, xa))
        b = np.broadcast_to(b, xa.shape)
        remaining = model.T - ta
        dt = np.minimum(np.minimum(tau, remaining), cap)
        if scheme2:
            w = sigma * rademacher_batch(derive_key(keys, label + CH_RADEMACHER), n)
            d_exit = geometry.exit_sqrt_batch(model.domain, xa, b, w, dt, cfg.scan_k)
        else:
            w = None
            d_exit = geometry.exit_linear_batch(model.domain, xa, b, dt)
        step += 1

        exited = np.isfinite(d_exit)
        d = np.where(exited, d_exit, dt)
        za = za + f * ya * d
        ya = ya + c * ya * d
        xa = geometry.motion_point(xa, b, d, w)
        ta = ta + d

        if exited.any():
            r = np.flatnonzero(exited)
            finish(act[r], ta[r], xa[r], ya[r], za[r],
                   model.exit_value(ta[r], xa[r]), DRIFT_EXIT, step)
        hor = ~exited & (remaining <= tau) & (remaining <= cap)
        if hor.any():
            r = np.flatnonzero(hor)
            ta[r] = model.T
            finish(act[r], ta[r], xa[r], ya[r], za[r],
                   model.horizon_value(xa[r]), HORIZON, step)
        going = ~exited & ~hor
        jumping = np.flatnonzero(going & ~(cap < tau))
        if jumping.size:
            xa[jumping] += jumps_batch(derive_key(keys[jumping], label + CH_JUMP), params)
            out = ~model.domain.inside(xa[jumping])
            if out.any():
                r = jumping[out]
                finish(act[r], ta[r], xa[r], ya[r], za[r],
                       model.exit_value(ta[r], xa[r]), JUMP_EXIT, step)
                going[r] = False
        live = np.flatnonzero(going)
        idx = act[live]
        t[idx], x[idx], y[idx], z[idx] = ta[live], xa[live], ya[live], za[live]
        act = idx
    return res


def simulate_batch(p: ProblemSpec, cfg: SchemeConfig, t0: float, x0, seed: int, indices) -> PathBatch:
    """Simulate paths ``indices`` of the experiment ``seed`` side by side.

    Path j matches ``simulate_path_schemeK(p, cfg, t0, x0, derive_stream(seed, j))``.
    """
    return _run_batch(_Terminal(p), cfg, t0, x0, seed, indices)


def simulate_batch_steady(p: SteadyProblemSpec, cfg: SchemeConfig, x0, seed: int, indices) -> PathBatch:
    return _run_batch(_Steady(p), cfg, 0.0, x0, seed, indices)
