"""Deterministic, optionally threaded Monte Carlo estimation.

Path ``j`` of an experiment always uses the stream derived from
``(seed, j)``, and paths are assigned to workers in fixed contiguous
index ranges. Payoffs are gathered back in index order before any
summation, so the estimate does not depend on the worker count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .problems import INITIAL, ProblemSpec, SteadyProblemSpec, reverse_time
from .schemes import SchemeConfig, simulate_batch, simulate_batch_steady

__all__ = ["EstimatorReport", "estimate", "estimate_steady", "summarize", "default_workers"]

WORKERS_ENV = "FRACMC_WORKERS"
CHUNK = 8192


@dataclass(frozen=True)
class EstimatorReport:
    mean: float
    stderr: float
    n_samples: int
    avg_steps: float
    elapsed_seconds: float
    seed: int
    min: float = math.nan
    max: float = math.nan
    reason_counts: tuple = ()

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["reason_counts"] = list(self.reason_counts)
        return d


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
        return value
    return 1


def summarize(payoffs: Sequence[float]):
    """Mean, standard error, min and max of a non-empty sample.

    Sums are exactly rounded (math.fsum) so long runs lose no digits. The
    variance uses the N - 1 denominator; a single sample has stderr 0.
    """
    x = np.asarray(payoffs, dtype=float).reshape(-1)
    n = x.size
    if n == 0:
        raise ValueError("cannot summarize an empty sample")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return lo, 0.0, lo, hi
    mean = math.fsum(x) / n
    if n == 1:
        return mean, 0.0, lo, hi
    dev = x - mean
    var = math.fsum(dev * dev) / (n - 1)
    return mean, math.sqrt(var / n), lo, hi


def _ranges(n_samples: int, workers: int):
    bounds = np.linspace(0, n_samples, workers + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run(sim, n_samples: int, workers: int, chunk: int):
    def work(rng_range):
        a, b = rng_range
        pay, steps, reasons = [], [], []
        for lo in range(a, b, chunk):
            batch = sim(np.arange(lo, min(lo + chunk, b)))
            pay.append(batch.payoff)
            steps.append(batch.steps)
            reasons.append(batch.reason)
        return np.concatenate(pay), np.concatenate(steps), np.concatenate(reasons)

    parts = _ranges(n_samples, workers)
    if workers == 1 or len(parts) == 1:
        results = [work(r) for r in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, parts))
    return (
        np.concatenate([r[0] for r in results]),
        np.concatenate([r[1] for r in results]),
        np.concatenate([r[2] for r in results]),
    )


def _report(payoffs, steps, reasons, elapsed, seed):
    mean, stderr, lo, hi = summarize(payoffs)
    return EstimatorReport(
        mean=mean, stderr=stderr, n_samples=int(payoffs.size),
        avg_steps=math.fsum(steps.astype(float)) / steps.size,
        elapsed_seconds=elapsed, seed=int(seed), min=lo, max=hi,
        reason_counts=tuple(int(v) for v in np.bincount(reasons, minlength=3)),
    )


def _check(n_samples, workers):
    if int(n_samples) != n_samples or n_samples < 1:
        raise ValueError(f"N must be a positive integer, got {n_samples!r}")
    if int(workers) != workers or workers < 1:
        raise ValueError(f"workers must be a positive integer, got {workers!r}")


def estimate(
    p: ProblemSpec,
    cfg: SchemeConfig,
    t0: float,
    x0,
    N: int,
    seed: int,
    workers: int | None = None,
    chunk: int = CHUNK,
) -> EstimatorReport:
    """Monte Carlo estimate of u(t0, x0).

    An initial-value problem is solved through its terminal-value form at
    time T - t0. A path that exhausts ``cfg.max_steps`` aborts the run with
    :class:`MaxStepsExceeded` naming the path index.
    """
    workers = default_workers() if workers is None else workers
    _check(N, workers)
    if p.orientation == INITIAL:
        p, t0 = reverse_time(p), p.T - t0
    started = time.perf_counter()
    pay, steps, reasons = _run(
        lambda idx: simulate_batch(p, cfg, t0, x0, seed, idx), int(N), int(workers), chunk
    )
    return _report(pay, steps, reasons, time.perf_counter() - started, seed)


def estimate_steady(
    p: SteadyProblemSpec,
    cfg: SchemeConfig,
    x0,
    N: int,
    seed: int,
    workers: int | None = None,
    chunk: int = CHUNK,
) -> EstimatorReport:
    workers = default_workers() if workers is None else workers
    _check(N, workers)
    started = time.perf_counter()
    pay, steps, reasons = _run(
        lambda idx: simulate_batch_steady(p, cfg, x0, seed, idx), int(N), int(workers), chunk
    )
    return _report(pay, steps, reasons, time.perf_counter() - started, seed)
