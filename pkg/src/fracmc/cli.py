"""Command-line front end.

Subcommands:
  solve     estimate u(t0, x0) for one eps and print the report
  study     run an eps sweep, write the table, print fitted vs theory order
  selftest  quick property checks of specfun, levy and geometry

Exit status: 0 on success, 1 on invalid input, 2 on runtime failure.
Settings may come from a flat JSON file (--config); flags override it.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from . import geometry, levy, specfun
from .montecarlo import WORKERS_ENV, default_workers, estimate
from .problems import EXAMPLE_IDS, build_example
from .rng import derive_stream
from .schemes import SCHEMES, MaxStepsExceeded, SchemeConfig
from .studies import emit, run_study

SUBCOMMANDS = ("solve", "study", "selftest")


class ConfigError(ValueError):
    """Invalid user input; reported with exit status 1."""


def parse_real(text) -> float:
    """Parse ``0.25``, ``1/160`` or ``1e-3``; fractions round to the nearest double."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}")


def parse_real_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [parse_real(v) for v in text]
    return [parse_real(v) for v in str(text).split(",") if v.strip()]


def parse_count(text) -> int:
    v = parse_real(text)
    if v != int(v):
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(v)


def parse_scheme(text) -> str:
    t = str(text).strip()
    name = f"scheme{t}" if t in ("1", "2") else t
    if name not in SCHEMES:
        raise ConfigError(f"unknown scheme {text!r}; use 1 or 2")
    return name


def parse_overrides(text) -> dict:
    """``1/32:40000,1/64:300000`` -> {eps: N}."""
    if isinstance(text, dict):
        items = text.items()
    else:
        items = []
        for part in str(text).split(","):
            if not part.strip():
                continue
            if ":" not in part:
                raise ConfigError(f"override {part!r} must look like EPS:N")
            items.append(tuple(part.split(":", 1)))
    out = {}
    for k, v in items:
        n = parse_real(v)
        if n != int(n) or n < 1:
            raise ConfigError(f"sample size override must be a positive integer, got {v!r}")
        out[str(parse_real(k))] = int(n)
    return out


@dataclass
class RunConfig:
    subcommand: str = "solve"
    example: str = "example1"
    scheme: str = "scheme1"
    n: int = 2
    s: float = 0.5
    i: Optional[int] = None
    eps: list = field(default_factory=lambda: [0.025])
    N: int = 10000
    N_overrides: dict = field(default_factory=dict)
    t0: float = 0.5
    x0: object = "center-over-n"
    seed: int = 0
    workers: Optional[int] = None
    dt_cap: Optional[float] = None
    out: Optional[str] = None
    format: str = "csv"
    json: bool = False
    strict_paper_f3: bool = False
    crn: bool = False

    def example_id(self) -> str:
        if self.example == "example3":
            if self.i not in (1, 2):
                raise ConfigError("example3 needs --i 1 or --i 2")
            return f"example3i{self.i}"
        return self.example

    def start_point(self) -> np.ndarray:
        if self.x0 == "center-over-n":
            return np.full(self.n, 1.0 / self.n)
        x = np.asarray(parse_real_list(self.x0), dtype=float)
        if x.shape != (self.n,):
            raise ConfigError(f"x0 has {x.size} entries but n = {self.n}")
        return x

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.subcommand == "selftest":
            return
        ids = EXAMPLE_IDS + ("example3",)
        if self.example not in ids:
            raise ConfigError(f"unknown example {self.example!r}; choose from {', '.join(ids)}")
        self.example_id()
        self.scheme = parse_scheme(self.scheme)
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.s < 1.0:
            raise ConfigError(f"s must lie in (0, 1), got {self.s!r}")
        if not self.eps:
            raise ConfigError("give at least one eps")
        for e in self.eps:
            if not 0.0 < e < 1.0:
                raise ConfigError(f"eps must lie in (0, 1), got {e!r}")
        if self.subcommand == "solve" and len(self.eps) != 1:
            raise ConfigError("solve takes a single eps; use study for a sweep")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N!r}")
        if not 0.0 <= self.t0 < 1.0:
            raise ConfigError(f"t0 must lie in [0, T) = [0, 1), got {self.t0!r}")
        x = self.start_point()
        if not float(np.dot(x, x)) < 1.0:
            raise ConfigError("x0 must lie inside the unit ball")
        if self.workers is not None and (int(self.workers) != self.workers or self.workers < 1):
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        if self.dt_cap is not None and not self.dt_cap > 0:
            raise ConfigError(f"dt-cap must be positive, got {self.dt_cap!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.subcommand == "study" and not self.out:
            raise ConfigError("study needs --out PATH")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


_COERCE = {
    "n": parse_count, "i": parse_count, "N": parse_count, "seed": parse_count,
    "workers": parse_count,
    "s": parse_real, "t0": parse_real, "dt_cap": parse_real,
    "eps": parse_real_list, "N_overrides": parse_overrides, "scheme": parse_scheme,
}


def _coerce(key, value):
    if value is None:
        return None
    fn = _COERCE.get(key)
    if fn is None:
        return value
    try:
        return fn(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})")


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracmc",
        description="Monte Carlo solver for fractional-Laplacian Dirichlet problems.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        S = argparse.SUPPRESS
        p.add_argument("--config", help="flat JSON file with RunConfig keys")
        p.add_argument("--dump-config", action="store_true",
                       help="print the merged configuration as JSON and exit")
        p.add_argument("--example", default=S, help=f"one of {', '.join(EXAMPLE_IDS)} or example3 with --i")
        p.add_argument("--scheme", default=S, help="1 or 2")
        p.add_argument("--n", type=int, default=S, help="dimension")
        p.add_argument("--s", default=S, help="fractional order s in (0, 1)")
        p.add_argument("--i", type=int, default=S, help="index of example3 (1 or 2)")
        p.add_argument("--eps", default=S, help="truncation level(s), comma separated, fractions allowed")
        p.add_argument("--N", default=S, help="number of paths")
        p.add_argument("--N-overrides", dest="N_overrides", default=S,
                       help="per-eps sample sizes, e.g. 1/32:40000,1/64:300000")
        p.add_argument("--t0", default=S, help="evaluation time")
        p.add_argument("--x0", default=S, help="'center-over-n' or comma separated coordinates")
        p.add_argument("--seed", type=int, default=S)
        p.add_argument("--workers", type=int, default=S,
                       help=f"worker threads (default ${WORKERS_ENV} or 1)")
        p.add_argument("--dt-cap", dest="dt_cap", default=S, help="cap on each time step")
        p.add_argument("--out", default=S, help="output file")
        p.add_argument("--format", choices=("csv", "json"), default=S)
        p.add_argument("--json", action="store_true", default=S, help="also print JSON")
        p.add_argument("--strict-paper-f3", dest="strict_paper_f3", action="store_true", default=S,
                       help="example3 with source exponent 2+s for both i (inexact for i=2)")
        p.add_argument("--crn", action="store_true", default=S,
                       help="study: reuse one seed for every eps")

    common(sub.add_parser("solve", help="estimate u(t0, x0)"))
    common(sub.add_parser("study", help="convergence study over eps"))
    sub.add_parser("selftest", help="run internal property checks")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(ns, "config", None):
        values.update(load_config_file(ns.config))
    skip = {"config", "dump_config"}
    values.update({k: v for k, v in vars(ns).items() if k not in skip})
    values = {k: _coerce(k, v) for k, v in values.items()}
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _print_report(rep, exact, as_json: bool) -> None:
    print(f"mean        {rep.mean:.10g}")
    print(f"stderr      {rep.stderr:.4g}")
    print(f"exact       {exact:.10g}")
    print(f"abs_error   {abs(rep.mean - exact):.4g}")
    print(f"n_samples   {rep.n_samples}")
    print(f"avg_steps   {rep.avg_steps:.4g}")
    print(f"elapsed_s   {rep.elapsed_seconds:.3f}")
    print(f"seed        {rep.seed}")
    if as_json:
        d = rep.as_dict()
        d["exact"] = exact
        print(json.dumps(d))


def run_solve(cfg: RunConfig) -> int:
    ex = build_example(cfg.example_id(), cfg.n, cfg.s, cfg.strict_paper_f3)
    x0 = cfg.start_point()
    scheme = SchemeConfig(cfg.scheme, cfg.eps[0], cfg.dt_cap)
    rep = estimate(ex.problem, scheme, cfg.t0, x0, cfg.N, cfg.seed, cfg.workers)
    exact = float(ex.exact(np.array([cfg.t0]), x0[None, :])[0])
    _print_report(rep, exact, cfg.json)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            json.dump({**rep.as_dict(), "exact": exact}, fh, indent=2)
    return 0


def run_study_cmd(cfg: RunConfig) -> int:
    ex = build_example(cfg.example_id(), cfg.n, cfg.s, cfg.strict_paper_f3)
    base = SchemeConfig(cfg.scheme, cfg.eps[0], cfg.dt_cap)
    overrides = {float(k): v for k, v in cfg.N_overrides.items()}
    table = run_study(ex, base, cfg.eps, cfg.t0, cfg.start_point(), cfg.N, cfg.seed,
                      cfg.workers, overrides, cfg.crn)
    emit(table, cfg.format, cfg.out)
    print(f"{'eps':>12} {'abs_error':>12} {'stderr':>10} {'steps':>9} {'time':>8}")
    for r in table.rows:
        print(f"{r.eps:12.6g} {r.abs_error:12.4e} {r.stderr:10.2e} {r.avg_steps:9.4g} {r.elapsed_seconds:8.3f}")
    fitted = "unavailable" if table.fitted_order is None else f"{table.fitted_order:.3f}"
    print(f"fitted order {fitted}   theory order {table.theory_order:.3f}")
    print(f"wrote {cfg.out}")
    if cfg.json:
        print(json.dumps(table.to_dict()))
    return 0


def _selftest_checks():
    """(name, passed) pairs; each check uses an independent closed form."""
    checks = []
    for k in range(1, 15):
        checks.append((f"gamma({k}) = {k - 1}!",
                       math.isclose(specfun.gamma_fn(k), math.factorial(k - 1), rel_tol=1e-13)))
    checks.append(("gamma(1/2) = sqrt(pi)",
                   math.isclose(specfun.gamma_fn(0.5), math.sqrt(math.pi), rel_tol=1e-14)))
    ok = True
    for x in np.linspace(0.05, 0.95, 19):
        lhs = specfun.gamma_fn(x) * specfun.gamma_fn(1.0 - x)
        ok &= math.isclose(lhs, math.pi / math.sin(math.pi * x), rel_tol=1e-13)
        ok &= math.isclose(specfun.gamma_fn(x + 1.0), x * specfun.gamma_fn(x), rel_tol=1e-13)
    checks.append(("gamma reflection and recurrence", bool(ok)))
    # Chu-Vandermonde: 2F1(-m, b; c; 1) = (c-b)_m / (c)_m
    ok = True
    for m in range(6):
        b, c = 1.3, 2.7
        poch = lambda a, k: math.prod(a + j for j in range(k))
        ok &= math.isclose(specfun.hyp2f1_terminating(b, m, c, 1.0), poch(c - b, m) / poch(c, m),
                           rel_tol=1e-12)
    checks.append(("terminating 2F1 at z=1", bool(ok)))
    checks.append(("C(1, 1/2) = 1/pi", math.isclose(specfun.stable_constant(1, 0.5), 1 / math.pi, rel_tol=1e-13)))

    ok = True
    for n in (1, 2, 3, 10):
        for s in (0.25, 0.5, 0.75):
            p = levy.make_params(n, s, 0.1)
            area = 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)
            ok &= math.isclose(p.lambda_eps, p.c_ns * area * 0.1 ** (-2 * s) / (2 * s), rel_tol=1e-12)
            ok &= math.isclose(n * p.sigma_bar**2, p.c_ns * area * 0.1 ** (2 - 2 * s) / (2 - 2 * s),
                               rel_tol=1e-12)
    checks.append(("levy intensity and small-jump variance", bool(ok)))
    p = levy.make_params(2, 0.5, 0.1)
    rng = derive_stream(1, 0)
    radii = np.array([np.linalg.norm(levy.sample_jump(rng, p)) for _ in range(4000)])
    frac = float(np.mean(radii > 0.2))
    checks.append(("jump radius tail P(R > 2 eps) = 2^(-2s)", abs(frac - 0.5) < 0.04 and radii.min() >= 0.1))

    ball = geometry.Ball.unit(2)
    t = geometry.first_exit_linear(ball, np.array([0.9, 0.0]), np.array([1.0, 0.0]), 1.0)
    checks.append(("linear exit from the unit disk", t is not None and abs(t - 0.1) < 1e-12))
    t = geometry.first_exit_linear(ball, np.zeros(2), np.array([1.0, 0.0]), 0.5)
    checks.append(("no exit inside the horizon", t is None))
    t = geometry.first_exit_sqrt(ball, np.zeros(2), np.zeros(2), np.array([1.0, 0.0]), 2.0)
    checks.append(("sqrt-time exit", t is not None and abs(t - 1.0) < 1e-9))
    return checks


def run_selftest() -> int:
    checks = _selftest_checks()
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
    failed = sum(not p for _, p in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand == "selftest":
        return run_selftest()
    try:
        cfg = config_from_args(ns)
        if cfg.workers is None:
            cfg.workers = default_workers()
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if ns.dump_config:
        print(cfg.to_json())
        return 0
    try:
        return run_solve(cfg) if cfg.subcommand == "solve" else run_study_cmd(cfg)
    except MaxStepsExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
