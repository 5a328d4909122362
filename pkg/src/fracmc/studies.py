"""Convergence studies in eps: error tables, fitted order, CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .montecarlo import estimate
from .problems import ExampleCase
from .rng import derive_key
from .schemes import SchemeConfig

__all__ = [
    "StudyRow",
    "StudyTable",
    "COLUMNS",
    "fit_order",
    "theory_order",
    "run_study",
    "emit",
    "read_table",
    "study_seed",
]

COLUMNS = ("eps", "abs_error", "stderr", "avg_steps", "elapsed_seconds")


@dataclass(frozen=True)
class StudyRow:
    eps: float
    abs_error: float
    stderr: float
    avg_steps: float
    elapsed_seconds: float


@dataclass
class StudyTable:
    meta: dict
    rows: list = field(default_factory=list)
    fitted_order: Optional[float] = None
    theory_order: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "rows": [asdict(r) for r in self.rows],
            "fitted_order": self.fitted_order,
            "theory_order": self.theory_order,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "StudyTable":
        rows = [StudyRow(**{k: float(r[k]) for k in COLUMNS}) for r in d.get("rows", [])]
        return cls(dict(d.get("meta", {})), rows, d.get("fitted_order"), d.get("theory_order"))


def fit_order(rows) -> float:
    """Least-squares slope of log(error) against log(eps).

    ``rows`` holds (eps, error) pairs or :class:`StudyRow` objects.
    """
    pairs = [(r.eps, r.abs_error) if isinstance(r, StudyRow) else (r[0], r[1]) for r in rows]
    if len(pairs) < 2:
        raise ValueError("need at least two rows to fit an order")
    if any(e <= 0 for _, e in pairs) or any(h <= 0 for h, _ in pairs):
        raise ValueError("eps and errors must be positive for a log-log fit")
    lx = np.log([h for h, _ in pairs])
    ly = np.log([e for _, e in pairs])
    dx = lx - lx.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise ValueError("all eps values are equal; slope is undefined")
    return float(np.dot(dx, ly - ly.mean()) / sxx)


def theory_order(scheme: str, s: float, beta: float) -> float:
    """Weak order predicted for a solution of Holder regularity ``beta`` in x.

    scheme1: min(2s, beta - 2s) with beta capped just below 2.
    scheme2: min(2s, floor(beta) - 2s) with beta capped at 3; for beta < 2
    the higher-order bound does not apply and the scheme-1 rate is used.
    """
    if scheme == "scheme1" or beta < 2.0:
        return min(2.0 * s, min(beta, 2.0) - 2.0 * s)
    if scheme == "scheme2":
        return min(2.0 * s, math.floor(min(beta, 3.0)) - 2.0 * s)
    raise ValueError(f"unknown scheme {scheme!r}")


def study_seed(seed: int, eps_index: int) -> int:
    """Seed of the estimate for the ``eps_index``-th eps of a study."""
    return int(derive_key(derive_key(0, seed), (1 << 62) + eps_index))


def run_study(
    example: ExampleCase,
    cfg_base: SchemeConfig,
    eps_list: Sequence[float],
    t0: float,
    x0,
    N: int,
    seed: int,
    workers: int | None = None,
    n_overrides: Optional[Mapping[float, int]] = None,
    common_random_numbers: bool = False,
) -> StudyTable:
    """Estimate u(t0, x0) for every eps and tabulate the error against the exact solution.

    Each eps gets its own derived seed unless ``common_random_numbers`` is
    set. ``n_overrides`` maps an eps value to a sample size replacing ``N``.
    """
    if not eps_list:
        raise ValueError("eps_list must not be empty")
    eps_sorted = sorted((float(e) for e in eps_list), reverse=True)
    for e in eps_sorted:
        if not 0.0 < e < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {e!r}")
    overrides = {float(k): int(v) for k, v in (n_overrides or {}).items()}
    x0 = np.asarray(x0, dtype=float)
    exact = float(example.exact(np.array([t0]), x0[None, :])[0])

    rows = []
    n_used = []
    for k, eps in enumerate(eps_sorted):
        cfg = SchemeConfig(**{**cfg_base.__dict__, "eps": eps})
        n_k = overrides.get(eps, N)
        s_k = seed if common_random_numbers else study_seed(seed, k)
        rep = estimate(example.problem, cfg, t0, x0, n_k, s_k, workers=workers)
        rows.append(StudyRow(eps, abs(rep.mean - exact), rep.stderr, rep.avg_steps, rep.elapsed_seconds))
        n_used.append(n_k)

    meta = {
        "example": example.id,
        "n": example.n,
        "s": example.s,
        "scheme": cfg_base.scheme,
        "N": int(N),
        "N_per_eps": n_used,
        "seed": int(seed),
        "t0": float(t0),
        "x0": [float(v) for v in x0],
        "exact": exact,
        "dt_cap": cfg_base.dt_cap,
        "common_random_numbers": bool(common_random_numbers),
    }
    fitted = None
    if len(rows) >= 2 and all(r.abs_error > 0 for r in rows):
        fitted = fit_order(rows)
    else:
        meta["fit_note"] = "unavailable: need two or more rows with nonzero error"
    return StudyTable(meta, rows, fitted, theory_order(cfg_base.scheme, example.s, example.beta))


def _fmt(v: float) -> str:
    return format(v, ".17g")


def emit(table: StudyTable, fmt: str, destination) -> None:
    """Write ``table`` as CSV (meta in ``#`` header lines) or JSON."""
    path = Path(destination)
    if fmt == "json":
        path.write_text(json.dumps(table.to_dict(), indent=2) + "\n")
        return
    if fmt != "csv":
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    buf = io.StringIO()
    for key, value in table.meta.items():
        buf.write(f"# {key}: {json.dumps(value)}\n")
    buf.write(f"# fitted_order: {json.dumps(table.fitted_order)}\n")
    buf.write(f"# theory_order: {json.dumps(table.theory_order)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in table.rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    path.write_text(buf.getvalue())


def read_table(source) -> StudyTable:
    """Parse a file written by :func:`emit` (format picked from its content)."""
    text = Path(source).read_text()
    if text.lstrip().startswith("{"):
        return StudyTable.from_dict(json.loads(text))
    meta, extra, body = {}, {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            target = extra if key in ("fitted_order", "theory_order") else meta
            target[key] = json.loads(value)
        elif line.strip():
            body.append(line)
    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames}")
    rows = [StudyRow(**{k: float(rec[k]) for k in COLUMNS}) for rec in reader]
    return StudyTable(meta, rows, extra.get("fitted_order"), extra.get("theory_order"))
