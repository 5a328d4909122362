"""Monte Carlo solver for Dirichlet problems of parabolic equations with the
fractional Laplacian, based on jump-adapted Euler schemes."""

from .geometry import Ball, GeneralDomain, contains
from .levy import StableNoiseParams, make_params
from .montecarlo import EstimatorReport, estimate, estimate_steady, summarize
from .problems import (
    EXAMPLE_IDS,
    ExampleCase,
    ProblemSpec,
    SteadyProblemSpec,
    build_example,
    reverse_time,
)
from .rng import RngStream, derive_stream
from .schemes import MaxStepsExceeded, SchemeConfig, simulate_batch, simulate_batch_steady
from .studies import StudyRow, StudyTable, emit, fit_order, read_table, run_study, theory_order

__version__ = "0.1.0"
