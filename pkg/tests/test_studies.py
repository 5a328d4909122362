import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracmc.problems import build_example
from fracmc.schemes import SchemeConfig
from fracmc.studies import (
    COLUMNS,
    StudyRow,
    StudyTable,
    emit,
    fit_order,
    read_table,
    run_study,
    theory_order,
)


def test_fit_order_examples():
    assert fit_order([(0.1, 0.1), (0.01, 0.01)]) == pytest.approx(1.0, abs=1e-12)
    assert fit_order([(0.1, 0.01), (0.01, 0.0001)]) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.01, 100.0), st.integers(2, 8))
def test_fit_order_recovers_exact_slope(p, c, k):
    eps = [2.0 ** -j for j in range(1, k + 1)]
    assert fit_order([(e, c * e**p) for e in eps]) == pytest.approx(p, abs=1e-12)


def test_fit_order_errors():
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.1)])
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.1), (0.1, 0.2)])
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.0), (0.05, 0.2)])


def test_slope_of_reference_error_column():
    eps = [1 / 10, 1 / 20, 1 / 40, 1 / 80, 1 / 160]
    err = [3.525e-02, 2.914e-02, 2.151e-02, 1.560e-02, 1.131e-02]
    slope = fit_order(list(zip(eps, err)))
    assert slope == pytest.approx(0.41, abs=0.01)
    assert abs(slope - 0.5) < 0.25


def test_theory_orders():
    for s, want in ((0.25, 0.5), (0.5, 0.5), (0.75, 0.25)):
        assert theory_order("scheme1", s, 1 + s) == pytest.approx(want)
    for s, want in ((0.25, 0.5), (0.5, 1.0), (0.75, 0.5)):
        assert theory_order("scheme2", s, 2 + s) == pytest.approx(want)
    assert theory_order("scheme2", 0.75, 3.75) == pytest.approx(1.5)
    # below beta = 2 the higher-order bound does not apply
    assert theory_order("scheme2", 0.5, 1.5) == theory_order("scheme1", 0.5, 1.5)
    with pytest.raises(ValueError):
        theory_order("scheme9", 0.5, 2.5)


def small_study(**kw):
    ex = build_example("example1", 2, 0.5)
    args = dict(eps_list=[1 / 20, 1 / 5, 1 / 10], t0=0.5, x0=[0.5, 0.5], N=2000, seed=9)
    args.update(kw)
    return run_study(ex, SchemeConfig("scheme1", 0.1), **args)


def test_run_study_rows_and_determinism():
    a = small_study()
    assert [r.eps for r in a.rows] == [0.2, 0.1, 0.05]
    assert all(r.abs_error >= 0 for r in a.rows)
    assert a.fitted_order is not None
    assert a.theory_order == 0.5
    assert a.meta["example"] == "example1" and a.meta["N"] == 2000
    b = small_study(workers=4)
    assert [r.abs_error for r in a.rows] == [r.abs_error for r in b.rows]
    # each eps has its own seed unless common random numbers are requested
    crn = small_study(common_random_numbers=True)
    assert crn.meta["common_random_numbers"] is True


def test_run_study_single_eps_flags_fit():
    t = small_study(eps_list=[0.1])
    assert t.fitted_order is None
    assert "fit_note" in t.meta


def test_run_study_overrides_and_validation():
    t = small_study(n_overrides={0.05: 500})
    assert t.meta["N_per_eps"] == [2000, 2000, 500]
    with pytest.raises(ValueError):
        small_study(eps_list=[])
    with pytest.raises(ValueError):
        small_study(eps_list=[0.1, 1.5])


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_emit_round_trip(tmp_path, fmt):
    table = small_study()
    path = tmp_path / f"t.{fmt}"
    emit(table, fmt, path)
    back = read_table(path)
    assert back.rows == table.rows
    assert back.fitted_order == table.fitted_order
    assert back.theory_order == table.theory_order
    assert back.meta == json.loads(json.dumps(table.meta))


def test_emit_csv_layout(tmp_path):
    rows = [StudyRow(1 / k, 1e-3 / k, 1e-4, 2.0 * k, 0.1) for k in range(1, 6)]
    path = tmp_path / "t.csv"
    emit(StudyTable({"example": "x"}, rows, 1.0, 0.5), "csv", path)
    data = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    assert data[0] == ",".join(COLUMNS)
    assert len(data) == 6
    emit(StudyTable({"example": "x"}, [], None, 0.5), "csv", path)
    data = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    assert data == [",".join(COLUMNS)]
    assert read_table(path).rows == []
    with pytest.raises(ValueError):
        emit(StudyTable({}, []), "xml", path)
