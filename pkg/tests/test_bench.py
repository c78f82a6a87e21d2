import pytest

from uniexp.exceptions import InputError
from uniexp.models.schemas import BenchRow
from uniexp.services.bench import (
    VARIANTS,
    bench_case,
    history,
    log_times,
    map_ordered,
    record_rows,
    run_multi,
    run_variants,
    seirs_curves,
    timed,
)


def test_timed_reports_spread():
    """timed calls fn once per repeat and orders min <= median <= max."""
    calls = []
    result, median, low, high = timed(lambda: calls.append(1) or len(calls), 5)

    assert result == 5
    assert len(calls) == 5
    assert 0.0 <= low <= median <= high


def test_timed_needs_a_repeat():
    """Zero repeats is an input error."""
    with pytest.raises(InputError):
        timed(lambda: None, 0)


def test_log_times():
    """Log-spaced grids end at t_max and span four decades by default."""
    times = log_times(5, 10.0)

    assert times[0] == pytest.approx(1e-3)
    assert times[-1] == pytest.approx(10.0)
    assert times == sorted(times)
    assert log_times(1, 3.0) == [3.0]


def test_map_ordered_keeps_input_order():
    """Results come back in input order whatever the pool size."""
    items = list(range(30))
    assert map_ordered(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert map_ordered(lambda x: -x, items, threads=1) == [-x for x in items]


def test_unknown_case():
    """Only the four comparison models exist."""
    with pytest.raises(InputError, match="unknown bench model"):
        bench_case("lotka")


def test_small_cases():
    """Small cases shrink every population."""
    assert bench_case("imm_death", small=True).Q.d == 51
    assert bench_case("sir", small=True).Q.d == 66
    assert bench_case("seirs", small=True).summary_name == "P(E+I=0)"


def test_run_variants_rows():
    """One row per variant and time, errors against the exact solution."""
    case = bench_case("imm_death", small=True)
    rows = run_variants(case, [1.0, 5.0], 1e-12, repeats=1, threads=2)

    assert [r.variant for r in rows] == list(VARIANTS) * 2
    assert {r.model for r in rows} == {"imm_death"}
    assert rows[0].rho_t == pytest.approx(case.Q.rho * 1.0)
    for row in rows:
        assert row.error <= 1e-10
        assert row.summary is None
        assert row.wall_min_ms <= row.wall_ms <= row.wall_max_ms


def test_run_variants_without_exact_solution():
    """Models without a closed form are compared with a tight SPS2r run."""
    rows = run_variants(bench_case("sir", small=True), [2.0], 1e-12, repeats=1)

    assert len(rows) == 4
    for row in rows:
        assert row.error <= 1e-10
        assert 0.0 <= row.summary <= 1.0


def test_run_multi_rows():
    """The shared pass and the chained runs report comparable rows."""
    case = bench_case("imm_death", small=True)
    times = log_times(6, 20.0)
    multi, chained = run_multi(case, times, 1e-14, repeats=1)

    assert (multi.variant, chained.variant) == ("MUSPS2r", "sequential-SPS2r")
    assert multi.ratio is not None and multi.ratio > 0.0
    assert chained.ratio is None
    assert multi.error <= 1e-12
    assert chained.error <= 1e-12
    assert chained.n_sparse >= multi.n_sparse


def test_ledger_round_trip(db_session):
    """Recorded rows come back in insertion order and filter by model."""
    rows = [
        BenchRow(
            command="sps",
            variant="SPS2r",
            model=model,
            rho_t=10.0,
            n_sparse=40,
            wall_ms=1.5,
            wall_min_ms=1.0,
            wall_max_ms=2.0,
            error=1e-15,
        )
        for model in ("sir", "moran", "sir")
    ]
    assert record_rows(db_session, rows) == 3

    assert history(db_session) == rows
    sir_rows = history(db_session, "sir")
    assert len(sir_rows) == 2
    assert sir_rows[0].summary is None


def test_seirs_curves_small():
    """Extinction grows along the grid and the ODE load stays nonnegative."""
    curves = seirs_curves(4, t_max=100.0, small=True)

    assert [row[0] for row in curves] == [25.0, 50.0, 75.0, 100.0]
    extinction = [row[1] for row in curves]
    for earlier, later in zip(extinction, extinction[1:]):
        assert later >= earlier - 1e-12
    for _, p, load, ode_load in curves:
        assert 0.0 <= p <= 1.0
        assert load >= 0.0
        assert ode_load >= -1e-9
