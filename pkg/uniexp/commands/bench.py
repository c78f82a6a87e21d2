import logging

import click

from uniexp.db import connection
from uniexp.models.schemas import BenchRow
from uniexp.services.bench import (
    MODELS,
    T_MAX,
    bench_case,
    history,
    log_times,
    record_rows,
    run_multi,
    run_variants,
    seirs_curves,
)
from uniexp.settings import settings
from uniexp.utils.io import csv_text, write_csv

logger = logging.getLogger(__name__)

BENCH_HEADER = list(BenchRow.model_fields)


def _emit(header, rows, out):
    if out:
        write_csv(out, header, rows)
    else:
        click.echo(csv_text(header, rows), nl=False)


def _as_rows(bench_rows):
    return [[getattr(row, name) if getattr(row, name) is not None else "" for name in BENCH_HEADER] for row in bench_rows]


@click.command()
@click.option("--suite", default="variants", show_default=True, type=click.Choice(["variants", "multi", "all"]))
@click.option("--model", "models", multiple=True, type=click.Choice(MODELS), help="Repeatable; defaults to every model.")
@click.option("--small", is_flag=True, help="Shrink every population for a quick run.")
@click.option("--n-times", default=10, show_default=True, type=int)
@click.option("--t-max", default=T_MAX, show_default=True, type=float)
@click.option("--repeats", default=None, type=int)
@click.option("--eps", default=None, type=float)
@click.option("--threads", default=None, type=int, help="Overrides UNIEXP_THREADS.")
@click.option("--out", default=None, type=click.Path())
@click.option("--record", is_flag=True, help="Append the rows to the bench ledger.")
@click.option("--history", "show_history", is_flag=True, help="Print the ledger instead of running.")
@click.option("--seirs-curves", "curve_times", default=None, type=int, help="Emit SEIRS summaries and the ODE load on N times.")
def bench(suite, models, small, n_times, t_max, repeats, eps, threads, out, record, show_history, curve_times):
    """
    Repeat-timed series runs over the model grid, as CSV.

    `variants` times SPS, SPSr, SPS2 and SPS2r at log-spaced times up to
    T_MAX; `multi` times one shared-pass evaluation against chained SPS2r
    over an even grid on (0, T_MAX].
    """
    if show_history:
        connection.init_db()
        db = connection.SessionLocal()
        try:
            rows = [row for model in (models or [None]) for row in history(db, model)]
        finally:
            db.close()
        _emit(BENCH_HEADER, _as_rows(rows), out)
        return

    eps = settings.DEFAULT_EPS if eps is None else eps
    if curve_times is not None:
        rows = seirs_curves(curve_times, small=small, eps=eps)
        _emit(["t", "extinction_prob", "conditional_load", "ode_E_plus_I"], rows, out)
        return

    repeats = repeats or settings.REPEATS
    results = []
    for name in models or MODELS:
        case = bench_case(name, small)
        logger.info("bench %s d=%d nnz=%d", name, case.Q.d, case.Q.nnz)
        if suite in ("variants", "all"):
            results += run_variants(case, log_times(n_times, t_max), eps, repeats, threads)
        if suite in ("multi", "all"):
            times = [t_max * (k + 1) / n_times for k in range(n_times)]
            results += run_multi(case, times, eps, repeats)

    _emit(BENCH_HEADER, _as_rows(results), out)
    if record:
        connection.init_db()
        db = connection.SessionLocal()
        try:
            count = record_rows(db, results)
        finally:
            db.close()
        logger.info("recorded %d bench rows in %s", count, settings.DATABASE_URL)
