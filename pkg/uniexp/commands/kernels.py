import logging
import time
from pathlib import Path

import click

from uniexp.exceptions import ArtifactIOError, InputError
from uniexp.models.schemas import SpsOptions
from uniexp.services.musps import musps_expmv
from uniexp.services.sps import sps_expmv, time_grid
from uniexp.services.truncation import bound_set, m_eps, two_tailed_window
from uniexp.settings import settings
from uniexp.utils.io import csv_text, format_float, load_matrix, load_vector, store_vector, write_csv
from uniexp.utils.reports import append_report, build_report

logger = logging.getLogger(__name__)


@click.command()
@click.option("--matrix", "matrix_path", required=True, type=click.Path(), help="Generator, Matrix Market.")
@click.option("--nu", "nu_path", required=True, type=click.Path(), help="Initial vector, one value per line.")
@click.option("--t", "t", required=True, type=float, help="Time.")
@click.option("--eps", default=None, type=float, help="Missing-mass tolerance.")
@click.option("--renorm", is_flag=True, help="Rescale the output to the input mass.")
@click.option("--two-tailed", is_flag=True, help="Skip negligible low-order terms.")
@click.option("--out", required=True, type=click.Path(), help="Output vector path.")
@click.option("--report", "report_path", default=None, type=click.Path(), help="JSON-lines run report; defaults to OUT.report.jsonl.")
def expmv(matrix_path, nu_path, t, eps, renorm, two_tailed, out, report_path):
    """Propagate NU over time T under the generator in MATRIX."""
    opts = SpsOptions(
        renormalize=renorm,
        two_tailed=two_tailed,
        eps=settings.DEFAULT_EPS if eps is None else eps,
    )
    Q = load_matrix(matrix_path)
    nu = load_vector(nu_path)

    start = time.perf_counter()
    result = sps_expmv(nu, Q, t, opts)
    wall_ms = (time.perf_counter() - start) * 1e3
    store_vector(result.dist, out)

    report = build_report(
        result,
        opts.eps,
        wall_ms,
        {"matrix": matrix_path, "nu": nu_path},
        [out],
    )
    append_report(report, report_path or f"{out}.report.jsonl")
    logger.info(
        "%s rho_t=%g window=[%d, %d] n_sparse=%d wall_ms=%.3f",
        result.variant, result.rho_t, result.m_lo_used, result.m_used, result.n_sparse, wall_ms,
    )


@click.command()
@click.option("--matrix", "matrix_path", required=True, type=click.Path())
@click.option("--nu", "nu_path", required=True, type=click.Path())
@click.option("--times", "times_path", required=True, type=click.Path(), help="Ascending times, one per line.")
@click.option("--eps", default=None, type=float)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def musps(matrix_path, nu_path, times_path, eps, out_dir):
    """Propagate NU to every time in TIMES with one shared series pass.

    Writes one vector per time plus index.csv (time, file, m_lo, m_hi, sum)
    and report.jsonl into OUT_DIR.
    """
    eps = settings.DEFAULT_EPS if eps is None else eps
    Q = load_matrix(matrix_path)
    nu = load_vector(nu_path)
    grid = time_grid(load_vector(times_path))

    start = time.perf_counter()
    results = musps_expmv(nu, Q, grid, eps)
    wall_ms = (time.perf_counter() - start) * 1e3

    directory = Path(out_dir)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ArtifactIOError(f"cannot create {directory}: {e.strerror}", {"path": str(directory)}) from e
    width = len(str(len(results)))
    rows = []
    outputs = []
    for k, (t, result) in enumerate(zip(grid.times, results), start=1):
        name = f"t{k:0{width}d}.vec"
        store_vector(result.dist, directory / name)
        outputs.append(str(directory / name))
        rows.append((t, name, result.m_lo_used, result.m_used, float(result.dist.sum())))
    write_csv(directory / "index.csv", ["time", "file", "m_lo", "m_hi", "sum"], rows)

    report = build_report(
        results[-1],
        eps,
        wall_ms,
        {"matrix": matrix_path, "nu": nu_path, "times": times_path},
        outputs + [str(directory / "index.csv")],
    )
    append_report(report, directory / "report.jsonl")


@click.command()
@click.option("--rho", required=True, type=float, help="Poisson mean (rho * t).")
@click.option("--eps", required=True, type=float)
@click.option("--two-tailed", is_flag=True, help="Also report the lower index.")
def quantile(rho, eps, two_tailed):
    """Print the truncation index for RHO and EPS with the closed-form bounds, as CSV."""
    if rho < 0:
        raise InputError(f"rho must be nonnegative, got {rho}")
    if two_tailed:
        window = two_tailed_window(rho, eps)
        header = ["m_lo", "m_hi"]
        values = [window.m_lo, window.m_hi]
    else:
        header = ["m"]
        values = [m_eps(rho, eps)]

    header += ["m_plus", "m_minus", "m_plus_plus", "minus_applicable", "plus_plus_applicable"]
    if rho > 0:
        bounds = bound_set(rho, eps / 2 if two_tailed else eps)
        values += [
            format_float(bounds.m_plus),
            "" if bounds.m_minus is None else format_float(bounds.m_minus),
            "" if bounds.m_plus_plus is None else format_float(bounds.m_plus_plus),
            int(bounds.minus_applicable),
            int(bounds.plus_plus_applicable),
        ]
    else:
        values += ["", "", "", 0, 0]
    click.echo(csv_text(header, [values]), nl=False)
