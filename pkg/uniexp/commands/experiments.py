import json
import logging

import click

from uniexp.models.schemas import SpsOptions
from uniexp.networks.eyam import eyam_factors
from uniexp.networks.graphs import JOIN_MODES, bridge_curves
from uniexp.services.bench import VARIANTS, timed
from uniexp.settings import settings
from uniexp.utils.io import csv_text, write_csv

logger = logging.getLogger(__name__)

REFERENCE_EPS = 1e-16


@click.command()
@click.option("--eps", default=None, type=float)
@click.option("--variant", default="SPS", show_default=True, help="SPS, SPSr, SPS2 or SPS2r.")
@click.option("--jump", is_flag=True, help="Only the first-to-last transition.")
@click.option("--prune", is_flag=True, help="Leave out birth states with negative I.")
@click.option("--table", is_flag=True, help="Compare all four variants against SPS2r at 1e-16.")
@click.option("--repeats", default=1, show_default=True, type=int)
def eyam(eps, variant, jump, prune, table, repeats):
    """
    Log-likelihood of the Eyam plague observations under the SIR model.

    Prints one row per transition (t0, t1, d, rho, m_lo, m_hi, n_sparse,
    loglik) and a final total row; with --table, one row per variant with
    its wall time and distance from the reference log-likelihood.
    """
    eps = settings.DEFAULT_EPS if eps is None else eps
    if not table:
        factors = eyam_factors(options=SpsOptions.from_variant(variant, eps), jump_only=jump, prune=prune)
        rows = [(f.t0, f.t1, f.d, f.rho, f.m_lo, f.m_hi, f.n_sparse, f.loglik) for f in factors]
        rows.append(("total", "", "", "", "", "", sum(f.n_sparse for f in factors), sum(f.loglik for f in factors)))
        header = ["t0", "t1", "d", "rho", "m_lo", "m_hi", "n_sparse", "loglik"]
        click.echo(csv_text(header, rows), nl=False)
        return

    reference = sum(
        f.loglik
        for f in eyam_factors(options=SpsOptions.from_variant("SPS2r", REFERENCE_EPS), jump_only=jump, prune=prune)
    )
    rows = []
    for label in VARIANTS:
        opts = SpsOptions.from_variant(label, eps)
        factors, wall, lo, hi = timed(lambda: eyam_factors(options=opts, jump_only=jump, prune=prune), repeats)
        loglik = sum(f.loglik for f in factors)
        rows.append((label, eps, loglik, abs(loglik - reference), wall, lo, hi))
    header = ["variant", "eps", "loglik", "abs_error", "wall_ms", "wall_min_ms", "wall_max_ms"]
    click.echo(csv_text(header, rows), nl=False)


@click.command()
@click.option("--n", "n", default=1000, show_default=True, type=int, help="Nodes per graph.")
@click.option("--m", "m", default=6, show_default=True, type=int, help="Edges per new node and bridge weight.")
@click.option("--seed-a", default=1, show_default=True, type=int)
@click.option("--seed-b", default=2, show_default=True, type=int)
@click.option("--n-times", default=100, show_default=True, type=int)
@click.option("--t-max", default=10.0, show_default=True, type=float)
@click.option("--eps", default=None, type=float)
@click.option("--out", required=True, type=click.Path(), help="Per-time discrepancy CSV.")
def diffusion(n, m, seed_a, seed_b, n_times, t_max, eps, out):
    """
    Diffusion discrepancies between the four ways of joining two
    preferential-attachment graphs, relative to the hub-to-hub join.

    Writes the curves to OUT and prints the hub, the curve maxima and the
    largest hl/lh gap as JSON.
    """
    times = [t_max * (k + 1) / n_times for k in range(n_times)]
    curves = bridge_curves(n, m, seed_a, seed_b, times, eps)
    modes = JOIN_MODES[1:]
    rows = [(t, *(curves.curves[mode][k] for mode in modes)) for k, t in enumerate(curves.times)]
    write_csv(out, ["time", *modes], rows)
    summary = {
        "hub": curves.hub + 1,
        "maxima": {mode: curves.maxima()[mode] for mode in modes},
        "gap_hl_lh": curves.gap("hl", "lh"),
        "final": {mode: curves.curves[mode][-1] for mode in modes},
    }
    click.echo(json.dumps(summary))
