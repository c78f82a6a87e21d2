import logging

import click
import numpy as np

from uniexp.models.schemas import SpsOptions
from uniexp.networks.epidemics import build_seirs, build_sir, build_sir_birth
from uniexp.networks.graphs import JOIN_MODES, barabasi_albert, graph_laplacian, join_graphs
from uniexp.networks.population import build_imm_death, build_moran, imm_death_exact
from uniexp.services.bench import timed
from uniexp.services.musps import musps_expmv
from uniexp.services.sps import sequential_sps, sps_expmv
from uniexp.settings import settings
from uniexp.utils.io import csv_text, load_graph, store_graph, store_matrix, store_statespace, write_csv

logger = logging.getLogger(__name__)


def _emit_model(Q, smap, out, statespace, comment):
    store_matrix(Q, out, comment)
    store_statespace(smap, statespace or f"{out}.states.csv")
    logger.info("wrote %s model d=%d nnz=%d rho=%g to %s", smap.kind, Q.d, Q.nnz, Q.rho, out)


def _model_outputs(command):
    command = click.option("--statespace", default=None, type=click.Path(), help="Statespace CSV; defaults to OUT.states.csv.")(command)
    return click.option("--out", required=True, type=click.Path(), help="Matrix Market output path.")(command)


@click.group()
def model():
    """Build a model generator (Matrix Market plus statespace CSV) or a graph."""


@model.command("imm-death")
@click.option("--n", "n", required=True, type=int)
@click.option("--mu", required=True, type=float, help="Per-slot death rate.")
@click.option("--gamma", required=True, type=float, help="Per-slot immigration rate.")
@_model_outputs
def imm_death(n, mu, gamma, out, statespace):
    Q, smap = build_imm_death(n, mu, gamma)
    _emit_model(Q, smap, out, statespace, f"imm-death n={n} mu={mu} gamma={gamma}")


@model.command()
@click.option("--n", "n_pop", required=True, type=int)
@click.option("--alpha", required=True, type=float)
@click.option("--beta", required=True, type=float)
@click.option("--u", required=True, type=float)
@click.option("--v", required=True, type=float)
@_model_outputs
def moran(n_pop, alpha, beta, u, v, out, statespace):
    Q, smap = build_moran(n_pop, alpha, beta, u, v)
    _emit_model(Q, smap, out, statespace, f"moran n={n_pop} alpha={alpha} beta={beta} u={u} v={v}")


@model.command()
@click.option("--n", "n_pop", required=True, type=int)
@click.option("--beta", required=True, type=float)
@click.option("--gamma", required=True, type=float)
@_model_outputs
def sir(n_pop, beta, gamma, out, statespace):
    Q, smap = build_sir(n_pop, beta, gamma)
    _emit_model(Q, smap, out, statespace, f"sir n={n_pop} beta={beta} gamma={gamma}")


@model.command()
@click.option("--n", "n_pop", required=True, type=int)
@click.option("--beta", required=True, type=float)
@click.option("--delta", required=True, type=float)
@click.option("--gamma", required=True, type=float)
@click.option("--eta", required=True, type=float)
@click.option("--waning", default="R", type=click.Choice(["R", "I"]), help="Compartment driving R -> S.")
@_model_outputs
def seirs(n_pop, beta, delta, gamma, eta, waning, out, statespace):
    Q, smap = build_seirs(n_pop, beta, delta, gamma, eta, waning)
    _emit_model(
        Q, smap, out, statespace,
        f"seirs n={n_pop} beta={beta} delta={delta} gamma={gamma} eta={eta} waning={waning}",
    )


@model.command("sir-birth")
@click.option("--s0", required=True, type=int)
@click.option("--i0", required=True, type=int)
@click.option("--s1", required=True, type=int)
@click.option("--i1", required=True, type=int)
@click.option("--beta", required=True, type=float)
@click.option("--gamma", required=True, type=float)
@click.option("--prune", is_flag=True, help="Leave out states with negative I.")
@_model_outputs
def sir_birth(s0, i0, s1, i1, beta, gamma, prune, out, statespace):
    Q, smap = build_sir_birth(s0, i0, s1, i1, beta, gamma, prune=prune)
    _emit_model(Q, smap, out, statespace, f"sir-birth ({s0},{i0})->({s1},{i1}) beta={beta} gamma={gamma}")


@model.command("ba-graph")
@click.option("--n", "n", required=True, type=int)
@click.option("--m", "m", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path())
def ba_graph(n, m, seed, out):
    """Preferential-attachment graph as a weighted edge list."""
    store_graph(barabasi_albert(n, m, seed), out)


@model.command("joined-graph")
@click.option("--n", "n", required=True, type=int)
@click.option("--m", "m", required=True, type=int)
@click.option("--seed-a", required=True, type=int)
@click.option("--seed-b", required=True, type=int)
@click.option("--mode", required=True, type=click.Choice(JOIN_MODES))
@click.option("--out", required=True, type=click.Path())
def joined_graph(n, m, seed_a, seed_b, mode, out):
    """Two preferential-attachment graphs joined by one bridge of weight M."""
    joined = join_graphs(barabasi_albert(n, m, seed_a), barabasi_albert(n, m, seed_b), mode, m)
    store_graph(joined, out)


@model.command()
@click.option("--graph", "graph_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def laplacian(graph_path, out):
    """Negative Laplacian of an edge-list graph as a generator."""
    G = load_graph(graph_path)
    store_matrix(graph_laplacian(G), out, f"laplacian nodes={G.n_nodes}")


@click.command()
@click.option("--n", "n", default=1000, show_default=True, type=int)
@click.option("--mu", default=0.05, show_default=True, type=float)
@click.option("--gamma", default=0.01, show_default=True, type=float)
@click.option("--t", "t", default=20.0, show_default=True, type=float)
@click.option("--eps", default=None, type=float)
@click.option("--variant", default="SPS2r", show_default=True, help="SPS, SPSr, SPS2 or SPS2r.")
@click.option("--repeats", default=None, type=int)
@click.option("--grid", "n_grid", default=None, type=int, help="Also compare MUSPS and sequential SPS2r on N even times.")
@click.option("--t-max", default=50.0, show_default=True, type=float)
@click.option("--out", default=None, type=click.Path(), help="Per-time error CSV for --grid.")
def validate(n, mu, gamma, t, eps, variant, repeats, n_grid, t_max, out):
    """
    L1 error of the series against the exact immigration-death distribution,
    started from X(0) = N.
    """
    eps = settings.DEFAULT_EPS if eps is None else eps
    opts = SpsOptions.from_variant(variant, eps)
    Q, smap = build_imm_death(n, mu, gamma)
    nu = smap.point_mass((n,))

    result, wall, lo, hi = timed(lambda: sps_expmv(nu, Q, t, opts), repeats or settings.REPEATS)
    error = float(np.abs(result.dist - imm_death_exact(n, mu, gamma, t)).sum())
    click.echo(
        csv_text(
            ["variant", "n", "t", "rho_t", "m_lo", "m_hi", "n_sparse", "wall_ms", "wall_min_ms", "wall_max_ms", "l1_error"],
            [[opts.variant, n, t, result.rho_t, result.m_lo_used, result.m_used, result.n_sparse, wall, lo, hi, error]],
        ),
        nl=False,
    )
    if n_grid is None:
        return

    times = [t_max * (k + 1) / n_grid for k in range(n_grid)]
    multi = musps_expmv(nu, Q, times, eps)
    chained = sequential_sps(nu, Q, times, SpsOptions.from_variant("SPS2r", eps))
    rows = []
    for s, a, b in zip(times, multi, chained):
        truth = imm_death_exact(n, mu, gamma, s)
        rows.append((s, float(np.abs(a.dist - truth).sum()), float(np.abs(b.dist - truth).sum())))
    header = ["time", "musps_error", "sequential_error"]
    if out:
        write_csv(out, header, rows)
    else:
        click.echo(csv_text(header, rows), nl=False)
