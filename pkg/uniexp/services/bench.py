import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict
from sqlalchemy.orm import Session

from uniexp.exceptions import InputError
from uniexp.models.entities import BenchRecord
from uniexp.models.schemas import BenchRow, SpsOptions
from uniexp.networks.epidemics import build_seirs, build_sir, seirs_ode, seirs_summaries
from uniexp.networks.population import build_imm_death, build_moran, imm_death_exact
from uniexp.networks.statespace import StateSpaceMap
from uniexp.services.generator import RateMatrix
from uniexp.services.musps import musps_expmv
from uniexp.services.sps import sequential_sps, sps_expmv
from uniexp.settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Final time of the model comparisons
T_MAX = 40.27
VARIANTS = ("SPS", "SPSr", "SPS2", "SPS2r")
MODELS = ("imm_death", "moran", "sir", "seirs")


class BenchCase(BaseModel):
    """
    A model at a fixed initial state, with an optional exact solution and a
    scalar summary of an output distribution.
    """

    name: str
    Q: RateMatrix
    smap: StateSpaceMap
    nu: np.ndarray
    exact: Optional[Callable[[float], np.ndarray]] = None
    summary: Optional[Callable[[np.ndarray], float]] = None
    summary_name: str = ""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def _imm_death_case(n: int) -> BenchCase:
    mu, gamma = 0.05, 0.01
    Q, smap = build_imm_death(n, mu, gamma)
    return BenchCase(
        name="imm_death",
        Q=Q,
        smap=smap,
        nu=smap.point_mass((n,)),
        exact=lambda t: imm_death_exact(n, mu, gamma, t),
    )


def _moran_case(n: int) -> BenchCase:
    Q, smap = build_moran(n, 210.0, 20.0, 0.002, 0.0)
    threshold = int(np.ceil(0.98 * n))
    high = smap.column("X") >= threshold
    return BenchCase(
        name="moran",
        Q=Q,
        smap=smap,
        nu=smap.point_mass((n // 20,)),
        summary=lambda p: float(p[high].sum()),
        summary_name=f"P(X>={threshold})",
    )


def _sir_case(n: int) -> BenchCase:
    Q, smap = build_sir(n, 1.0 / n, 0.25)
    over = smap.column("I") == 0
    return BenchCase(
        name="sir",
        Q=Q,
        smap=smap,
        nu=smap.point_mass((n - 1, 1)),
        summary=lambda p: float(p[over].sum()),
        summary_name="P(I=0)",
    )


def seirs_parameters(n: int) -> tuple[float, float, float, float]:
    return tuple(1.5 * x for x in (1.0 / n, 1.0, 0.25, 0.05))


def _seirs_case(n: int) -> BenchCase:
    Q, smap = build_seirs(n, *seirs_parameters(n))
    extinct = (smap.column("E") + smap.column("I")) == 0
    return BenchCase(
        name="seirs",
        Q=Q,
        smap=smap,
        nu=smap.point_mass((n - 1, 1, 0)),
        summary=lambda p: float(p[extinct].sum()),
        summary_name="P(E+I=0)",
    )


FULL_SIZES = {"imm_death": 1000, "moran": 1000, "sir": 100, "seirs": 40}
SMALL_SIZES = {"imm_death": 50, "moran": 50, "sir": 10, "seirs": 8}
BUILDERS = {"imm_death": _imm_death_case, "moran": _moran_case, "sir": _sir_case, "seirs": _seirs_case}


def bench_case(name: str, small: bool = False) -> BenchCase:
    """
    Model of the comparison grid by name.

    Full sizes: immigration-death and Moran with 1001 states, SIR with
    n_pop=100, SEIRS with n_pop=40. `small` shrinks every population.
    """
    if name not in BUILDERS:
        raise InputError(f"unknown bench model {name!r}; choose from {MODELS}")
    return BUILDERS[name]((SMALL_SIZES if small else FULL_SIZES)[name])


def timed(fn: Callable[[], T], repeats: int) -> tuple[T, float, float, float]:
    """
    Run fn `repeats` times on the monotonic clock.

    Returns:
        tuple: (last result, median ms, min ms, max ms).
    """
    if repeats < 1:
        raise InputError(f"repeats must be at least 1, got {repeats}")
    walls = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        walls.append((time.perf_counter() - start) * 1e3)
    return result, statistics.median(walls), min(walls), max(walls)


def log_times(n_times: int, t_max: float = T_MAX, span: float = 1e4) -> list[float]:
    """n_times logarithmically spaced times ending at t_max."""
    if n_times < 1:
        raise InputError(f"need at least one time, got {n_times}")
    if n_times == 1:
        return [t_max]
    return [float(t) for t in np.geomspace(t_max / span, t_max, n_times)]


def map_ordered(fn: Callable[..., T], items: Sequence, threads: Optional[int] = None) -> list[T]:
    """Apply fn to every item on a worker pool; results keep the input order."""
    workers = max(1, threads or settings.THREADS)
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _l1(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).sum())


def run_variants(
    case: BenchCase,
    times: Sequence[float],
    eps: float,
    repeats: int,
    threads: Optional[int] = None,
) -> list[BenchRow]:
    """
    Time the four single-time variants at every time.

    The error column is the L1 distance to the exact solution when the case
    has one, otherwise to SPS2r at eps = 1e-16.
    """

    def unit(t: float) -> list[BenchRow]:
        if case.exact is not None:
            truth = case.exact(t)
        else:
            truth = sps_expmv(case.nu, case.Q, t, SpsOptions.from_variant("SPS2r", 1e-16)).dist
        rows = []
        for variant in VARIANTS:
            opts = SpsOptions.from_variant(variant, eps)
            result, wall, lo, hi = timed(lambda: sps_expmv(case.nu, case.Q, t, opts), repeats)
            rows.append(
                BenchRow(
                    command="sps",
                    variant=variant,
                    model=case.name,
                    rho_t=result.rho_t,
                    n_sparse=result.n_sparse,
                    wall_ms=wall,
                    wall_min_ms=lo,
                    wall_max_ms=hi,
                    error=_l1(result.dist, truth),
                    summary=case.summary(result.dist) if case.summary else None,
                )
            )
        return rows

    return [row for rows in map_ordered(unit, list(times), threads) for row in rows]


def run_multi(case: BenchCase, times: Sequence[float], eps: float, repeats: int) -> list[BenchRow]:
    """
    Time one shared-pass evaluation against chained single-time SPS2r.

    The MUSPS2r row carries the wall-time ratio multi/sequential; the error
    column is the worst per-time L1 error against the exact solution, or
    against the other method when there is none.
    """
    multi, wall_m, lo_m, hi_m = timed(lambda: musps_expmv(case.nu, case.Q, times, eps), repeats)
    chained, wall_s, lo_s, hi_s = timed(
        lambda: sequential_sps(case.nu, case.Q, times, SpsOptions.from_variant("SPS2r", eps)), repeats
    )
    if case.exact is not None:
        truths = [case.exact(t) for t in times]
        err_m = max(_l1(r.dist, x) for r, x in zip(multi, truths))
        err_s = max(_l1(r.dist, x) for r, x in zip(chained, truths))
    else:
        err_m = err_s = max(_l1(a.dist, b.dist) for a, b in zip(multi, chained))
    last = multi[-1]
    return [
        BenchRow(
            command="musps",
            variant="MUSPS2r",
            model=case.name,
            rho_t=last.rho_t,
            n_sparse=last.n_sparse,
            wall_ms=wall_m,
            wall_min_ms=lo_m,
            wall_max_ms=hi_m,
            error=err_m,
            summary=case.summary(last.dist) if case.summary else None,
            ratio=wall_m / wall_s if wall_s > 0 else None,
        ),
        BenchRow(
            command="musps",
            variant="sequential-SPS2r",
            model=case.name,
            rho_t=last.rho_t,
            n_sparse=sum(r.n_sparse for r in chained),
            wall_ms=wall_s,
            wall_min_ms=lo_s,
            wall_max_ms=hi_s,
            error=err_s,
            summary=case.summary(chained[-1].dist) if case.summary else None,
        ),
    ]


def seirs_curves(n_times: int, t_max: float = 100.0, small: bool = False, eps: Optional[float] = None) -> list[tuple]:
    """
    Extinction probability, conditional load and the ODE load E + I on an
    even grid over (0, t_max], from (S, E, I) = (n_pop - 1, 1, 0).
    """
    case = bench_case("seirs", small)
    n_pop = case.smap.dims[0]
    times = [t_max * (k + 1) / n_times for k in range(n_times)]
    results = musps_expmv(case.nu, case.Q, times, eps)
    summaries = seirs_summaries(results, case.smap, times)
    ode = seirs_ode(seirs_parameters(n_pop), (n_pop - 1, 1, 0), times, n_pop)
    return [
        (s.t, s.extinction_prob, s.conditional_load, float(row[1] + row[2]))
        for s, row in zip(summaries, ode)
    ]


def record_rows(db: Session, rows: Iterable[BenchRow]) -> int:
    count = 0
    for row in rows:
        db.add(BenchRecord(**row.model_dump()))
        count += 1
    db.commit()
    return count


def history(db: Session, model: Optional[str] = None) -> list[BenchRow]:
    query = db.query(BenchRecord).order_by(BenchRecord.id)
    if model is not None:
        query = query.filter(BenchRecord.model == model)
    return [BenchRow.model_validate(record) for record in query.all()]
