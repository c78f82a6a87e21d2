import logging
from typing import Callable, Optional, Sequence

import numpy as np

from uniexp.exceptions import InputError
from uniexp.models.schemas import TimeGrid
from uniexp.services.generator import RateMatrix, as_mass_vector, require_valid, shift
from uniexp.services.sps import SpsResult, assert_nonnegative, time_grid
from uniexp.services.truncation import windows_for_grid
from uniexp.settings import settings

logger = logging.getLogger(__name__)

VARIANT = "MUSPS2r"

AccumulateHook = Callable[[int, int, int], None]


def _constant_results(nu: np.ndarray, n: int, degenerate: bool) -> list[SpsResult]:
    return [
        SpsResult(
            dist=nu.copy(),
            m_used=0,
            m_lo_used=0,
            n_sparse=0,
            variant=VARIANT,
            rho_t=0.0,
            input_mass=float(nu.sum()),
            renormalized=True,
            raw_sum=nu.copy(),
            degenerate=degenerate,
        )
        for _ in range(n)
    ]


def musps_expmv(
    nu,
    Q: RateMatrix,
    grid: TimeGrid | Sequence[float],
    eps: Optional[float] = None,
    on_accumulate: Optional[AccumulateHook] = None,
) -> list[SpsResult]:
    """
    nu^T exp(Q t_i) for every time of an ascending grid from one series pass.

    One running term v_pro is shared by all times. At step j it is scaled for
    the largest time whose window contains j, and time i keeps a weight g_i so
    that g_i * v_pro is proportional to its own j-th series term. Time i adds
    into its sum only while m_lo_i <= j <= m_hi_i (two-tailed windows at eps);
    each sum is renormalized to sum(nu) at the end. The scalar b and the
    weights are folded into the sums when b leaves [SMALL, BIG] or the weight
    of the earliest active time falls below SMALL.

    Args:
        nu: Nonnegative initial vector of length d.
        Q (RateMatrix): Generator.
        grid: Strictly ascending positive times.
        eps (Optional[float]): Missing-mass budget per time; defaults to settings.DEFAULT_EPS.
        on_accumulate (Optional[Callable]): Called as (j, i_lo, i_hi) whenever
            term j is added into the sums of times i_lo..i_hi (0-based).

    Returns:
        list[SpsResult]: One renormalized result per time; n_sparse is the
            length of the shared pass.

    Raises:
        InputError: On an invalid grid, eps or nu.
        MatrixValidationError: If Q is not a generator.
    """
    grid = grid if isinstance(grid, TimeGrid) else time_grid(grid)
    eps = settings.DEFAULT_EPS if eps is None else eps
    if not 0.0 < eps < 1.0:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    nu = as_mass_vector(nu, Q.d)
    require_valid(Q)

    times = np.asarray(grid.times, dtype=float)
    n = times.shape[0]
    mass = float(nu.sum())
    if mass == 0.0:
        logger.warning("initial vector is zero; returning zero vectors")
        return _constant_results(nu, n, degenerate=True)
    rho = Q.rho
    if rho == 0.0:
        return _constant_results(nu, n, degenerate=False)

    kernel = shift(Q)
    windows = windows_for_grid(rho * times, eps)
    m_hi = np.array([w.m_hi for w in windows], dtype=np.int64)
    # suffix minimum keeps the lower windows monotone so the active set stays contiguous
    m_lo = np.minimum.accumulate(np.array([w.m_lo for w in windows], dtype=np.int64)[::-1])[::-1]
    m_max = int(m_hi[-1])

    big = settings.BIG
    small = settings.SMALL
    check = settings.CHECK_POSITIVITY
    operator = kernel.left_operator

    b = mass
    v_pro = nu
    if b > big:
        v_pro = v_pro / b
        b = 1.0
    v_sum = np.zeros((n, Q.d))
    g = np.ones(n)
    renorm_events = 0

    i_hi = -1
    while i_hi + 1 < n and m_lo[i_hi + 1] == 0:
        i_hi += 1
    i_lo = 0
    if i_hi >= 0:
        v_sum[: i_hi + 1] = v_pro
        if on_accumulate is not None:
            on_accumulate(0, 0, i_hi)

    for j in range(1, m_max + 1):
        while i_hi + 1 < n and m_lo[i_hi + 1] <= j:
            i_hi += 1
        while i_lo < n and m_hi[i_lo] < j:
            i_lo += 1
        t_scale = times[i_hi] if i_hi >= 0 else times[0]

        v_pro = operator @ v_pro
        v_pro *= t_scale / j
        b *= rho * t_scale / j
        if check:
            assert_nonnegative(v_pro, j)

        active = i_lo <= i_hi
        if active:
            window = slice(i_lo, i_hi + 1)
            g[window] *= times[window] / t_scale
            v_sum[window] += g[window, None] * v_pro
            if on_accumulate is not None:
                on_accumulate(j, i_lo, i_hi)

        if b > big or b < small or (active and g[i_lo] < small):
            if active:
                v_sum[window] /= (b * g[window])[:, None]
                g[window] = 1.0
            v_pro /= b
            b = 1.0
            renorm_events += 1

    logger.debug("shared pass of %d products over %d times, %d folds", m_max, n, renorm_events)

    results = []
    for i in range(n):
        total = float(v_sum[i].sum())
        dist = v_sum[i] * (mass / total) if total > 0 else v_sum[i].copy()
        results.append(
            SpsResult(
                dist=dist,
                m_used=int(m_hi[i]),
                m_lo_used=int(m_lo[i]),
                n_sparse=m_max,
                renorm_events=renorm_events,
                variant=VARIANT,
                rho_t=float(rho * times[i]),
                input_mass=mass,
                renormalized=True,
                raw_sum=v_sum[i],
            )
        )
    return results
