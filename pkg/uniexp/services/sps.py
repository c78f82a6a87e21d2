import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from uniexp.exceptions import InputError, InternalError
from uniexp.models.schemas import SpsOptions, TimeGrid
from uniexp.services.generator import RateMatrix, as_mass_vector, require_valid, shift
from uniexp.services.truncation import single_tailed_window, two_tailed_window
from uniexp.settings import settings

logger = logging.getLogger(__name__)


class SpsResult(BaseModel):
    """
    Output of one series evaluation of nu^T exp(Qt).

    Attributes:
        dist (np.ndarray): The propagated vector.
        m_used (int): Upper truncation index.
        m_lo_used (int): First accumulated index (0 unless two-tailed).
        n_sparse (int): Sparse vector-matrix products performed.
        renorm_events (int): Overflow-guard firings.
        variant (str): SPS, SPSr, SPS2, SPS2r or MUSPS2r.
        rho_t (float): ρt of the run.
        input_mass (float): sum(nu).
        renormalized (bool): Whether dist was rescaled to input_mass.
        log_offset (float): log of the factor mapping raw_sum onto dist when
            not renormalized (c - ρt).
        raw_sum (Optional[np.ndarray]): Accumulated partial sum before the
            final scale; kept for underflow-free log entries.
        degenerate (bool): nu was the zero vector.
    """

    dist: np.ndarray
    m_used: int
    m_lo_used: int
    n_sparse: int
    renorm_events: int = 0
    variant: str
    rho_t: float
    input_mass: float
    renormalized: bool
    log_offset: float = 0.0
    raw_sum: Optional[np.ndarray] = None
    degenerate: bool = False

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def missing_mass(self) -> float:
        return self.input_mass - float(self.dist.sum())


def _trivial_result(nu: np.ndarray, variant: str, degenerate: bool = False) -> SpsResult:
    return SpsResult(
        dist=nu.copy(),
        m_used=0,
        m_lo_used=0,
        n_sparse=0,
        variant=variant,
        rho_t=0.0,
        input_mass=float(nu.sum()),
        renormalized=False,
        raw_sum=nu.copy(),
        degenerate=degenerate,
    )


def assert_nonnegative(vector: np.ndarray, j: int) -> None:
    if (vector < 0).any():
        raise InternalError(
            f"negative entry in series term {j}", {"term": j, "min": float(vector.min())}
        )


def sps_expmv(
    nu,
    Q: RateMatrix,
    t: float,
    opts: Optional[SpsOptions] = None,
    validate: bool = True,
) -> SpsResult:
    """
    Single Positive Series evaluation of nu^T exp(Qt).

    Uniformizes Qt as exp(-ρt) sum_j (ρt)^j/j! P_norm^j and sums the series up
    to the Poisson quantile of the requested tolerance. The running term is
    carried unnormalized with its scale in `b` and a log offset `c`, folded
    whenever b exceeds settings.BIG.

    Args:
        nu: Nonnegative initial vector of length d.
        Q (RateMatrix): Generator (conservative or with leaking rows).
        t (float): Time, >= 0.
        opts (Optional[SpsOptions]): Variant flags and eps.
        validate (bool): Check Q before running.

    Returns:
        SpsResult: The propagated vector and run counters.

    Raises:
        InputError: On negative t or an invalid nu.
        MatrixValidationError: If Q is not a generator.
        InternalError: If CHECK_POSITIVITY is on and a term goes negative.
    """
    opts = opts or SpsOptions(eps=settings.DEFAULT_EPS)
    if t < 0 or not math.isfinite(t):
        raise InputError(f"time must be finite and nonnegative, got {t}")
    nu = as_mass_vector(nu, Q.d)
    if validate:
        require_valid(Q)

    mass = float(nu.sum())
    if mass == 0.0:
        logger.warning("initial vector is zero; returning zero vector")
        return _trivial_result(nu, opts.variant, degenerate=True)
    if t == 0.0 or Q.rho == 0.0:
        return _trivial_result(nu, opts.variant)

    kernel = shift(Q.scaled(t))
    rho = kernel.rho
    if opts.two_tailed:
        window = two_tailed_window(rho, opts.eps)
    else:
        window = single_tailed_window(rho, opts.eps)
    m, m_lo = window.m_hi, window.m_lo
    logger.debug("%s: rho_t=%g window=[%d, %d]", opts.variant, rho, m_lo, m)

    big = settings.BIG
    check = settings.CHECK_POSITIVITY
    operator = kernel.left_operator
    renorm_events = 0

    b = mass
    c = 0.0
    v_pro = nu
    if b > big:
        v_pro = v_pro / b
        c += math.log(b)
        b = 1.0
        renorm_events += 1
    v_sum = v_pro.copy() if m_lo == 0 else np.zeros_like(v_pro)

    f = 1.0
    for j in range(1, m + 1):
        v_pro = operator @ v_pro
        v_pro /= f
        b *= rho / f
        if check:
            assert_nonnegative(v_pro, j)
        if j >= m_lo:
            v_sum += v_pro
        if b > big:
            v_pro /= b
            v_sum /= b
            c += math.log(b)
            b = 1.0
            renorm_events += 1
        f += 1.0

    if opts.renormalize:
        total = float(v_sum.sum())
        dist = v_sum * (mass / total) if total > 0 else v_sum.copy()
    else:
        dist = math.exp(c - rho) * v_sum
    if check:
        assert_nonnegative(dist, m)

    return SpsResult(
        dist=dist,
        m_used=m,
        m_lo_used=m_lo,
        n_sparse=m,
        renorm_events=renorm_events,
        variant=opts.variant,
        rho_t=rho,
        input_mass=mass,
        renormalized=opts.renormalize,
        log_offset=c - rho,
        raw_sum=v_sum,
    )


def log_sum(result: SpsResult, index: int) -> float:
    """
    Natural log of entry `index` of a result, without passing through dist.

    Non-renormalized runs use log(raw) + c - ρt; renormalized runs use
    log(raw) - log(sum raw) + log(input mass). A zero entry gives -inf.

    Raises:
        InputError: If index is out of range.
    """
    raw = result.raw_sum if result.raw_sum is not None else result.dist
    if not 0 <= index < raw.shape[0]:
        raise InputError(f"entry index {index} out of range for d={raw.shape[0]}")
    value = float(raw[index])
    if value <= 0.0:
        logger.warning("entry %d is zero in the truncated series; log is -inf", index)
        return -math.inf
    if result.renormalized:
        return math.log(value) - math.log(float(raw.sum())) + math.log(result.input_mass)
    return math.log(value) + result.log_offset


def sequential_sps(
    nu,
    Q: RateMatrix,
    grid: TimeGrid | Sequence[float],
    opts: Optional[SpsOptions] = None,
) -> list[SpsResult]:
    """
    Chain sps_expmv over the increments of an ascending grid.

    Returns:
        list[SpsResult]: One result per grid time; each result's counters
            describe its own increment.
    """
    grid = grid if isinstance(grid, TimeGrid) else time_grid(grid)
    require_valid(Q)
    results = []
    current = as_mass_vector(nu, Q.d)
    previous = 0.0
    for t in grid.times:
        result = sps_expmv(current, Q, t - previous, opts, validate=False)
        results.append(result)
        current = result.dist
        previous = t
    return results


def time_grid(times: Sequence[float]) -> TimeGrid:
    """
    Validate an ascending grid of positive times.

    Raises:
        InputError: If the grid is empty, not ascending or holds t <= 0.
    """
    try:
        return TimeGrid(times=[float(t) for t in times])
    except ValidationError as e:
        detail = "; ".join(err["msg"].removeprefix("Value error, ") for err in e.errors())
        raise InputError(detail) from e
