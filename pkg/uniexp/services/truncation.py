import logging
import math
from typing import Optional, Sequence

from scipy.special import gammainc

from uniexp.exceptions import InputError
from uniexp.models.schemas import BoundSet, TruncationWindow

logger = logging.getLogger(__name__)

# Below this eps the lower bound and the refined upper bound are defined.
LOWER_BOUND_EPS = 0.04


def h(x: float) -> float:
    """
    Chernoff rate function 1 - x + x log x on [1, inf).

    Raises:
        InputError: If x < 1.
    """
    if x < 1.0:
        raise InputError(f"h is defined for x >= 1, got {x}")
    return 1.0 - x + x * math.log(x)


def _check_eps(eps: float) -> None:
    if not 0.0 < eps < 1.0:
        raise InputError(f"eps must lie in (0, 1), got {eps}")


def bound_set(rho: float, eps: float) -> BoundSet:
    """
    Closed-form bracket for the smallest m with Prob{Poisson(rho) > m} <= eps.

    Args:
        rho (float): Poisson mean, > 0.
        eps (float): Tail tolerance in (0, 1).

    Returns:
        BoundSet: m_plus always; m_minus and m_plus_plus when applicable.
    """
    rho, eps = float(rho), float(eps)
    if rho <= 0.0:
        raise InputError(f"rho must be positive, got {rho}")
    _check_eps(eps)
    log_eps = math.log(eps)
    m_plus = rho - (log_eps / 3.0) * (1.0 + math.sqrt(1.0 - 18.0 * rho / log_eps)) - 1.0
    trivial = -math.expm1(-rho) <= eps
    small_rho = rho <= math.sqrt(eps)

    A = B = m_minus = m_plus_plus = None
    if eps < LOWER_BOUND_EPS:
        A = 2.0 * rho * h(max(1.0, (m_plus + 1.0) / rho))
        if A > 1.0:
            inner = -math.log(eps * math.sqrt(2.0 * math.pi)) - 1.5 * math.log(A) + math.log(A - 1.0)
            if inner >= 0.0:
                m_minus = rho + math.sqrt(2.0 * rho) * math.sqrt(inner)
    if m_minus is not None and not trivial:
        hm = h(max(1.0, m_minus / rho))
        if hm > 0.0:
            B = -0.5 * math.log(4.0 * math.pi * rho * hm)
            if B > log_eps:
                gap = B - log_eps
                m_plus_plus = rho + gap / 3.0 * (1.0 + math.sqrt(1.0 + 18.0 * rho / gap))

    return BoundSet(
        rho=rho,
        eps=eps,
        m_plus=m_plus,
        m_minus=m_minus,
        m_plus_plus=m_plus_plus,
        A=A,
        B=B,
        trivial=trivial,
        small_rho=small_rho,
    )


def poisson_tail(m: int, rho: float) -> float:
    """
    Prob{Poisson(rho) > m}, i.e. the regularized lower incomplete gamma P(m+1, rho).

    Args:
        m (int): Truncation index, >= 0.
        rho (float): Poisson mean, >= 0.

    Returns:
        float: The upper tail mass.
    """
    if m < 0:
        raise InputError(f"m must be nonnegative, got {m}")
    if rho < 0.0:
        raise InputError(f"rho must be nonnegative, got {rho}")
    if rho == 0.0:
        return 0.0
    if m == 0:
        return -math.expm1(-rho)
    return float(gammainc(m + 1, rho))


def m_eps(rho: float, eps: float, lower_hint: Optional[int] = None) -> int:
    """
    Smallest m with Prob{Poisson(rho) > m} <= eps.

    The closed-form bounds give the search bracket; it is verified and widened
    when it fails, then narrowed by binary search on the tail.

    Args:
        rho (float): Poisson mean, >= 0.
        eps (float): Tail tolerance in (0, 1).
        lower_hint (Optional[int]): A known lower bound, typically the quantile
            of a smaller rho on an ascending grid.

    Returns:
        int: The quantile.
    """
    rho, eps = float(rho), float(eps)
    _check_eps(eps)
    if rho < 0.0:
        raise InputError(f"rho must be nonnegative, got {rho}")
    if rho == 0.0 or -math.expm1(-rho) <= eps:
        return 0

    bounds = bound_set(rho, eps)
    hi = math.ceil(bounds.m_plus)
    if bounds.m_plus_plus is not None:
        hi = min(hi, math.ceil(bounds.m_plus_plus))
    if bounds.small_rho:
        hi = min(hi, 1)
    hi = max(hi, 1)
    lo = math.floor(bounds.m_minus) if bounds.m_minus is not None else 0
    if lower_hint is not None:
        lo = max(lo, lower_hint)
    lo = max(0, min(lo, hi))

    while poisson_tail(hi, rho) > eps:
        logger.warning("upper bracket %d fails at rho=%g eps=%g; widening", hi, rho, eps)
        lo = hi + 1
        hi = 2 * hi
    while lo > 0 and poisson_tail(lo - 1, rho) <= eps:
        logger.warning("lower bracket %d fails at rho=%g eps=%g; widening", lo, rho, eps)
        lo //= 2

    # invariant: tail(hi) <= eps and (lo == 0 or tail(lo - 1) > eps)
    while lo < hi:
        mid = (lo + hi) // 2
        if poisson_tail(mid, rho) <= eps:
            hi = mid
        else:
            lo = mid + 1
    return hi


def single_tailed_window(rho_t: float, eps: float) -> TruncationWindow:
    rho_t = float(rho_t)
    return TruncationWindow(m_lo=0, m_hi=m_eps(rho_t, eps), eps=eps, rho_t=rho_t)


def two_tailed_window(
    rho_t: float, eps: float, lower_hint: Optional[int] = None
) -> TruncationWindow:
    """
    Window [m_lo, m_hi] discarding at most eps of Poisson(rho_t) mass in total.

    m_hi takes eps/2 of the upper tail; the lower tail below the mirrored index
    2⌊rho_t - 1/2⌋ - m_hi is lighter than the upper one.
    """
    rho_t = float(rho_t)
    _check_eps(eps)
    m_hi = m_eps(rho_t, eps / 2.0, lower_hint)
    m_lo = max(0, 2 * math.floor(rho_t - 0.5) - m_hi)
    return TruncationWindow(m_lo=m_lo, m_hi=m_hi, eps=eps, rho_t=rho_t)


def windows_for_grid(rho_ts: Sequence[float], eps: float) -> list[TruncationWindow]:
    """
    Two-tailed windows for an ascending sequence of rho*t values.

    Each quantile search starts from the previous upper index.
    """
    windows = []
    hint = None
    for rho_t in rho_ts:
        window = two_tailed_window(rho_t, eps, hint)
        hint = window.m_hi
        windows.append(window)
    logger.debug(
        "computed %d windows, m_hi from %d to %d",
        len(windows),
        windows[0].m_hi if windows else 0,
        windows[-1].m_hi if windows else 0,
    )
    return windows
