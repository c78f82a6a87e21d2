import logging
from typing import Optional

from pydantic import BaseModel

from uniexp.models.schemas import SpsOptions
from uniexp.networks.epidemics import build_sir_birth, sir_state
from uniexp.services.sps import log_sum, sps_expmv
from uniexp.settings import settings

logger = logging.getLogger(__name__)

# Eyam plague, 1666: time in units of 31 days; susceptible and infected counts.
EYAM_TIMES = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
EYAM_S = (254, 235, 201, 153, 121, 110, 97, 83)
EYAM_I = (7, 14, 22, 29, 20, 8, 8, 0)

# Maximum-likelihood (β, γ)
EYAM_BETA = 0.0196
EYAM_GAMMA = 3.204


class EyamFactor(BaseModel):
    t0: float
    t1: float
    start: tuple[int, int]
    end: tuple[int, int]
    d: int
    rho: float
    m_lo: int
    m_hi: int
    n_sparse: int
    loglik: float


def eyam_pairs(jump_only: bool = False) -> list[tuple[int, int]]:
    """Index pairs of consecutive observations, or the single first-to-last pair."""
    last = len(EYAM_TIMES) - 1
    if jump_only:
        return [(0, last)]
    return [(k, k + 1) for k in range(last)]


def eyam_factors(
    eps: Optional[float] = None,
    options: Optional[SpsOptions] = None,
    jump_only: bool = False,
    beta: float = EYAM_BETA,
    gamma: float = EYAM_GAMMA,
    prune: bool = False,
) -> list[EyamFactor]:
    """
    Log transition probabilities between consecutive Eyam observations.

    Each factor propagates a point mass at (n_I, n_R) = (0, 0) over the
    interval on the birth statespace and reads the entry of the observed end
    state.

    Args:
        eps (Optional[float]): Truncation tolerance; overrides options.eps.
        options (Optional[SpsOptions]): Variant flags; defaults to SPS.
        jump_only (bool): Use only the first and last observation.
        beta, gamma (float): SIR rates.
        prune (bool): Drop birth states with negative I.

    Returns:
        list[EyamFactor]: One entry per observation pair.
    """
    options = options or SpsOptions(eps=settings.DEFAULT_EPS)
    if eps is not None:
        options = SpsOptions(renormalize=options.renormalize, two_tailed=options.two_tailed, eps=eps)

    factors = []
    for k0, k1 in eyam_pairs(jump_only):
        Q, smap = build_sir_birth(
            EYAM_S[k0], EYAM_I[k0], EYAM_S[k1], EYAM_I[k1], beta, gamma, prune=prune
        )
        dt = EYAM_TIMES[k1] - EYAM_TIMES[k0]
        origin = smap.index_of((0, 0))
        result = sps_expmv(smap.point_mass((0, 0)), Q, dt, options)
        n_I = EYAM_S[k0] - EYAM_S[k1]
        n_R = n_I + EYAM_I[k0] - EYAM_I[k1]
        target = smap.index_of((n_I, n_R))
        loglik = log_sum(result, target)
        factors.append(
            EyamFactor(
                t0=EYAM_TIMES[k0],
                t1=EYAM_TIMES[k1],
                start=sir_state(smap, origin),
                end=sir_state(smap, target),
                d=Q.d,
                rho=result.rho_t,
                m_lo=result.m_lo_used,
                m_hi=result.m_used,
                n_sparse=result.n_sparse,
                loglik=loglik,
            )
        )
        logger.info(
            "eyam %.1f->%.1f (S, I) %s->%s d=%d rho=%.3f window=[%d, %d] loglik=%.10f",
            factors[-1].t0, factors[-1].t1, factors[-1].start, factors[-1].end,
            Q.d, result.rho_t, result.m_lo_used, result.m_used, loglik,
        )
    return factors


def eyam_loglik(
    eps: Optional[float] = None,
    options: Optional[SpsOptions] = None,
    jump_only: bool = False,
    **kwargs,
) -> float:
    """Eyam SIR log-likelihood: the sum of `eyam_factors`."""
    return sum(f.loglik for f in eyam_factors(eps, options, jump_only, **kwargs))
