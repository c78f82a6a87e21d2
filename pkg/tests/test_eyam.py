import math

import pytest

from uniexp.models.schemas import SpsOptions
from uniexp.networks.epidemics import build_sir_birth
from uniexp.networks.eyam import (
    EYAM_BETA,
    EYAM_GAMMA,
    EYAM_I,
    EYAM_S,
    EYAM_TIMES,
    eyam_factors,
    eyam_loglik,
    eyam_pairs,
)

SIZES = (261, 946, 2059, 1387, 289, 197, 346)
RHOS = (101.530, 171.446, 217.098, 170.056, 83.080, 53.605, 106.278)


def _birth_chain(k0, k1):
    return build_sir_birth(EYAM_S[k0], EYAM_I[k0], EYAM_S[k1], EYAM_I[k1], EYAM_BETA, EYAM_GAMMA)


def test_pairs():
    """Consecutive observations give seven transitions; the jump gives one."""
    assert eyam_pairs() == [(k, k + 1) for k in range(7)]
    assert eyam_pairs(jump_only=True) == [(0, 7)]


@pytest.mark.parametrize("pair,d,rho", list(zip(eyam_pairs(), SIZES, RHOS)))
def test_transition_sizes_and_rates(pair, d, rho):
    """Each transition's birth statespace and rho * dt match the recorded values."""
    Q, _ = _birth_chain(*pair)
    dt = EYAM_TIMES[pair[1]] - EYAM_TIMES[pair[0]]

    assert Q.d == d
    assert Q.rho * dt == pytest.approx(rho, abs=0.05)


def test_jump_statespace():
    """The first-to-last jump lives on 30789 states with rho about 3439.5."""
    Q, _ = _birth_chain(0, 7)
    assert Q.d == 30789
    assert Q.rho * 4.0 == pytest.approx(3439.530, abs=0.05)


def test_factors_report_diagnostics():
    """Every factor carries its statespace, window and a finite log-probability."""
    factors = eyam_factors(eps=1e-9)

    assert [f.d for f in factors] == list(SIZES)
    for f in factors:
        assert f.m_lo == 0
        assert f.n_sparse == f.m_hi
        assert math.isfinite(f.loglik)
        assert f.loglik < 0.0


def test_factors_name_observed_states():
    """Each factor runs from one observed (S, I) pair to the next."""
    factors = eyam_factors(eps=1e-9)
    observed = list(zip(EYAM_S, EYAM_I))

    assert [f.start for f in factors] == observed[:-1]
    assert [f.end for f in factors] == observed[1:]


def test_cross_tolerance_agreement():
    """Tightening eps from 1e-9 to 1e-16 moves the log-likelihood by less than 1e-7."""
    loose = eyam_loglik(eps=1e-9)
    tight = eyam_loglik(eps=1e-16)
    assert abs(loose - tight) <= 1e-7


@pytest.mark.parametrize("variant", ["SPSr", "SPS2", "SPS2r"])
def test_variants_agree(variant):
    """All variants give the same log-likelihood to high accuracy."""
    reference = eyam_loglik(eps=1e-16)
    assert eyam_loglik(options=SpsOptions.from_variant(variant, 1e-16)) == pytest.approx(reference, abs=1e-8)


def test_pruning_leaves_likelihood_unchanged():
    """States with negative I are unreachable, so pruning them changes nothing."""
    full = eyam_loglik(eps=1e-12)
    pruned = eyam_loglik(eps=1e-12, prune=True)
    assert pruned == pytest.approx(full, abs=1e-9)


@pytest.mark.slow
def test_jump_likelihood_cross_tolerance():
    """The jump factor is stable across tolerances."""
    (jump,) = eyam_factors(eps=1e-9, jump_only=True)
    loose = jump.loglik
    tight = eyam_loglik(eps=1e-16, jump_only=True)
    assert math.isfinite(tight)
    assert abs(loose - tight) <= 1e-7
    assert (jump.start, jump.end) == ((EYAM_S[0], EYAM_I[0]), (EYAM_S[-1], EYAM_I[-1]))
