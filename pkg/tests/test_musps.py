import math
from collections import defaultdict

import numpy as np
import pytest

from oracles import binomial_pmf, dense_expm_action, two_state_exact
from uniexp.exceptions import InputError
from uniexp.models.schemas import SpsOptions
from uniexp.networks.epidemics import build_seirs, build_sir
from uniexp.networks.population import build_imm_death, imm_death_exact
from uniexp.services.bench import seirs_parameters
from uniexp.services.generator import RateMatrix
from uniexp.services.musps import musps_expmv
from uniexp.services.sps import sequential_sps, sps_expmv
from uniexp.services.truncation import two_tailed_window
from uniexp.settings import settings


def test_two_state_closed_form(two_state):
    """Every time of the grid matches the two-state solution."""
    times = [0.001, 0.1, 0.5, 2.0, 9.0]
    results = musps_expmv([1.0, 0.0], two_state, times)

    assert len(results) == len(times)
    for t, result in zip(times, results):
        np.testing.assert_allclose(result.dist, two_state_exact(t), atol=1e-13)
        assert result.variant == "MUSPS2r"
        assert result.rho_t == pytest.approx(2.0 * t)


def test_matches_dense_exponential():
    """A small SIR chain agrees with the dense exponential on a wide grid."""
    Q, smap = build_sir(10, 0.2, 1.0)
    nu = smap.point_mass((9, 1))
    times = [0.01, 0.05, 0.3, 1.0, 2.5, 6.0, 15.0]
    for t, result in zip(times, musps_expmv(nu, Q, times)):
        assert np.abs(result.dist - dense_expm_action(nu, Q, t)).sum() <= 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_generators_match_dense_exponential(seed):
    """Random sparse generators agree entry by entry and keep the input mass."""
    rng = np.random.default_rng(seed)
    d = 30
    rates = rng.uniform(0.0, 1.0, size=(d, d)) * (rng.uniform(size=(d, d)) < 0.2)
    np.fill_diagonal(rates, 0.0)
    dense = rates - np.diag(rates.sum(axis=1))
    Q = RateMatrix.from_dense(dense)
    nu = rng.uniform(size=d)
    times = [0.05, 0.5, 2.0, 10.0]

    for t, result in zip(times, musps_expmv(nu, Q, times)):
        np.testing.assert_allclose(result.dist, dense_expm_action(nu, Q, t), rtol=0, atol=1e-12)
        assert result.dist.sum() == pytest.approx(nu.sum(), rel=1e-13)


def test_single_time_matches_sps2r():
    """A one-point grid gives the single-time renormalized two-tailed result."""
    Q, smap = build_sir(12, 0.1, 0.7)
    nu = smap.point_mass((11, 1))
    multi = musps_expmv(nu, Q, [3.0])[0]
    single = sps_expmv(nu, Q, 3.0, SpsOptions.from_variant("SPS2r"))

    assert np.abs(multi.dist - single.dist).sum() <= 1e-13
    assert multi.m_used == single.m_used


def test_each_time_sums_its_own_window():
    """Time i receives exactly the terms m_lo..m_hi of its window."""
    Q, smap = build_imm_death(40, 0.5, 0.2)
    nu = smap.point_mass((40,))
    times = [0.2, 1.0, 3.0, 3.5, 10.0]
    seen = defaultdict(list)

    def record(j, i_lo, i_hi):
        for i in range(i_lo, i_hi + 1):
            seen[i].append(j)

    results = musps_expmv(nu, Q, times, 1e-12, on_accumulate=record)
    for i, result in enumerate(results):
        assert seen[i] == list(range(result.m_lo_used, result.m_used + 1))
        window = two_tailed_window(Q.rho * times[i], 1e-12)
        assert result.m_used == window.m_hi
        assert result.m_lo_used <= window.m_lo


def test_lower_windows_are_monotone():
    """Effective lower indices never decrease along the grid."""
    Q, smap = build_imm_death(40, 0.5, 0.2)
    results = musps_expmv(smap.point_mass((40,)), Q, [0.5, 5.0, 5.1, 20.0])
    lows = [r.m_lo_used for r in results]
    assert lows == sorted(lows)


def test_n_sparse_is_shared_pass_length(two_state):
    """All results report the length of the one shared pass."""
    results = musps_expmv([1.0, 0.0], two_state, [1.0, 4.0, 8.0])
    assert {r.n_sparse for r in results} == {results[-1].m_used}


def test_guards_do_not_change_result(tight_guards):
    """Folding on tiny guards leaves every distribution unchanged."""
    Q, smap = build_imm_death(30, 1.0, 0.5)
    nu = smap.point_mass((30,))
    times = [0.01, 0.5, 2.0, 20.0]
    results = musps_expmv(nu, Q, times)

    assert results[0].renorm_events > 0
    for t, result in zip(times, results):
        np.testing.assert_allclose(result.dist, imm_death_exact(30, 1.0, 0.5, t), atol=1e-12)


def test_coarse_guards_are_transparent(two_state, monkeypatch):
    """With BIG = 1e3 and SMALL = 1e-3 ten times still match the unguarded pass."""
    times = [float(k) for k in range(1, 11)]
    reference = musps_expmv([1.0, 0.0], two_state, times)
    monkeypatch.setattr(settings, "BIG", 1e3)
    monkeypatch.setattr(settings, "SMALL", 1e-3)
    guarded = musps_expmv([1.0, 0.0], two_state, times)

    assert sum(r.renorm_events for r in guarded) > 0
    for a, b in zip(guarded, reference):
        np.testing.assert_allclose(a.dist, b.dist, rtol=1e-10)


def test_seirs_matches_direct_sps2r():
    """On SEIRS every grid time agrees with a separate SPS2r evaluation."""
    n_pop = 8
    Q, smap = build_seirs(n_pop, *seirs_parameters(n_pop))
    nu = smap.point_mass((n_pop - 1, 1, 0))
    times = [100.0 * (k + 1) / 30 for k in range(30)]
    results = musps_expmv(nu, Q, times)
    for t, result in zip(times, results):
        direct = sps_expmv(nu, Q, t, SpsOptions.from_variant("SPS2r"))
        assert np.abs(result.dist - direct.dist).sum() <= 1e-12


def test_immigration_death_grid_accuracy():
    """Every time of an even grid stays close to the binomial solution."""
    n, mu, gamma = 100, 0.05, 0.01
    Q, smap = build_imm_death(n, mu, gamma)
    times = [50.0 * (k + 1) / 200 for k in range(200)]
    results = musps_expmv(smap.point_mass((n,)), Q, times)
    for t, result in zip(times, results):
        assert np.abs(result.dist - imm_death_exact(n, mu, gamma, t)).sum() <= 1e-13


@pytest.mark.slow
def test_at_least_as_accurate_as_sequential():
    """Over 2000 times the shared pass is never less accurate than chaining SPS2r."""
    n, mu, gamma = 1000, 0.05, 0.01
    Q, smap = build_imm_death(n, mu, gamma)
    nu = smap.point_mass((n,))
    times = [50.0 * (k + 1) / 2000 for k in range(2000)]
    multi = musps_expmv(nu, Q, times)
    chained = sequential_sps(nu, Q, times, SpsOptions.from_variant("SPS2r"))
    for t, a, b in zip(times, multi, chained):
        exact = binomial_pmf(n, (gamma + mu * math.exp(-(gamma + mu) * t)) / (gamma + mu))
        assert np.abs(a.dist - exact).sum() <= np.abs(b.dist - exact).sum() + 1e-14


@pytest.mark.slow
def test_seirs_forty_matches_direct():
    """SEIRS with 40 individuals on 200 times agrees with direct SPS2r."""
    n_pop = 40
    Q, smap = build_seirs(n_pop, *seirs_parameters(n_pop))
    nu = smap.point_mass((n_pop - 1, 1, 0))
    times = [100.0 * (k + 1) / 200 for k in range(200)]
    results = musps_expmv(nu, Q, times)
    for t, result in list(zip(times, results))[::10]:
        direct = sps_expmv(nu, Q, t, SpsOptions.from_variant("SPS2r"))
        assert np.abs(result.dist - direct.dist).sum() <= 1e-12


def test_constant_chain_returns_input():
    """With no transitions every time returns the initial vector."""
    Q = RateMatrix.from_dense([[0.0, 0.0], [0.0, 0.0]])
    results = musps_expmv([0.4, 0.6], Q, [1.0, 2.0])
    for result in results:
        np.testing.assert_array_equal(result.dist, [0.4, 0.6])
        assert result.n_sparse == 0


def test_unsorted_grid_rejected(two_state):
    """A grid out of order is an input error."""
    with pytest.raises(InputError, match="times not ascending"):
        musps_expmv([1.0, 0.0], two_state, [2.0, 1.0])


def test_bad_eps_rejected(two_state):
    """Tolerances outside (0, 1) are input errors."""
    with pytest.raises(InputError):
        musps_expmv([1.0, 0.0], two_state, [1.0], eps=2.0)
