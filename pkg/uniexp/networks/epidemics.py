import logging
from typing import Literal, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from uniexp.exceptions import InputError
from uniexp.models.schemas import SeirsSummary
from uniexp.networks.population import _check_rates
from uniexp.networks.statespace import StateSpaceMap
from uniexp.services.generator import RateMatrix, generator_from_rates
from uniexp.services.sps import SpsResult

logger = logging.getLogger(__name__)

# ODE step cap, in model time units
ODE_MAX_STEP = 0.01


def _transitions(smap: StateSpaceMap, targets: np.ndarray, rates: np.ndarray, mask: np.ndarray):
    src = np.flatnonzero(mask)
    dst = smap.indices_of(targets[mask])
    return src, dst, rates[mask]


def _assemble(smap: StateSpaceMap, parts) -> RateMatrix:
    src = np.concatenate([p[0] for p in parts])
    dst = np.concatenate([p[1] for p in parts])
    rates = np.concatenate([p[2] for p in parts])
    return generator_from_rates(smap.d, src, dst, rates)


def build_sir(n_pop: int, beta: float, gamma: float) -> tuple[RateMatrix, StateSpaceMap]:
    """
    SIR epidemic on states (S, I) with S + I <= n_pop.

    Infection (S, I) -> (S-1, I+1) at βSI; recovery (S, I) -> (S, I-1) at γI.
    States run through S descending, then I ascending.
    """
    if n_pop < 1:
        raise InputError(f"n_pop must be at least 1, got {n_pop}")
    _check_rates(beta=beta, gamma=gamma)
    states = np.array(
        [(s, i) for s in range(n_pop, -1, -1) for i in range(n_pop - s + 1)], dtype=np.int64
    )
    smap = StateSpaceMap(kind="sir", dims=(n_pop,), labels=("S", "I"), states=states)
    S, I = states[:, 0], states[:, 1]

    parts = [
        _transitions(smap, states + [-1, 1], beta * S * I, (S > 0) & (I > 0)),
        _transitions(smap, states + [0, -1], gamma * I, I > 0),
    ]
    return _assemble(smap, parts), smap


def build_seirs(
    n_pop: int,
    beta: float,
    delta: float,
    gamma: float,
    eta: float,
    waning: Literal["R", "I"] = "R",
) -> tuple[RateMatrix, StateSpaceMap]:
    """
    SEIRS epidemic on states (S, E, I) with R = n_pop - S - E - I implicit.

    Args:
        n_pop (int): Population size.
        beta (float): Infection rate; S + I -> E + I at βSI.
        delta (float): E -> I at δE.
        gamma (float): I -> R at γI.
        eta (float): Loss of immunity R -> S.
        waning (str): "R" for rate ηR, "I" for rate ηI (both need R > 0).

    Returns:
        tuple[RateMatrix, StateSpaceMap]: Generator of size C(n_pop + 3, 3).
    """
    if n_pop < 1:
        raise InputError(f"n_pop must be at least 1, got {n_pop}")
    _check_rates(beta=beta, delta=delta, gamma=gamma, eta=eta)
    if waning not in ("R", "I"):
        raise InputError(f"waning must be 'R' or 'I', got {waning!r}")
    states = np.array(
        [
            (s, e, i)
            for s in range(n_pop, -1, -1)
            for e in range(n_pop - s + 1)
            for i in range(n_pop - s - e + 1)
        ],
        dtype=np.int64,
    )
    smap = StateSpaceMap(kind="seirs", dims=(n_pop,), labels=("S", "E", "I"), states=states)
    S, E, I = states[:, 0], states[:, 1], states[:, 2]
    R = n_pop - S - E - I
    waning_rate = eta * (R if waning == "R" else I)

    parts = [
        _transitions(smap, states + [-1, 1, 0], beta * S * I, (S > 0) & (I > 0)),
        _transitions(smap, states + [0, -1, 1], delta * E, E > 0),
        _transitions(smap, states + [0, 0, -1], gamma * I, I > 0),
        _transitions(smap, states + [1, 0, 0], waning_rate, R > 0),
    ]
    return _assemble(smap, parts), smap


def build_sir_birth(
    S0: int,
    I0: int,
    S1: int,
    I1: int,
    beta: float,
    gamma: float,
    prune: bool = False,
) -> tuple[RateMatrix, StateSpaceMap]:
    """
    SIR generator on cumulative birth counts between two exact observations.

    States are (n_I, n_R): infections and recoveries so far, with
    0 <= n_I <= S0 - S1 and 0 <= n_R <= (S0 + I0) - (S1 + I1). The epidemic
    state is S = S0 - n_I, I = I0 + n_I - n_R. Transitions leaving the box go
    to a final absorbing coffin state. With `prune`, states with I < 0 are left out.

    Args:
        S0, I0 (int): Observation at the start of the interval.
        S1, I1 (int): Observation at the end of the interval.
        beta (float): Infection rate.
        gamma (float): Recovery rate.
        prune (bool): Keep only n_R <= I0 + n_I.

    Returns:
        tuple[RateMatrix, StateSpaceMap]: Generator with the coffin as last index.

    Raises:
        InputError: If the observations cannot follow one another.
    """
    _check_rates(beta=beta, gamma=gamma)
    if min(S0, I0, S1, I1) < 0:
        raise InputError("observed counts must be nonnegative")
    if S1 > S0 or S1 + I1 > S0 + I0:
        raise InputError(f"observation ({S1}, {I1}) cannot follow ({S0}, {I0})")
    n_I = S0 - S1
    n_R = (S0 + I0) - (S1 + I1)

    grid = np.array([(a, r) for a in range(n_I + 1) for r in range(n_R + 1)], dtype=np.int64)
    if prune:
        grid = grid[grid[:, 1] <= I0 + grid[:, 0]]
    smap = StateSpaceMap(
        kind="sir_birth",
        dims=(S0, I0, S1, I1),
        labels=("n_I", "n_R"),
        states=grid,
        coffin=grid.shape[0],
    )
    a, r = grid[:, 0], grid[:, 1]
    S = S0 - a
    I = I0 + a - r
    alive = I > 0

    parts = [
        _transitions(smap, grid + [1, 0], beta * S * I, alive & (S > 0)),
        _transitions(smap, grid + [0, 1], gamma * I, alive),
    ]
    return _assemble(smap, parts), smap


def sir_state(smap: StateSpaceMap, index: int) -> Optional[tuple[int, int]]:
    """(S, I) of a birth-statespace index; None for the coffin."""
    counts = smap.state_of(index)
    if counts is None:
        return None
    S0, I0 = smap.dims[0], smap.dims[1]
    return int(S0 - counts[0]), int(I0 + counts[0] - counts[1])


def seirs_summaries(
    results: Sequence[SpsResult],
    smap: StateSpaceMap,
    times: Optional[Sequence[float]] = None,
) -> list[SeirsSummary]:
    """
    Extinction probability and expected load given survival, per result.

    extinction_prob is the mass on E + I = 0; conditional_load is
    E[E + I | E + I > 0]. When no mass survives the load is reported as 0
    with load_defined False.
    """
    if smap.kind != "seirs":
        raise InputError(f"expected a seirs statespace, got {smap.kind}")
    load = (smap.column("E") + smap.column("I")).astype(float)
    extinct = load == 0
    if times is not None and len(times) != len(results):
        raise InputError("times and results differ in length")

    summaries = []
    for k, result in enumerate(results):
        p = result.dist[: load.shape[0]]
        extinction = float(p[extinct].sum())
        survival = 1.0 - extinction
        defined = survival > 0.0
        conditional = float(load @ p) / survival if defined else 0.0
        summaries.append(
            SeirsSummary(
                t=float(times[k]) if times is not None else float("nan"),
                extinction_prob=extinction,
                conditional_load=conditional,
                load_defined=defined,
            )
        )
    return summaries


def seirs_ode(
    params: Sequence[float],
    init: Sequence[float],
    grid: Sequence[float],
    n_pop: int,
) -> np.ndarray:
    """
    Deterministic SEIRS trajectory:

        dS/dt = -θ1 S I + θ4 R
        dE/dt =  θ1 S I - θ2 E
        dI/dt =  θ2 E - θ3 I,   R = n_pop - S - E - I

    Args:
        params: (θ1, θ2, θ3, θ4).
        init: (S, E, I) at time 0.
        grid: Ascending nonnegative output times.
        n_pop (int): Population size.

    Returns:
        np.ndarray: Array of shape (len(grid), 3) with columns S, E, I.
    """
    theta1, theta2, theta3, theta4 = (float(x) for x in params)
    _check_rates(theta1=theta1, theta2=theta2, theta3=theta3, theta4=theta4)
    y0 = np.asarray(init, dtype=float)
    if y0.shape != (3,) or (y0 < 0).any() or y0.sum() > n_pop:
        raise InputError("initial (S, E, I) must be nonnegative and sum to at most n_pop")
    t_eval = np.asarray(grid, dtype=float)
    if t_eval.ndim != 1 or t_eval.size == 0 or t_eval[0] < 0 or (np.diff(t_eval) <= 0).any():
        raise InputError("ODE output times must be nonnegative and ascending")
    if t_eval[-1] == 0.0:
        return y0[None, :].copy()

    def rhs(_t, y):
        S, E, I = y
        R = n_pop - S - E - I
        infection = theta1 * S * I
        return [-infection + theta4 * R, infection - theta2 * E, theta2 * E - theta3 * I]

    solution = solve_ivp(
        rhs,
        (0.0, float(t_eval[-1])),
        y0,
        method="RK45",
        t_eval=t_eval,
        max_step=ODE_MAX_STEP,
        rtol=1e-10,
        atol=1e-12,
    )
    if not solution.success:
        logger.warning("ODE integration stopped early: %s", solution.message)
    return solution.y.T
