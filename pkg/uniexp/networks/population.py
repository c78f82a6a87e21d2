import math

import numpy as np
from scipy.stats import binom

from uniexp.exceptions import InputError
from uniexp.networks.statespace import StateSpaceMap
from uniexp.services.generator import RateMatrix, generator_from_rates


def _check_rates(**rates: float) -> None:
    for name, value in rates.items():
        if not math.isfinite(value) or value < 0:
            raise InputError(f"rate {name} must be finite and nonnegative, got {value}")


def _line_map(kind: str, n: int) -> StateSpaceMap:
    return StateSpaceMap(kind=kind, dims=(n,), labels=("X",), states=np.arange(n + 1)[:, None])


def build_imm_death(n: int, mu: float, gamma: float) -> tuple[RateMatrix, StateSpaceMap]:
    """
    Immigration-death chain on {0..n}: X -> X-1 at μX, X -> X+1 at γ(n - X).

    Each of n slots empties at rate μ and refills at rate γ.
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    _check_rates(mu=mu, gamma=gamma)
    x = np.arange(n + 1)
    src = np.concatenate([x[1:], x[:-1]])
    dst = np.concatenate([x[1:] - 1, x[:-1] + 1])
    rates = np.concatenate([mu * x[1:], gamma * (n - x[:-1])])
    return generator_from_rates(n + 1, src, dst, rates), _line_map("imm_death", n)


def imm_death_exact(n: int, mu: float, gamma: float, t: float) -> np.ndarray:
    """
    Exact distribution of the immigration-death chain started full (X(0) = n).

    Slots evolve independently, each full at time t with probability
    p(t) = (γ + μ exp(-(γ+μ)t)) / (γ + μ), so X(t) ~ Binomial(n, p(t)).

    Returns:
        np.ndarray: pmf over {0..n}.
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    _check_rates(mu=mu, gamma=gamma)
    if t < 0:
        raise InputError(f"time must be nonnegative, got {t}")
    total = gamma + mu
    p = 1.0 if total == 0 else (gamma + mu * math.exp(-total * t)) / total
    p = min(1.0, max(0.0, p))
    return binom.pmf(np.arange(n + 1), n, p)


def moran_rates(n_pop: int, alpha: float, beta: float, u: float, v: float) -> tuple[np.ndarray, np.ndarray]:
    """Up-rates λ and down-rates μ at X = 0..n_pop."""
    f = np.arange(n_pop + 1) / n_pop
    up = (1 - f) * (alpha * f * (1 - u) + beta * (1 - f) * v)
    down = f * (beta * (1 - f) * (1 - v) + alpha * f * u)
    return up, down


def build_moran(
    n_pop: int, alpha: float, beta: float, u: float, v: float
) -> tuple[RateMatrix, StateSpaceMap]:
    """
    Moran model with selection and mutation for the count X of type-A individuals.

    Args:
        n_pop (int): Population size.
        alpha (float): Fitness of type A.
        beta (float): Fitness of type B.
        u (float): Probability an A offspring mutates to B.
        v (float): Probability a B offspring mutates to A.

    Returns:
        tuple[RateMatrix, StateSpaceMap]: Tridiagonal generator on {0..n_pop}.
    """
    if n_pop < 1:
        raise InputError(f"n_pop must be at least 1, got {n_pop}")
    _check_rates(alpha=alpha, beta=beta)
    for name, value in (("u", u), ("v", v)):
        if not 0.0 <= value <= 1.0:
            raise InputError(f"mutation probability {name} must lie in [0, 1], got {value}")
    up, down = moran_rates(n_pop, alpha, beta, u, v)
    x = np.arange(n_pop + 1)
    src = np.concatenate([x[:-1], x[1:]])
    dst = np.concatenate([x[:-1] + 1, x[1:] - 1])
    rates = np.concatenate([up[:-1], down[1:]])
    return generator_from_rates(n_pop + 1, src, dst, rates), _line_map("moran", n_pop)
