"""Reference computations used only by the test suite."""

import math

import mpmath
import numpy as np
from scipy.linalg import expm

mpmath.mp.dps = 50

# Two-state chain: 0 -> 1 at rate A, 1 -> 0 at rate B
A, B = 2.0, 1.0


def two_state_exact(t: float) -> np.ndarray:
    """Distribution at time t of the two-state chain started in state 0."""
    stay = B / (A + B) + A / (A + B) * math.exp(-(A + B) * t)
    return np.array([stay, 1.0 - stay])


def poisson_tail(m: int, rho: float) -> mpmath.mpf:
    """Prob{Poisson(rho) > m} in 50-digit arithmetic."""
    return mpmath.gammainc(m + 1, 0, rho, regularized=True)


def poisson_quantile(rho: float, eps: float) -> int:
    """Smallest m with Prob{Poisson(rho) > m} <= eps, by bisection on the exact tail."""
    if 1 - mpmath.exp(-rho) <= eps:
        return 0
    lo, hi = 0, int(rho + 20 * rho**0.5 + 50)
    while lo < hi:
        mid = (lo + hi) // 2
        if poisson_tail(mid, rho) <= eps:
            hi = mid
        else:
            lo = mid + 1
    return hi


def dense_expm_action(nu, Q, t: float) -> np.ndarray:
    """nu^T exp(Qt) through a dense Pade exponential."""
    return np.asarray(nu, dtype=float) @ expm(Q.to_dense() * t)


def gillespie_sir(n_pop: int, beta: float, gamma: float, S0: int, I0: int, t: float, n_paths: int, seed: int):
    """
    Final (S, I) of n_paths SIR trajectories at time t, simulated in lockstep.

    Returns:
        tuple[np.ndarray, np.ndarray]: S and I per path.
    """
    rng = np.random.default_rng(seed)
    S = np.full(n_paths, S0, dtype=np.int64)
    I = np.full(n_paths, I0, dtype=np.int64)
    clock = np.zeros(n_paths)
    running = np.ones(n_paths, dtype=bool)
    while running.any():
        infection = beta * S * I
        total = infection + gamma * I
        running &= total > 0
        idx = np.flatnonzero(running)
        if idx.size == 0:
            break
        clock[idx] += rng.exponential(1.0 / total[idx])
        fired = idx[clock[idx] <= t]
        running[idx[clock[idx] > t]] = False
        infect = rng.random(fired.size) * total[fired] < infection[fired]
        S[fired[infect]] -= 1
        I[fired[infect]] += 1
        I[fired[~infect]] -= 1
    return S, I


def binomial_pmf(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) pmf over {0..n}, each entry computed in 50-digit arithmetic."""
    q = mpmath.mpf(p)
    return np.array([float(mpmath.binomial(n, k) * q**k * (1 - q) ** (n - k)) for k in range(n + 1)])


def poisson_head(k: int, rho: float) -> mpmath.mpf:
    """Prob{Poisson(rho) <= k} by direct summation of 50-digit pmf terms."""
    r = mpmath.mpf(rho)
    return mpmath.fsum(mpmath.exp(-r) * r**j / mpmath.factorial(j) for j in range(k + 1))
