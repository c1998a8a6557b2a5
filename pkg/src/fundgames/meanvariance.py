"""n-player game with a time-consistent mean-variance criterion.

Manager ``k`` evaluates ``E_t[Z_k] - gamma_k / 2 * Var_t[Z_k]``.  For constant
strategies the short-horizon deviation criterion reduces to maximizing the
local objective ``H - gamma_k / 2 * G`` (instantaneous drift minus scaled
instantaneous variance of ``Z_k``), which does not depend on time, so the
pointwise maximizer is also the equilibrium at every t.

The competition term of alpha carries ``gamma_k * theta_k * sigma * K``: the
local first-order condition ``mu_vec + gamma theta B s = (1 + gamma - gamma
theta / n) M pi`` together with the fixed point for K fixes the factor
``gamma_k`` (the same factor appears in K's denominator).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import fixedpoint
from .exponential import (
    _init_array,
    _peer_loading,
    _require,
    mean_loading,
    response_map,
    solve_normal,
)
from .fixedpoint import EquilibriumResult
from .market import ConstantStrategy, Criterion, Population


def aggregate_from(mu, sigma, gammas: Sequence, thetas: Sequence):
    n = len(gammas)
    num = sum(1 / (1 + g) for g in gammas) / n * mu / sigma
    den = 1 - sum(g * t / (1 + g) for g, t in zip(gammas, thetas)) / n
    assert den > 0, "aggregate denominator must be positive"
    return num / den


def strategy_from(mu, sigma, gamma, theta, mu_k, sigma_k, nu_k, n, K):
    c = 1 + gamma - gamma * theta / n
    alpha = (sigma_k * (mu * sigma_k - mu_k * sigma) / (c * sigma**2 * nu_k**2)
             + (mu + gamma * theta * sigma * K) / ((1 + gamma) * sigma**2))
    beta = (mu_k * sigma - mu * sigma_k) / (c * sigma * nu_k**2)
    return alpha, beta


def aggregate_K(pop: Population) -> float:
    _require(pop, Criterion.MV)
    m = pop.market
    return float(aggregate_from(
        m.mu, m.sigma,
        [g.risk_aversion for g in pop.managers],
        [g.theta for g in pop.managers],
    ))


def equilibrium_mv(pop: Population) -> EquilibriumResult:
    """Closed-form constant time-consistent equilibrium."""
    K = aggregate_K(pop)
    m = pop.market
    strategies = []
    for g in pop.managers:
        a = g.asset
        alpha, beta = strategy_from(m.mu, m.sigma, g.risk_aversion, g.theta,
                                    a.mu, a.sigma, a.nu, pop.n, K)
        strategies.append(ConstantStrategy(float(alpha), float(beta)))
    return EquilibriumResult(tuple(strategies), K)


def local_objective(pop: Population, others: Sequence[ConstantStrategy], k: int, alpha, beta):
    """``H - gamma_k/2 * G`` at own strategy ``(alpha, beta)``, constants dropped.

    Array-capable; used to evaluate the first-order condition.
    """
    g = pop.managers[k]
    m, a = pop.market, g.asset
    w = 1.0 - g.theta / pop.n
    B = _peer_loading(pop, others, k)
    common = m.sigma * alpha + a.sigma * beta
    idio = a.nu * beta
    H = w * (m.mu * alpha + a.mu * beta - 0.5 * common**2 - 0.5 * idio**2)
    G = (w * common - g.theta * B) ** 2 + (w * idio) ** 2
    return H - 0.5 * g.risk_aversion * G


def best_response_mv(
    pop: Population, others: Sequence[ConstantStrategy], k: int
) -> ConstantStrategy:
    """Maximizer of the local mean-variance objective of manager ``k``.

    When ``theta_k = n = 1`` the objective is flat and this returns the
    equilibrium representative.
    """
    _require(pop, Criterion.MV)
    if not 0 <= k < pop.n:
        raise IndexError(f"manager index {k} out of range for n={pop.n}")
    B = _peer_loading(pop, others, k)
    g = pop.managers[k]
    gamma = g.risk_aversion
    c = 1.0 + gamma - gamma * g.theta / pop.n
    alpha, beta = solve_normal(pop.market, g.asset, 1.0 / c, gamma * g.theta * B / c)
    return ConstantStrategy(float(alpha), float(beta))


def fixed_point_mv(
    pop: Population,
    init: Sequence[ConstantStrategy] | None = None,
    tol: float = fixedpoint.DEFAULT_TOL,
    max_iter: int = fixedpoint.DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    _require(pop, Criterion.MV)
    p = pop.arrays()
    gamma, theta = p["risk_aversion"], p["theta"]
    respond = response_map(pop, np.ones(pop.n), gamma * theta, 1.0 + gamma - gamma * theta / pop.n)
    return fixedpoint.iterate(respond, _init_array(pop, init),
                              lambda x: mean_loading(pop, x), tol, max_iter)
