"""n-player game with exponential utility of the excess log-return.

Manager ``k`` maximizes ``E[-exp(-Z_k / delta_k)]`` with
``Z_k = R^k_T - (theta_k / n) sum_i R^i_T``.  The unique constant equilibrium
is explicit; the best-response map and its fixed-point iteration exist to
check it independently.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import fixedpoint
from .fixedpoint import EquilibriumResult
from .market import ConstantStrategy, Criterion, MarketParams, Population, PrivateAsset


def _require(pop: Population, criterion: Criterion) -> None:
    if pop.criterion is not criterion:
        raise ValueError(f"expected a {criterion.value} population, got {pop.criterion.value}")


def aggregate_from(mu, sigma, deltas: Sequence, thetas: Sequence):
    """D for raw parameter sequences; any field type (float, Fraction) works."""
    n = len(deltas)
    num = sum(d / (1 + d) for d in deltas) / n * mu / sigma
    den = 1 - sum(t / (1 + d) for d, t in zip(deltas, thetas)) / n
    assert den > 0, "aggregate denominator must be positive"
    return num / den


def strategy_from(mu, sigma, delta, theta, mu_k, sigma_k, nu_k, n, D):
    """Equilibrium (alpha, beta) of one manager given the aggregate D."""
    c = 1 + delta - theta / n
    alpha = (delta * sigma_k * (mu * sigma_k - mu_k * sigma) / (c * sigma**2 * nu_k**2)
             + (mu * delta + theta * sigma * D) / ((1 + delta) * sigma**2))
    beta = delta * (mu_k * sigma - mu * sigma_k) / (c * sigma * nu_k**2)
    return alpha, beta


def aggregate_D(pop: Population) -> float:
    _require(pop, Criterion.EXP)
    m = pop.market
    return float(aggregate_from(
        m.mu, m.sigma,
        [g.risk_aversion for g in pop.managers],
        [g.theta for g in pop.managers],
    ))


def equilibrium_exp(pop: Population) -> EquilibriumResult:
    """Closed-form constant equilibrium of the exponential-utility game."""
    D = aggregate_D(pop)
    m = pop.market
    strategies = []
    for g in pop.managers:
        a = g.asset
        alpha, beta = strategy_from(m.mu, m.sigma, g.risk_aversion, g.theta,
                                    a.mu, a.sigma, a.nu, pop.n, D)
        strategies.append(ConstantStrategy(float(alpha), float(beta)))
    return EquilibriumResult(tuple(strategies), D)


def solve_normal(market: MarketParams, asset: PrivateAsset, rhs_mu, rhs_sigma):
    """``M^{-1} (rhs_mu * mu_vec + rhs_sigma * sigma_vec)`` for the manager's
    covariance matrix ``M = s s^T + v v^T`` with ``s = (sigma, sigma_k)``,
    ``v = (0, nu_k)`` and ``mu_vec = (mu, mu_k)``.

    Uses the explicit inverse images ``M^{-1} s = (1/sigma, 0)`` and
    ``M^{-1} mu_vec``; a generic 2x2 solve loses up to ``cond(M) * eps`` of
    relative accuracy, which is visible for small ``nu_k``.  Broadcasts over
    arrays.
    """
    mu, sigma = market.mu, market.sigma
    mk, sk, nk = asset.mu, asset.sigma, asset.nu
    gap = mk * sigma - mu * sk
    inv_mu_alpha = mu / sigma**2 - sk * gap / (sigma**2 * nk**2)
    inv_mu_beta = gap / (sigma * nk**2)
    return rhs_mu * inv_mu_alpha + rhs_sigma / sigma, rhs_mu * inv_mu_beta


def covariance_matrix(market: MarketParams, asset: PrivateAsset) -> np.ndarray:
    s = np.array([market.sigma, asset.sigma])
    v = np.array([0.0, asset.nu])
    return np.outer(s, s) + np.outer(v, v)


def common_loading(market: MarketParams, asset: PrivateAsset, strategy: ConstantStrategy) -> float:
    return market.sigma * strategy.alpha + asset.sigma * strategy.beta


def _peer_loading(pop: Population, others: Sequence[ConstantStrategy], k: int) -> float:
    if len(others) != pop.n - 1:
        raise ValueError(f"expected {pop.n - 1} opposing strategies, got {len(others)}")
    idx = [i for i in range(pop.n) if i != k]
    total = sum(common_loading(pop.market, pop.managers[i].asset, s) for i, s in zip(idx, others))
    return total / pop.n


def best_response_exp(
    pop: Population, others: Sequence[ConstantStrategy], k: int
) -> ConstantStrategy:
    """Optimal constant strategy of manager ``k`` (0-based) against ``others``.

    ``others`` lists the strategies of managers ``i != k`` in index order.
    Solves ``(1 - theta_k/n + delta_k) M pi = delta_k mu_vec + theta_k B s``
    with ``B = (1/n) sum_{i != k} s_i^T pi_i``.
    """
    _require(pop, Criterion.EXP)
    if not 0 <= k < pop.n:
        raise IndexError(f"manager index {k} out of range for n={pop.n}")
    B = _peer_loading(pop, others, k)
    g = pop.managers[k]
    c = 1.0 - g.theta / pop.n + g.risk_aversion
    alpha, beta = solve_normal(pop.market, g.asset, g.risk_aversion / c, g.theta * B / c)
    return ConstantStrategy(float(alpha), float(beta))


def response_map(pop: Population, risk_scale: np.ndarray, coupling: np.ndarray, c: np.ndarray):
    """Vectorized ``x -> BR(x)`` for every manager at once.

    Each manager solves ``c_k M_k pi = risk_scale_k mu_vec_k + coupling_k B_k s_k``.
    """
    p = pop.arrays()
    m = pop.market
    n = pop.n
    gap = p["mu_k"] * m.sigma - m.mu * p["sigma_k"]
    inv_mu_alpha = m.mu / m.sigma**2 - p["sigma_k"] * gap / (m.sigma**2 * p["nu_k"] ** 2)
    inv_mu_beta = gap / (m.sigma * p["nu_k"] ** 2)
    sigma_k = p["sigma_k"]

    def respond(x: np.ndarray) -> np.ndarray:
        e = m.sigma * x[:, 0] + sigma_k * x[:, 1]
        B = (e.sum() - e) / n
        alpha = (risk_scale * inv_mu_alpha + coupling * B / m.sigma) / c
        beta = risk_scale * inv_mu_beta / c
        return np.column_stack([alpha, beta])

    return respond


def mean_loading(pop: Population, x: np.ndarray) -> float:
    p = pop.arrays()
    return float(np.mean(pop.market.sigma * x[:, 0] + p["sigma_k"] * x[:, 1]))


def _init_array(pop: Population, init) -> np.ndarray:
    if init is None:
        return np.zeros((pop.n, 2))
    x = np.array([[s.alpha, s.beta] for s in init], dtype=float)
    if x.shape != (pop.n, 2):
        raise ValueError(f"expected {pop.n} initial strategies, got {len(init)}")
    return x


def fixed_point_exp(
    pop: Population,
    init: Sequence[ConstantStrategy] | None = None,
    tol: float = fixedpoint.DEFAULT_TOL,
    max_iter: int = fixedpoint.DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    """Equilibrium by synchronous best-response iteration (zero start by default)."""
    _require(pop, Criterion.EXP)
    p = pop.arrays()
    delta, theta = p["risk_aversion"], p["theta"]
    respond = response_map(pop, delta, theta, 1.0 - theta / pop.n + delta)
    return fixedpoint.iterate(respond, _init_array(pop, init),
                              lambda x: mean_loading(pop, x), tol, max_iter)
