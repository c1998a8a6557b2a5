"""Mean-field equilibria over a finite type distribution and the n -> infinity study."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import exponential, fixedpoint, meanvariance
from .exponential import solve_normal
from .fixedpoint import DEFAULT_MAX_ITER, DEFAULT_TOL
from .market import (
    ConstantStrategy,
    Criterion,
    ManagerType,
    MarketParams,
    Population,
    exposure,
)


@dataclass(frozen=True)
class TypeDistribution:
    """Finite type distribution; weights are normalized on construction."""

    atoms: tuple[tuple[ManagerType, float], ...]

    def __post_init__(self) -> None:
        atoms = tuple((m, float(w)) for m, w in self.atoms)
        if not atoms:
            raise ValueError("type distribution needs at least one atom")
        for m, w in atoms:
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"atom weights must be positive, got {w!r}")
            if m.theta >= 1:
                raise ValueError(f"mean-field types need theta < 1, got {m.theta!r}")
        total = math.fsum(w for _, w in atoms)
        object.__setattr__(self, "atoms", tuple((m, w / total) for m, w in atoms))

    @classmethod
    def point_mass(cls, mgr: ManagerType) -> "TypeDistribution":
        return cls(((mgr, 1.0),))

    @property
    def types(self) -> list[ManagerType]:
        return [m for m, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def expect(self, f) -> float:
        return math.fsum(w * f(m) for m, w in self.atoms)

    def sample(self, n: int, rng: np.random.Generator) -> list[ManagerType]:
        idx = rng.choice(len(self.atoms), size=n, p=self.weights)
        return [self.atoms[i][0] for i in idx]


def aggregate_L(dist: TypeDistribution) -> float:
    num = dist.expect(lambda m: m.risk_aversion / (1 + m.risk_aversion))
    den = 1 - dist.expect(lambda m: m.theta / (1 + m.risk_aversion))
    return num / den


def aggregate_R(dist: TypeDistribution) -> float:
    num = dist.expect(lambda m: 1 / (1 + m.risk_aversion))
    den = 1 - dist.expect(lambda m: m.risk_aversion * m.theta / (1 + m.risk_aversion))
    return num / den


def mfe_strategy_from(criterion: Criterion, mu, sigma, rho, theta, mu_k, sigma_k, nu_k, agg):
    """Mean-field strategy for raw parameters (generic number types)."""
    gap = mu * sigma_k - mu_k * sigma
    if criterion is Criterion.EXP:
        alpha = (rho * sigma_k * gap / ((1 + rho) * sigma**2 * nu_k**2)
                 + (mu * rho + theta * mu * agg) / ((1 + rho) * sigma**2))
        beta = -rho * gap / ((1 + rho) * sigma * nu_k**2)
    else:
        alpha = (sigma_k * gap / ((1 + rho) * sigma**2 * nu_k**2)
                 + (mu + rho * theta * mu * agg) / ((1 + rho) * sigma**2))
        beta = -gap / ((1 + rho) * sigma * nu_k**2)
    return alpha, beta


def _mfe(criterion, mgr, market, agg) -> ConstantStrategy:
    if mgr.theta >= 1:
        raise ValueError("mean-field types need theta < 1")
    a = mgr.asset
    alpha, beta = mfe_strategy_from(criterion, market.mu, market.sigma, mgr.risk_aversion,
                                    mgr.theta, a.mu, a.sigma, a.nu, agg)
    return ConstantStrategy(float(alpha), float(beta))


def mfe_exp(mgr: ManagerType, market: MarketParams, L: float) -> ConstantStrategy:
    """Constant MFE of the exponential-utility game for one type realization."""
    return _mfe(Criterion.EXP, mgr, market, L)


def mfe_mv(mgr: ManagerType, market: MarketParams, R: float) -> ConstantStrategy:
    """Constant time-consistent MFE of the mean-variance game for one type."""
    return _mfe(Criterion.MV, mgr, market, R)


@dataclass(frozen=True)
class MFEResult:
    strategies: tuple[ConstantStrategy, ...]  # one per atom
    aggregate: float                          # L or R
    mean_common: float                        # E[s^T pi]
    mean_drift: float                         # E[drift of R]
    iterations: int = 0
    converged: bool = True


def population_statistics(
    dist: TypeDistribution, market: MarketParams, strategies: Sequence[ConstantStrategy]
) -> tuple[float, float]:
    """Population common loading and log-return drift, ``(E[s^T pi], E[drift])``."""
    if len(strategies) != len(dist.atoms):
        raise ValueError("need one strategy per atom")
    parts_c, parts_d = [], []
    for (m, w), s in zip(dist.atoms, strategies):
        d, c, _ = exposure(s, market, m.asset)
        parts_c.append(w * c)
        parts_d.append(w * d)
    common = math.fsum(parts_c)
    drift = math.fsum(parts_d)
    return common, drift


def mfe(dist: TypeDistribution, market: MarketParams, criterion: Criterion) -> MFEResult:
    """Closed-form MFE for every atom of ``dist``."""
    criterion = Criterion(criterion)
    if criterion is Criterion.EXP:
        agg = aggregate_L(dist)
        strategies = tuple(mfe_exp(m, market, agg) for m in dist.types)
    else:
        agg = aggregate_R(dist)
        strategies = tuple(mfe_mv(m, market, agg) for m in dist.types)
    common, drift = population_statistics(dist, market, strategies)
    return MFEResult(strategies, agg, common, drift)


def best_response_mfg(
    mgr: ManagerType, market: MarketParams, mean_common: float, criterion: Criterion
) -> ConstantStrategy:
    """Representative's optimum against a frozen population common loading.

    Exponential: ``(1 + delta) M pi = delta mu_vec + theta Ebar s``;
    mean-variance: ``(1 + gamma) M pi = mu_vec + gamma theta Ebar s``.
    The population drift only shifts the objective by a constant.
    """
    rho = mgr.risk_aversion
    if Criterion(criterion) is Criterion.EXP:
        a, b = solve_normal(market, mgr.asset, rho / (1 + rho), mgr.theta * mean_common / (1 + rho))
    else:
        a, b = solve_normal(market, mgr.asset, 1 / (1 + rho),
                            rho * mgr.theta * mean_common / (1 + rho))
    return ConstantStrategy(float(a), float(b))


def fixed_point_mfg(
    dist: TypeDistribution,
    market: MarketParams,
    criterion: Criterion,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> MFEResult:
    """MFE by best-response iteration against the induced population loading.

    Starts from all-cash strategies; same stopping and damping rules as the
    n-player iteration, so ``iterations`` counts applied updates.
    """
    criterion = Criterion(criterion)
    types = dist.types
    w = dist.weights
    loadings = np.array([[market.sigma, m.asset.sigma] for m in types])

    def mean_common(x: np.ndarray) -> float:
        return math.fsum(w * (loadings * x).sum(axis=1))

    def respond(x: np.ndarray) -> np.ndarray:
        e_bar = mean_common(x)
        return np.array([best_response_mfg(m, market, e_bar, criterion).as_array()
                         for m in types])

    res = fixedpoint.iterate(respond, np.zeros((len(types), 2)), mean_common, tol, max_iter)
    common, drift = population_statistics(dist, market, res.strategies)
    agg = common * market.sigma / market.mu
    return MFEResult(res.strategies, agg, common, drift, res.iterations, res.converged)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    alpha_distance: float   # max_k |alpha_k(n) - alpha_inf(type_k)|
    beta_distance: float
    distance: float         # max of the two
    aggregate_gap: float    # |D_n - L mu/sigma| or |K_n - R mu/sigma|


def _stream(seed: int, n: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))


def convergence_study(
    dist: TypeDistribution,
    market: MarketParams,
    sizes: Iterable[int],
    seed: int = 0,
    criterion: Criterion = Criterion.EXP,
) -> list[ConvergenceRow]:
    """Distance between sampled n-player equilibria and the per-type MFE.

    For each ``n`` the types are drawn i.i.d. from ``dist`` with a stream
    derived from ``(seed, n)``, so rows do not depend on the order of
    ``sizes``.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("sizes must be nonempty")
    criterion = Criterion(criterion)
    limit = mfe(dist, market, criterion)
    by_type = {id(m): s for m, s in zip(dist.types, limit.strategies)}
    target = limit.aggregate * market.mu / market.sigma
    solve = exponential.equilibrium_exp if criterion is Criterion.EXP else meanvariance.equilibrium_mv
    rows = []
    for n in sizes:
        if n < 1:
            raise ValueError(f"population size must be positive, got {n}")
        managers = dist.sample(n, _stream(seed, n))
        eq = solve(Population(market, tuple(managers), criterion))
        inf = np.array([[by_type[id(m)].alpha, by_type[id(m)].beta] for m in managers])
        diff = np.abs(eq.as_array() - inf)
        a_d, b_d = float(diff[:, 0].max()), float(diff[:, 1].max())
        rows.append(ConvergenceRow(n, a_d, b_d, max(a_d, b_d), abs(eq.aggregate - target)))
    return rows
