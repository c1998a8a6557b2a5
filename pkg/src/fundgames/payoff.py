"""Closed-form payoffs and grid-based no-profitable-deviation checks.

Deviations are constant strategies.  For the exponential game the optimum over
all admissible controls is constant (the value function of the best-response
problem is exponential-affine), and for the mean-variance game the short-horizon
deviation gain of a constant deviation is ``h * [local(u) - local(pi)]`` with the
local objective equal to ``(mean - gamma/2 var) / T`` of the excess log-return,
so scanning constant strategies checks both equilibrium definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .market import (
    ConstantStrategy,
    Criterion,
    GaussianLaw,
    ManagerType,
    MarketParams,
    Population,
    excess_moments,
    excess_moments_mfg,
)


def exp_payoff(law: GaussianLaw, delta: float) -> float:
    """``E[-exp(-Z/delta)]`` for Gaussian ``Z``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return -math.exp(-law.mean / delta + law.variance / (2.0 * delta**2))


def mv_payoff(law: GaussianLaw, gamma: float) -> float:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return law.mean - 0.5 * gamma * law.variance


def payoff(law: GaussianLaw, criterion: Criterion, risk_aversion: float) -> float:
    if Criterion(criterion) is Criterion.EXP:
        return exp_payoff(law, risk_aversion)
    return mv_payoff(law, risk_aversion)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (alpha, beta) grid with a common step."""

    alpha_min: float = -10.0
    alpha_max: float = 10.0
    beta_min: float = -10.0
    beta_max: float = 10.0
    step: float = 0.05

    @classmethod
    def square(cls, bound: float, step: float) -> "GridSpec":
        return cls(-bound, bound, -bound, bound, step)

    @classmethod
    def single(cls, strategy: ConstantStrategy) -> "GridSpec":
        return cls(strategy.alpha, strategy.alpha, strategy.beta, strategy.beta, 1.0)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError("grid step must be positive")
        if self.alpha_max < self.alpha_min or self.beta_max < self.beta_min:
            raise ValueError("empty deviation grid")
        return _axis(self.alpha_min, self.alpha_max, self.step), _axis(
            self.beta_min, self.beta_max, self.step
        )

    def contains(self, alpha: float, beta: float) -> bool:
        return (self.alpha_min <= alpha <= self.alpha_max
                and self.beta_min <= beta <= self.beta_max)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


@dataclass(frozen=True)
class DeviationResult:
    best_deviation: ConstantStrategy
    improvement: float         # payoff(best) - payoff(candidate), payoff units
    candidate_payoff: float
    polished: bool             # True when the quadratic polish beat the grid


ScoreFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _polish(score: ScoreFn, a0: float, b0: float, h: float):
    """One Newton step on the (exactly quadratic) score from 9-point differences."""
    da = np.array([-h, 0.0, h])
    A, Bm = np.meshgrid(a0 + da, b0 + da, indexing="ij")
    f = score(A, Bm)
    g = np.array([(f[2, 1] - f[0, 1]) / (2 * h), (f[1, 2] - f[1, 0]) / (2 * h)])
    haa = (f[2, 1] - 2 * f[1, 1] + f[0, 1]) / h**2
    hbb = (f[1, 2] - 2 * f[1, 1] + f[1, 0]) / h**2
    hab = (f[2, 2] - f[2, 0] - f[0, 2] + f[0, 0]) / (4 * h**2)
    hess = np.array([[haa, hab], [hab, hbb]])
    if not (haa < 0 and np.linalg.det(hess) > 0):
        return None
    da_, db_ = np.linalg.solve(hess, -g)
    return a0 + da_, b0 + db_


def _scan(score: ScoreFn, candidate: ConstantStrategy, grid: GridSpec, polish: bool):
    alphas, betas = grid.axes()
    A, Bm = np.meshgrid(alphas, betas, indexing="ij")
    s_cand = float(score(np.float64(candidate.alpha), np.float64(candidate.beta)))
    s_grid = score(A, Bm)
    # first maximum in row-major order = lexicographically smallest (alpha, beta)
    i = int(np.argmax(s_grid))
    best = (float(A.flat[i]), float(Bm.flat[i]))
    s_best = float(s_grid.flat[i])
    polished = False
    if polish:
        h = grid.step if A.size > 1 else 0.05
        p = _polish(score, best[0], best[1], h)
        if p is not None and grid.contains(*p):
            s_p = float(score(np.float64(p[0]), np.float64(p[1])))
            if s_p > s_best:
                best, s_best, polished = (float(p[0]), float(p[1])), s_p, True
    return best, s_best, s_cand, polished


def _criterion_score(criterion: Criterion, rho: float, moments):
    """Score monotone in the payoff and quadratic in the strategy.

    Exponential: certainty equivalent ``mean - var / (2 delta)``;
    mean-variance: the payoff itself.
    """
    lam = 1.0 / (2.0 * rho) if criterion is Criterion.EXP else 0.5 * rho

    def score(a, b):
        mean, var = moments(a, b)
        return mean - lam * var

    return score


def _result(criterion: Criterion, rho: float, scanned) -> DeviationResult:
    best, s_best, s_cand, polished = scanned
    if criterion is Criterion.MV:
        return DeviationResult(ConstantStrategy(*best), s_best - s_cand, s_cand, polished)
    # payoff = -exp(-x) with x = CE / delta; the gain is formed without cancellation
    x_cand = s_cand / rho
    gain = math.exp(-x_cand) * -math.expm1(-(s_best - s_cand) / rho)
    return DeviationResult(ConstantStrategy(*best), gain, -math.exp(-x_cand), polished)


def deviation_scan(
    pop: Population,
    strategies: Sequence[ConstantStrategy],
    k: int,
    grid: GridSpec = GridSpec(),
    horizon: float = 1.0,
    polish: bool = True,
) -> DeviationResult:
    """Best unilateral constant deviation of manager ``k`` over ``grid``."""
    if len(strategies) != pop.n:
        raise ValueError(f"expected {pop.n} strategies, got {len(strategies)}")
    if not 0 <= k < pop.n:
        raise IndexError(f"manager index {k} out of range for n={pop.n}")
    rho = pop.managers[k].risk_aversion
    score = _criterion_score(
        pop.criterion, rho, lambda a, b: excess_moments(pop, strategies, k, a, b, horizon)
    )
    return _result(pop.criterion, rho, _scan(score, strategies[k], grid, polish))


def deviation_scan_mfg(
    mgr: ManagerType,
    market: MarketParams,
    strategy: ConstantStrategy,
    mean_common: float,
    mean_drift: float,
    criterion: Criterion,
    grid: GridSpec = GridSpec(),
    horizon: float = 1.0,
    polish: bool = True,
) -> DeviationResult:
    """Best constant deviation of a representative manager against frozen
    population statistics."""
    criterion = Criterion(criterion)
    rho = mgr.risk_aversion
    score = _criterion_score(
        criterion, rho,
        lambda a, b: excess_moments_mfg(mgr, market, a, b, mean_common, mean_drift, horizon),
    )
    return _result(criterion, rho, _scan(score, strategy, grid, polish))
