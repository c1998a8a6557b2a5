"""Market model, manager types and the Gaussian laws of constant-strategy returns.

Every manager invests in a risk-free bond (rate ``kappa``), a public risky asset
driven by a common Brownian motion ``B`` and one private asset loaded on ``B``
and on an idiosyncratic Brownian motion ``W^k``.  With constant allocation
fractions the log-return ``R_t`` is an arithmetic Brownian motion, so every
quantity of interest at the horizon is Gaussian and known in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class Criterion(str, enum.Enum):
    """Preference of the managers over the excess log-return."""

    EXP = "exp"  # exponential utility, risk tolerance delta
    MV = "mv"    # time-consistent mean-variance, risk aversion gamma


def _check_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate and the public risky asset (excess drift, volatility)."""

    kappa: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _check_positive("kappa", self.kappa)
        _check_positive("mu", self.mu)
        _check_positive("sigma", self.sigma)

    @property
    def sharpe(self) -> float:
        return self.mu / self.sigma


@dataclass(frozen=True)
class PrivateAsset:
    """Manager-specific asset: excess drift, common-shock loading, own volatility."""

    mu: float
    sigma: float
    nu: float

    def __post_init__(self) -> None:
        _check_positive("private mu", self.mu)
        _check_positive("private nu", self.nu)
        if not math.isfinite(self.sigma):
            raise ValueError(f"private sigma must be finite, got {self.sigma!r}")

    @property
    def correlation(self) -> float:
        """Instantaneous correlation with the public risky asset."""
        return self.sigma / math.hypot(self.sigma, self.nu)


@dataclass(frozen=True)
class ManagerType:
    """One fund manager.

    ``risk_aversion`` is the exponential-utility parameter delta (utility
    ``-exp(-z / delta)``) or the mean-variance coefficient gamma, depending on
    the game being played.
    """

    risk_aversion: float
    theta: float
    asset: PrivateAsset

    def __post_init__(self) -> None:
        _check_positive("risk_aversion", self.risk_aversion)
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {self.theta!r}")


@dataclass(frozen=True)
class ConstantStrategy:
    """Fractions of wealth held in the public asset (alpha) and private asset (beta)."""

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError(f"strategy must be finite, got ({self.alpha}, {self.beta})")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=float)


@dataclass(frozen=True)
class GaussianLaw:
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if not self.variance >= 0:
            raise ValueError(f"variance must be nonnegative, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class Population:
    """Market plus an ordered list of managers playing one of the two games."""

    market: MarketParams
    managers: tuple[ManagerType, ...]
    criterion: Criterion = Criterion.EXP

    def __post_init__(self) -> None:
        object.__setattr__(self, "managers", tuple(self.managers))
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if len(self.managers) < 1:
            raise ValueError("a population needs at least one manager")
        if self.criterion is Criterion.EXP:
            denom = 1.0 - sum(m.theta / (1.0 + m.risk_aversion) for m in self.managers) / self.n
        else:
            denom = 1.0 - sum(
                m.risk_aversion * m.theta / (1.0 + m.risk_aversion) for m in self.managers
            ) / self.n
        assert denom > 0, "aggregate denominator must be positive"

    @property
    def n(self) -> int:
        return len(self.managers)

    def arrays(self) -> dict[str, np.ndarray]:
        """Per-manager parameters as float arrays keyed by name."""
        ms = self.managers
        return {
            "risk_aversion": np.array([m.risk_aversion for m in ms]),
            "theta": np.array([m.theta for m in ms]),
            "mu_k": np.array([m.asset.mu for m in ms]),
            "sigma_k": np.array([m.asset.sigma for m in ms]),
            "nu_k": np.array([m.asset.nu for m in ms]),
        }

    def replace_manager(self, k: int, manager: ManagerType) -> "Population":
        managers = list(self.managers)
        managers[k] = manager
        return Population(self.market, tuple(managers), self.criterion)


def exposure_coefficients(alpha, beta, market: MarketParams, asset: PrivateAsset):
    """Coefficients of ``dR = drift dt + common dB + idio dW``.

    Works elementwise on numpy arrays of ``alpha`` and ``beta``.
    """
    common = market.sigma * alpha + asset.sigma * beta
    idio = asset.nu * beta
    drift = (
        market.kappa
        + market.mu * alpha
        + asset.mu * beta
        - 0.5 * common * common
        - 0.5 * idio * idio
    )
    return drift, common, idio


def exposure(
    strategy: ConstantStrategy, market: MarketParams, asset: PrivateAsset
) -> tuple[float, float, float]:
    """(drift, common, idio) of the log-return under a constant strategy."""
    drift, common, idio = exposure_coefficients(strategy.alpha, strategy.beta, market, asset)
    return float(drift), float(common), float(idio)


def _check_horizon(horizon: float) -> None:
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be positive, got {horizon!r}")


def return_law(
    strategy: ConstantStrategy,
    market: MarketParams,
    asset: PrivateAsset,
    horizon: float = 1.0,
) -> GaussianLaw:
    """Law of the terminal log-return ``R_T``."""
    _check_horizon(horizon)
    drift, common, idio = exposure(strategy, market, asset)
    return GaussianLaw(drift * horizon, (common**2 + idio**2) * horizon)


def competition_weights(theta_k: float, n: int, k: int) -> np.ndarray:
    """Weights ``w_i`` with ``Z = sum_i w_i R^i`` for manager ``k``."""
    w = np.full(n, -theta_k / n)
    w[k] = 1.0 - theta_k / n
    return w


def excess_moments(
    pop: Population,
    strategies: Sequence[ConstantStrategy],
    k: int,
    alpha,
    beta,
    horizon: float = 1.0,
):
    """Mean and variance of manager ``k``'s excess log-return when ``k`` plays
    ``(alpha, beta)`` (scalars or arrays) and everyone else plays ``strategies``.

    The common shock is shared, so common loadings add before squaring; the
    idiosyncratic shocks are independent, so their variances add.
    """
    _check_horizon(horizon)
    n = pop.n
    theta = pop.managers[k].theta
    w_own = 1.0 - theta / n
    w_other = -theta / n
    drift_others = 0.0
    common_others = 0.0
    idio2_others = 0.0
    for i, (mgr, s) in enumerate(zip(pop.managers, strategies)):
        if i == k:
            continue
        d, c, e = exposure(s, pop.market, mgr.asset)
        drift_others += d
        common_others += c
        idio2_others += e * e
    d, c, e = exposure_coefficients(alpha, beta, pop.market, pop.managers[k].asset)
    mean = horizon * (w_own * d + w_other * drift_others)
    common = w_own * c + w_other * common_others
    var = horizon * (common * common + (w_own * e) ** 2 + w_other**2 * idio2_others)
    return mean, var


def excess_law_nplayer(
    pop: Population,
    strategies: Sequence[ConstantStrategy],
    k: int,
    horizon: float = 1.0,
) -> GaussianLaw:
    """Law of ``Z_T = R^k_T - (theta_k / n) sum_i R^i_T`` (``k`` is 0-based)."""
    if len(strategies) != pop.n:
        raise ValueError(f"expected {pop.n} strategies, got {len(strategies)}")
    if not 0 <= k < pop.n:
        raise IndexError(f"manager index {k} out of range for n={pop.n}")
    own = strategies[k]
    mean, var = excess_moments(pop, strategies, k, own.alpha, own.beta, horizon)
    return GaussianLaw(float(mean), max(float(var), 0.0))


def excess_moments_mfg(
    mgr: ManagerType,
    market: MarketParams,
    alpha,
    beta,
    mean_common: float,
    mean_drift: float,
    horizon: float = 1.0,
):
    """Array-capable version of :func:`excess_law_mfg`."""
    _check_horizon(horizon)
    d, c, e = exposure_coefficients(alpha, beta, market, mgr.asset)
    common = c - mgr.theta * mean_common
    return horizon * (d - mgr.theta * mean_drift), horizon * (common * common + e * e)


def excess_law_mfg(
    mgr: ManagerType,
    market: MarketParams,
    strategy: ConstantStrategy,
    mean_common: float,
    mean_drift: float,
    horizon: float = 1.0,
) -> GaussianLaw:
    """Law of ``Z_T = R_T - theta * Rbar_T`` for the representative manager.

    ``Rbar`` is the population log-return conditional on the common noise: it
    has drift ``mean_drift`` and loading ``mean_common`` on ``B`` and no
    idiosyncratic part.
    """
    mean, var = excess_moments_mfg(
        mgr, market, strategy.alpha, strategy.beta, mean_common, mean_drift, horizon
    )
    return GaussianLaw(float(mean), max(float(var), 0.0))
