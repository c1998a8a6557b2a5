"""Shared fixtures, random draws and independent oracles for the test suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from fundgames.market import (
    ConstantStrategy,
    Criterion,
    ManagerType,
    MarketParams,
    Population,
    PrivateAsset,
    excess_moments,
)

MARKET = MarketParams(kappa=0.02, mu=1.0, sigma=1.0)
ASSET = PrivateAsset(2.0, 3.0, 3.0)
S1_ALPHA, S1_BETA = 0.857143, -0.063492

ACCEPTANCE_LINES: list[str] = []  # filled by test_acceptance, printed in the summary


def s1_population(criterion=Criterion.EXP, n=2, theta=0.5, rho=1.0) -> Population:
    """Homogeneous two-manager setting used throughout (delta or gamma = 1)."""
    return Population(MARKET, (ManagerType(rho, theta, ASSET),) * n, criterion)


# --- random draws -----------------------------------------------------------------

WIDE = dict(rho=(0.1, 20.0), theta=(0.0, 1.0), mu_k=(1e-3, 5.0), sigma_k=(-5.0, 5.0),
            nu_k=(0.1, 5.0), mu=(0.1, 2.0), sigma=(0.2, 2.0))
# keeps exp payoffs within a few orders of magnitude so payoff gains are resolvable
MODERATE = dict(rho=(0.5, 5.0), theta=(0.0, 1.0), mu_k=(0.1, 2.0), sigma_k=(-2.0, 2.0),
                nu_k=(0.5, 3.0), mu=(0.2, 1.0), sigma=(0.5, 1.5))


def random_market(rng: np.random.Generator, ranges=WIDE) -> MarketParams:
    return MarketParams(rng.uniform(0.01, 0.05), rng.uniform(*ranges["mu"]),
                        rng.uniform(*ranges["sigma"]))


def random_manager(rng: np.random.Generator, ranges=WIDE, theta_max=1.0) -> ManagerType:
    lo, hi = ranges["theta"]
    asset = PrivateAsset(rng.uniform(*ranges["mu_k"]), rng.uniform(*ranges["sigma_k"]),
                         rng.uniform(*ranges["nu_k"]))
    return ManagerType(rng.uniform(*ranges["rho"]), rng.uniform(lo, min(hi, theta_max)), asset)


def random_population(rng, n, criterion, ranges=WIDE) -> Population:
    managers = tuple(random_manager(rng, ranges) for _ in range(n))
    return Population(random_market(rng, ranges), managers, criterion)


def _floats(lo, hi):
    return st.floats(lo, hi, allow_nan=False, allow_infinity=False)


@st.composite
def managers(draw, ranges=WIDE, theta_max=1.0):
    asset = PrivateAsset(draw(_floats(*ranges["mu_k"])), draw(_floats(*ranges["sigma_k"])),
                         draw(_floats(*ranges["nu_k"])))
    return ManagerType(draw(_floats(*ranges["rho"])),
                       draw(_floats(ranges["theta"][0], min(ranges["theta"][1], theta_max))),
                       asset)


@st.composite
def markets(draw, ranges=WIDE):
    return MarketParams(draw(_floats(0.01, 0.05)), draw(_floats(*ranges["mu"])),
                        draw(_floats(*ranges["sigma"])))


@st.composite
def populations(draw, criterion, sizes=(1, 2, 5), ranges=WIDE):
    n = draw(st.sampled_from(sizes))
    ms = tuple(draw(managers(ranges)) for _ in range(n))
    return Population(draw(markets(ranges)), ms, criterion)


# --- oracles ------------------------------------------------------------------------

def quadratic_argmax(score, h=1.0):
    """Maximizer of a concave quadratic in two variables.

    Gradient and Hessian come from central differences around the origin,
    exact for quadratics up to rounding, then a dense 2x2 solve.
    """
    f = lambda a, b: float(score(a, b))
    f0 = f(0.0, 0.0)
    g = np.array([(f(h, 0) - f(-h, 0)) / (2 * h), (f(0, h) - f(0, -h)) / (2 * h)])
    haa = (f(h, 0) - 2 * f0 + f(-h, 0)) / h**2
    hbb = (f(0, h) - 2 * f0 + f(0, -h)) / h**2
    hab = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h**2)
    return np.linalg.solve(np.array([[haa, hab], [hab, hbb]]), -g)


def certainty_equivalent_argmax(pop: Population, strategies, k: int) -> np.ndarray:
    """Best response of manager ``k`` from the excess-return moments alone.

    Exponential: maximize ``mean - var / (2 delta)``; mean-variance: maximize
    ``mean - gamma / 2 var``.  Uses only the market-level law, not the
    best-response code.
    """
    rho = pop.managers[k].risk_aversion
    lam = 1 / (2 * rho) if pop.criterion is Criterion.EXP else rho / 2

    def score(a, b):
        m, v = excess_moments(pop, strategies, k, a, b)
        return m - lam * v

    return quadratic_argmax(score)


def no_competition(market: MarketParams, mgr: ManagerType, criterion) -> np.ndarray:
    """Optimum without benchmarking: ``scale * M^{-1} mu_vec`` by a dense solve."""
    s = np.array([market.sigma, mgr.asset.sigma])
    v = np.array([0.0, mgr.asset.nu])
    M = np.outer(s, s) + np.outer(v, v)
    rho = mgr.risk_aversion
    scale = rho / (1 + rho) if Criterion(criterion) is Criterion.EXP else 1 / (1 + rho)
    return scale * np.linalg.solve(M, np.array([market.mu, mgr.asset.mu]))


def no_competition_exact(mu, sigma, rho, mu_k, sigma_k, nu_k, criterion):
    """Same optimum in exact rational arithmetic via Cramer's rule."""
    a11, a12, a22 = sigma**2, sigma * sigma_k, sigma_k**2 + nu_k**2
    det = a11 * a22 - a12 * a12
    x = (a22 * mu - a12 * mu_k) / det
    y = (a11 * mu_k - a12 * mu) / det
    scale = rho / (1 + rho) if Criterion(criterion) is Criterion.EXP else 1 / (1 + rho)
    return scale * x, scale * y


def frac(*xs):
    return tuple(Fraction(x) for x in xs)


def zeros(n):
    return tuple(ConstantStrategy(0.0, 0.0) for _ in range(n))
