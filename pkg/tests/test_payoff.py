import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fundgames import exponential, meanvariance
from fundgames.market import ConstantStrategy, Criterion, GaussianLaw, ManagerType, Population
from fundgames.payoff import (
    GridSpec,
    deviation_scan,
    exp_payoff,
    mv_payoff,
    payoff,
)

from helpers import ASSET, MARKET, MODERATE, no_competition, populations, s1_population, zeros


def test_exp_payoff_examples():
    assert exp_payoff(GaussianLaw(0, 0), 1.0) == -1.0
    assert exp_payoff(GaussianLaw(0.27, 0), 1.0) == pytest.approx(-0.763379, abs=1e-6)


def test_exp_payoff_s1_law():
    law = GaussianLaw(0.254898, 0.133787)
    value = exp_payoff(law, 1.0)
    assert value == pytest.approx(-math.exp(-0.254898 + 0.066893), abs=1e-6)
    assert value == pytest.approx(-0.828611, abs=1e-6)


def test_mv_payoff_examples():
    assert mv_payoff(GaussianLaw(0, 0), 1.0) == 0.0
    assert mv_payoff(GaussianLaw(0.395, 0.25), 1.0) == pytest.approx(0.27)
    assert mv_payoff(GaussianLaw(0.395, 0.25), 1e-12) == pytest.approx(0.395)


def test_payoff_rejects_nonpositive_parameter():
    with pytest.raises(ValueError):
        exp_payoff(GaussianLaw(0, 1), 0.0)
    with pytest.raises(ValueError):
        mv_payoff(GaussianLaw(0, 1), -1.0)


@given(st.floats(-3, 3), st.floats(0, 3), st.floats(0.01, 1), st.floats(0.2, 10),
       st.sampled_from(list(Criterion)))
def test_payoff_monotone(m, v, dm, rho, criterion):
    base = payoff(GaussianLaw(m, v), criterion, rho)
    assert payoff(GaussianLaw(m + dm, v), criterion, rho) > base
    assert payoff(GaussianLaw(m, v + dm), criterion, rho) < base


def test_exp_payoff_against_samples():
    rng = np.random.default_rng(11)
    law = GaussianLaw(0.254898, 0.133787)
    z = law.mean + law.std * rng.standard_normal(10**5)
    u = -np.exp(-z)
    assert abs(u.mean() - exp_payoff(law, 1.0)) < 3 * u.std() / math.sqrt(z.size)


@pytest.mark.parametrize("criterion", list(Criterion))
def test_s1_equilibrium_has_no_profitable_deviation(criterion):
    pop = s1_population(criterion)
    solve = exponential.equilibrium_exp if criterion is Criterion.EXP else meanvariance.equilibrium_mv
    eq = solve(pop).strategies
    for k in range(2):
        assert deviation_scan(pop, eq, k).improvement <= 1e-9


@pytest.mark.parametrize("criterion", list(Criterion))
def test_cash_is_improvable_without_competition(criterion):
    mgr = ManagerType(1.0, 0.0, ASSET)
    pop = Population(MARKET, (mgr,), criterion)
    r = deviation_scan(pop, zeros(1), 0)
    assert r.improvement > 0 and r.polished
    assert r.best_deviation.as_array() == pytest.approx(no_competition(MARKET, mgr, criterion),
                                                        abs=1e-8)


def test_single_point_grid_has_no_gain():
    pop = s1_population()
    s = ConstantStrategy(0.3, 0.1)
    r = deviation_scan(pop, [s, s], 0, GridSpec.single(s))
    assert r.improvement == 0.0 and r.best_deviation == s


def test_empty_grid_rejected():
    pop = s1_population()
    with pytest.raises(ValueError):
        deviation_scan(pop, zeros(2), 0, GridSpec(1, 0, 0, 1, 0.1))
    with pytest.raises(ValueError):
        deviation_scan(pop, zeros(2), 0, GridSpec(0, 1, 0, 1, 0.0))


def test_ties_go_to_smallest_alpha_then_beta():
    # n = 1, theta = 1: every strategy has the same (zero) excess return
    pop = Population(MARKET, (ManagerType(1.0, 1.0, ASSET),))
    r = deviation_scan(pop, zeros(1), 0, GridSpec(-1, 1, -2, 2, 0.5))
    assert r.best_deviation == ConstantStrategy(-1.0, -2.0) and r.improvement == 0.0


@given(populations(Criterion.EXP, sizes=(1, 2, 3), ranges=MODERATE))
def test_polished_maximizer_is_the_best_response(pop):
    rng = np.random.default_rng(4)
    strategies = [ConstantStrategy(*rng.uniform(-1, 1, 2)) for _ in range(pop.n)]
    br = exponential.best_response_exp(pop, strategies[1:], 0)
    if not GridSpec().contains(br.alpha, br.beta):
        return
    r = deviation_scan(pop, strategies, 0)
    assert r.polished
    assert r.best_deviation.as_array() == pytest.approx(br.as_array(), abs=1e-8)


def test_deviation_scan_arguments():
    with pytest.raises(ValueError):
        deviation_scan(s1_population(), zeros(1), 0)
    with pytest.raises(IndexError):
        deviation_scan(s1_population(), zeros(2), 3)
