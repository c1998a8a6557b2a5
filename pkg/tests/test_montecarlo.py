import math

import numpy as np
import pytest

from fundgames import exponential
from fundgames.market import (
    ConstantStrategy,
    Criterion,
    ManagerType,
    Population,
    PrivateAsset,
    excess_law_nplayer,
    exposure,
    return_law,
)
from fundgames.montecarlo import (
    CHUNK,
    SimConfig,
    mc_payoff,
    moment_errors,
    simulate,
    weak_error,
    write_paths,
)
from fundgames.payoff import exp_payoff

from helpers import ASSET, MARKET, s1_population, zeros


@pytest.fixture(scope="module")
def s1():
    pop = s1_population()
    return pop, exponential.equilibrium_exp(pop).strategies


@pytest.fixture(scope="module")
def s1_run(s1):
    pop, eq = s1
    return simulate(pop, eq, SimConfig(paths=10**5, seed=42))


@pytest.mark.parametrize("scheme", ["exact", "euler"])
def test_cash_earns_the_bond_rate(scheme):
    pop = s1_population()
    res = simulate(pop, zeros(2), SimConfig(paths=100, steps=8, seed=1, scheme=scheme,
                                            horizon=2.0))
    assert np.all(res.terminal == MARKET.kappa * 2.0)


def test_s1_excess_mean(s1, s1_run):
    pop, eq = s1
    z = s1_run.excess(0)
    assert abs(z.mean() - 0.254898) < 3 * math.sqrt(0.133787 / z.size)


def test_return_moments_within_four_standard_errors(s1, s1_run):
    pop, eq = s1
    for k in range(2):
        law = return_law(eq[k], MARKET, ASSET)
        m, se_m, v, se_v = moment_errors(s1_run.terminal[:, k])
        assert abs(m - law.mean) < 4 * se_m
        assert abs(v - law.variance) < 4 * se_v


def test_correlation_structure():
    a2 = PrivateAsset(1.0, -1.0, 0.5)
    pop = Population(MARKET, (ManagerType(1, 0.5, ASSET), ManagerType(2, 0.3, a2)))
    strategies = [ConstantStrategy(0.4, 0.3), ConstantStrategy(0.8, 0.6)]
    res = simulate(pop, strategies, SimConfig(paths=10**5, seed=9))
    (_, c1, d1), (_, c2, d2) = (exposure(s, MARKET, m.asset)
                                for s, m in zip(strategies, pop.managers))
    want = c1 * c2 / math.sqrt((c1**2 + d1**2) * (c2**2 + d2**2))
    got = np.corrcoef(res.terminal.T)[0, 1]
    assert abs(got - want) < 0.01


def test_deterministic_and_worker_independent(s1):
    pop, eq = s1
    cfg = SimConfig(paths=3 * CHUNK + 17, seed=123)
    a = simulate(pop, eq, cfg)
    b = simulate(pop, eq, cfg)
    c = simulate(pop, eq, SimConfig(paths=3 * CHUNK + 17, seed=123, workers=4))
    assert np.array_equal(a.terminal, b.terminal)
    assert np.array_equal(a.terminal, c.terminal)
    assert np.array_equal(a.estimates, c.estimates)
    d = simulate(pop, eq, SimConfig(paths=3 * CHUNK + 17, seed=124))
    assert not np.array_equal(a.terminal, d.terminal)


def test_prefix_stability(s1):
    # the first chunk of a longer run is the shorter run
    pop, eq = s1
    short = simulate(pop, eq, SimConfig(paths=CHUNK, seed=5))
    long = simulate(pop, eq, SimConfig(paths=2 * CHUNK, seed=5))
    assert np.array_equal(short.terminal, long.terminal[:CHUNK])


def test_exp_payoff_estimate(s1, s1_run):
    pop, eq = s1
    est, se = s1_run.estimates[0], s1_run.std_errors[0]
    analytic = exp_payoff(excess_law_nplayer(pop, eq, 0), 1.0)
    assert abs(est - analytic) < 3 * se


def test_mv_estimate_at_unit_risk_aversion(s1_run):
    est, se = mc_payoff(s1_run, 0, Criterion.MV, 1.0, 0.5)
    assert abs(est - 0.188005) < 3 * se


def test_self_benchmarked_cash_manager():
    pop = Population(MARKET, (ManagerType(1.0, 1.0, ASSET),))
    res = simulate(pop, zeros(1), SimConfig(paths=50, seed=0))
    assert res.estimates[0] == -1.0 and res.std_errors[0] == 0.0


def test_mv_needs_two_paths():
    pop = s1_population(Criterion.MV)
    res = simulate(pop, zeros(2), SimConfig(paths=1))
    assert math.isnan(res.estimates[0])
    with pytest.raises(ValueError):
        mc_payoff(res, 0, Criterion.MV, 1.0, 0.5)
    with pytest.raises(IndexError):
        mc_payoff(res, 2, Criterion.EXP, 1.0, 0.5)


def test_standard_errors_nonnegative_and_finite(s1_run):
    assert np.all(s1_run.std_errors >= 0) and np.all(np.isfinite(s1_run.terminal))


def test_euler_weak_error_shrinks(s1):
    pop, eq = s1
    errs = [weak_error(simulate(pop, eq, SimConfig(paths=8192, steps=s, seed=3,
                                                   scheme="euler")), 0)
            for s in (16, 64, 256)]
    assert errs[0] > errs[1] > errs[2]


def test_euler_coupling_reference_is_exact_law(s1):
    pop, eq = s1
    res = simulate(pop, eq, SimConfig(paths=20000, steps=64, seed=8, scheme="euler"))
    law = return_law(eq[0], MARKET, ASSET)
    m, se_m, _, _ = moment_errors(res.coupled_exact[:, 0])
    assert abs(m - law.mean) < 4 * se_m
    with pytest.raises(ValueError):
        weak_error(simulate(pop, eq, SimConfig(paths=10)), 0)


def test_euler_ruin_is_reported():
    pop = s1_population()
    big = [ConstantStrategy(50.0, 0.0)] * 2
    with pytest.raises(FloatingPointError):
        simulate(pop, big, SimConfig(paths=1000, steps=1, scheme="euler"))


@pytest.mark.parametrize("kwargs", [
    dict(steps=0), dict(paths=0), dict(seed=-1), dict(seed=2**64), dict(scheme="milstein"),
    dict(horizon=0.0), dict(workers=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_length_mismatch():
    with pytest.raises(ValueError):
        simulate(s1_population(), zeros(1), SimConfig(paths=10))


def test_write_paths_round_trip(tmp_path, s1):
    pop, eq = s1
    res = simulate(pop, eq, SimConfig(paths=37, seed=2))
    write_paths(res, tmp_path / "p.csv")
    back = np.loadtxt(tmp_path / "p.csv", delimiter=",")
    assert np.array_equal(back, res.terminal)
    write_paths(res, tmp_path / "p.bin", fmt="bin")
    raw = np.fromfile(tmp_path / "p.bin", dtype="<f8").reshape(37, 2)
    assert np.array_equal(raw, res.terminal)
    with pytest.raises(ValueError):
        write_paths(res, tmp_path / "p.x", fmt="xml")
