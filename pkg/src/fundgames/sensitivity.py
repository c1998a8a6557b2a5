"""Comparative statics of the equilibrium strategies.

Analytic partial derivatives for both n-player games and the mean-field limits,
the case taxonomy based on the virtual Sharpe ratio ``mu_k / sigma_k``, a
finite-difference oracle evaluated in exact rational arithmetic, and the
parameter sweeps behind the two-manager figures.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import exponential, meanvariance
from .market import Criterion, ManagerType, MarketParams, Population, PrivateAsset
from .mfg import TypeDistribution, aggregate_L, aggregate_R, mfe_strategy_from

OWN_PARAMS = ("mu", "sigma", "mu_k", "sigma_k", "nu_k", "theta_k", "risk_aversion_k")


class CaseLabel(str, enum.Enum):
    CASE1 = "case1"        # sigma_k > 0, public Sharpe ratio above the virtual one
    CASE2 = "case2"        # sigma_k > 0, virtual Sharpe ratio above the public one
    CASE3 = "case3"        # sigma_k < 0
    BOUNDARY = "boundary"  # sigma_k = 0 or equal ratios


def classify_case(market: MarketParams, asset: PrivateAsset) -> CaseLabel:
    if asset.sigma == 0 or market.mu * asset.sigma == asset.mu * market.sigma:
        return CaseLabel.BOUNDARY
    if asset.sigma < 0:
        return CaseLabel.CASE3
    if market.mu * asset.sigma > asset.mu * market.sigma:
        return CaseLabel.CASE1
    return CaseLabel.CASE2


@dataclass(frozen=True)
class Partials:
    """Partial derivatives of one manager's equilibrium strategy.

    ``alpha``/``beta`` are keyed by :data:`OWN_PARAMS`; the ``*_others`` maps
    give the cross effects on alpha of another manager ``i``'s theta and risk
    aversion (beta does not depend on them).
    """

    alpha: dict[str, float]
    beta: dict[str, float]
    alpha_theta_others: dict[int, float] = field(default_factory=dict)
    alpha_risk_others: dict[int, float] = field(default_factory=dict)


def _own(pop: Population, k: int):
    g = pop.managers[k]
    a = g.asset
    return (pop.market.mu, pop.market.sigma, g.risk_aversion, g.theta, a.mu, a.sigma, a.nu)


def partials_exp(pop: Population, k: int) -> Partials:
    """Closed-form partials of manager ``k``'s exponential-utility equilibrium."""
    if pop.criterion is not Criterion.EXP:
        raise ValueError("partials_exp needs an exponential-utility population")
    mu, sg, d, t, mk, sk, nk = _own(pop, k)
    n = pop.n
    ds = [g.risk_aversion for g in pop.managers]
    ts = [g.theta for g in pop.managers]
    a = sum(x / (1 + x) for x in ds) / n
    b = 1 - sum(y / (1 + x) for x, y in zip(ds, ts)) / n
    p = a / b
    c = 1 + d - t / n
    gap = mk * sg - mu * sk   # sign of beta
    h = -gap                  # mu sk - mk sg
    beta = {
        "mu": -d * sk / (c * sg * nk**2),
        "sigma": d * mu * sk / (c * sg**2 * nk**2),
        "mu_k": d / (c * nk**2),
        "sigma_k": -d * mu / (c * sg * nk**2),
        "nu_k": -2 * d * gap / (c * sg * nk**3),
        "theta_k": d * gap / (n * c**2 * sg * nk**2),
        "risk_aversion_k": (1 - t / n) * gap / (c**2 * sg * nk**2),
    }
    p_d = (b - a * t) / (n * (1 + d) ** 2 * b**2)
    alpha = {
        "mu": d * sk**2 / (c * sg**2 * nk**2) + (d + t * p) / ((1 + d) * sg**2),
        "sigma": (d * (-2 * mu * sk**2 + mk * sk * sg) / (c * sg**3 * nk**2)
                  - 2 * mu * (d + t * p) / ((1 + d) * sg**3)),
        "mu_k": -d * sk / (c * sg * nk**2),
        "sigma_k": d * (2 * mu * sk - mk * sg) / (c * sg**2 * nk**2),
        "nu_k": -2 * d * sk * h / (c * sg**2 * nk**3),
        "theta_k": (d * sk * h / (n * c**2 * sg**2 * nk**2)
                    + mu / ((1 + d) * sg**2) * (p + t * a / (n * (1 + d) * b**2))),
        "risk_aversion_k": (sk * h * (1 - t / n) / (c**2 * sg**2 * nk**2)
                            + mu / sg**2 * (1 - t * p + t * p_d * (1 + d)) / (1 + d) ** 2),
    }
    pre = t * mu / ((1 + d) * sg**2)
    theta_o, risk_o = {}, {}
    for i, (di, ti) in enumerate(zip(ds, ts)):
        if i == k:
            continue
        theta_o[i] = pre * a / (n * (1 + di) * b**2)
        risk_o[i] = pre * (b - a * ti) / (n * (1 + di) ** 2 * b**2)
    return Partials(alpha, beta, theta_o, risk_o)


def partials_mv(pop: Population, k: int) -> Partials:
    """Closed-form partials of manager ``k``'s mean-variance equilibrium."""
    if pop.criterion is not Criterion.MV:
        raise ValueError("partials_mv needs a mean-variance population")
    mu, sg, gm, t, mk, sk, nk = _own(pop, k)
    n = pop.n
    gs = [g.risk_aversion for g in pop.managers]
    ts = [g.theta for g in pop.managers]
    a = sum(1 / (1 + x) for x in gs) / n
    b = 1 - sum(x * y / (1 + x) for x, y in zip(gs, ts)) / n
    q = a / b
    c = 1 + gm - gm * t / n
    gap = mk * sg - mu * sk
    h = -gap
    beta = {
        "mu": -sk / (c * sg * nk**2),
        "sigma": mu * sk / (c * sg**2 * nk**2),
        "mu_k": 1 / (c * nk**2),
        "sigma_k": -mu / (c * sg * nk**2),
        "nu_k": -2 * gap / (c * sg * nk**3),
        "theta_k": gm * gap / (n * c**2 * sg * nk**2),
        "risk_aversion_k": -(1 - t / n) * gap / (c**2 * sg * nk**2),
    }
    q_g = -(b - a * t) / (n * (1 + gm) ** 2 * b**2)
    comp = 1 + gm * t * q
    alpha = {
        "mu": sk**2 / (c * sg**2 * nk**2) + comp / ((1 + gm) * sg**2),
        "sigma": ((-2 * mu * sk**2 + mk * sk * sg) / (c * sg**3 * nk**2)
                  - 2 * mu * comp / ((1 + gm) * sg**3)),
        "mu_k": -sk / (c * sg * nk**2),
        "sigma_k": (2 * mu * sk - mk * sg) / (c * sg**2 * nk**2),
        "nu_k": -2 * sk * h / (c * sg**2 * nk**3),
        "theta_k": (gm * sk * h / (n * c**2 * sg**2 * nk**2)
                    + mu * gm / ((1 + gm) * sg**2) * (q + t * a * gm / (n * (1 + gm) * b**2))),
        "risk_aversion_k": (-sk * h * (1 - t / n) / (c**2 * sg**2 * nk**2)
                            + mu / sg**2 * (t * q - 1 + gm * t * q_g * (1 + gm)) / (1 + gm) ** 2),
    }
    pre = gm * t * mu / ((1 + gm) * sg**2)
    theta_o, risk_o = {}, {}
    for i, (gi, ti) in enumerate(zip(gs, ts)):
        if i == k:
            continue
        theta_o[i] = pre * a * gi / (n * (1 + gi) * b**2)
        risk_o[i] = -pre * (b - a * ti) / (n * (1 + gi) ** 2 * b**2)
    return Partials(alpha, beta, theta_o, risk_o)


def partials(pop: Population, k: int) -> Partials:
    return partials_exp(pop, k) if pop.criterion is Criterion.EXP else partials_mv(pop, k)


def partials_mfe(
    mgr: ManagerType, market: MarketParams, dist: TypeDistribution, criterion: Criterion
) -> dict[str, float]:
    """Derivatives of the mean-field alpha in the type's own theta and risk aversion.

    The population aggregate (L or R) is held fixed: a single type in a
    continuum does not move it.
    """
    criterion = Criterion(criterion)
    mu, sg = market.mu, market.sigma
    rho, t = mgr.risk_aversion, mgr.theta
    mk, sk, nk = mgr.asset.mu, mgr.asset.sigma, mgr.asset.nu
    h = mu * sk - mk * sg
    private = sk * h / (sg**2 * nk**2)
    if criterion is Criterion.EXP:
        L = aggregate_L(dist)
        return {
            "theta": mu * L / ((1 + rho) * sg**2),
            "risk_aversion": (private + mu * (1 - t * L) / sg**2) / (1 + rho) ** 2,
        }
    R = aggregate_R(dist)
    return {
        "theta": rho * mu * R / ((1 + rho) * sg**2),
        "risk_aversion": -(private + mu * (1 - t * R) / sg**2) / (1 + rho) ** 2,
    }


# --- finite-difference oracle -------------------------------------------------

def _raw(pop: Population) -> dict:
    ms = pop.managers
    return {
        "mu": Fraction(pop.market.mu),
        "sigma": Fraction(pop.market.sigma),
        "rho": [Fraction(m.risk_aversion) for m in ms],
        "theta": [Fraction(m.theta) for m in ms],
        "mu_k": [Fraction(m.asset.mu) for m in ms],
        "sigma_k": [Fraction(m.asset.sigma) for m in ms],
        "nu_k": [Fraction(m.asset.nu) for m in ms],
    }


def _evaluate(criterion: Criterion, raw: dict, k: int):
    mod = exponential if criterion is Criterion.EXP else meanvariance
    agg = mod.aggregate_from(raw["mu"], raw["sigma"], raw["rho"], raw["theta"])
    return mod.strategy_from(raw["mu"], raw["sigma"], raw["rho"][k], raw["theta"][k],
                             raw["mu_k"][k], raw["sigma_k"][k], raw["nu_k"][k],
                             len(raw["rho"]), agg)


def fd_step(x: float, rel: float = 1e-5, floor: float = 1e-7) -> float:
    return max(rel * abs(x), floor)


def _bump(raw: dict, key: str, index: int | None, delta: Fraction) -> dict:
    out = {k: (list(v) if isinstance(v, list) else v) for k, v in raw.items()}
    if index is None:
        out[key] = out[key] + delta
    else:
        out[key][index] = out[key][index] + delta
    return out


_OWN_KEYS = {"mu_k": "mu_k", "sigma_k": "sigma_k", "nu_k": "nu_k",
             "theta_k": "theta", "risk_aversion_k": "rho"}


def finite_difference(
    pop: Population, k: int, param: str, other: int | None = None, rel: float = 1e-5
) -> tuple[float, float]:
    """Central difference of ``(alpha_k, beta_k)`` in one parameter.

    ``param`` is one of :data:`OWN_PARAMS`, or ``"theta"``/``"risk_aversion"``
    together with ``other`` for a rival's parameter.  The closed forms are
    evaluated in exact rational arithmetic, so the only error is the
    ``O(step^2)`` truncation.
    """
    raw = _raw(pop)
    if other is not None:
        key, idx = {"theta": "theta", "risk_aversion": "rho"}[param], other
    elif param in ("mu", "sigma"):
        key, idx = param, None
    else:
        key, idx = _OWN_KEYS[param], k
    x = raw[key] if idx is None else raw[key][idx]
    step = Fraction(fd_step(float(x), rel))
    up = _evaluate(pop.criterion, _bump(raw, key, idx, step), k)
    down = _evaluate(pop.criterion, _bump(raw, key, idx, -step), k)
    return (float((up[0] - down[0]) / (2 * step)), float((up[1] - down[1]) / (2 * step)))


def finite_difference_mfe(
    mgr: ManagerType, market: MarketParams, aggregate: float, criterion: Criterion,
    param: str, rel: float = 1e-5,
) -> float:
    """Central difference of the mean-field alpha in ``theta`` or ``risk_aversion``."""
    criterion = Criterion(criterion)
    vals = {"rho": Fraction(mgr.risk_aversion), "theta": Fraction(mgr.theta)}
    key = {"theta": "theta", "risk_aversion": "rho"}[param]
    step = Fraction(fd_step(float(vals[key]), rel))
    out = []
    for sgn in (1, -1):
        v = dict(vals)
        v[key] += sgn * step
        a, _ = mfe_strategy_from(criterion, Fraction(market.mu), Fraction(market.sigma),
                                 v["rho"], v["theta"], Fraction(mgr.asset.mu),
                                 Fraction(mgr.asset.sigma), Fraction(mgr.asset.nu),
                                 Fraction(aggregate))
        out.append(a)
    return float((out[0] - out[1]) / (2 * step))


def check_partials(pop: Population, k: int, rtol: float = 1e-6, atol: float = 1e-10):
    """Compare every analytic partial of manager ``k`` with the FD oracle.

    Returns a list of ``(name, analytic, numeric, ok)`` tuples.
    """
    an = partials(pop, k)
    rows = []
    for name in OWN_PARAMS:
        fa, fb = finite_difference(pop, k, name)
        for comp, value, num in (("alpha", an.alpha[name], fa), ("beta", an.beta[name], fb)):
            rows.append((f"{comp}/{name}", value, num, abs(value - num) <= rtol * abs(num) + atol))
    for i in an.alpha_theta_others:
        fa, fb = finite_difference(pop, k, "theta", other=i)
        rows.append((f"alpha/theta_{i}", an.alpha_theta_others[i], fa,
                     abs(an.alpha_theta_others[i] - fa) <= rtol * abs(fa) + atol))
        rows.append((f"beta/theta_{i}", 0.0, fb, abs(fb) <= atol))
        fa, fb = finite_difference(pop, k, "risk_aversion", other=i)
        rows.append((f"alpha/risk_aversion_{i}", an.alpha_risk_others[i], fa,
                     abs(an.alpha_risk_others[i] - fa) <= rtol * abs(fa) + atol))
        rows.append((f"beta/risk_aversion_{i}", 0.0, fb, abs(fb) <= atol))
    return rows


# --- figure sweeps --------------------------------------------------------------

FIGURE_MARKET = MarketParams(kappa=0.02, mu=1.0, sigma=1.0)
CASE_ASSETS = {
    (Criterion.EXP, CaseLabel.CASE1): PrivateAsset(2.0, 3.0, 3.0),
    (Criterion.EXP, CaseLabel.CASE3): PrivateAsset(2.0, -1.0, 1.0),
    (Criterion.EXP, CaseLabel.CASE2): PrivateAsset(3.0, 2.0, 2.0),
    (Criterion.MV, CaseLabel.CASE1): PrivateAsset(2.0, 3.0, 3.0),
    (Criterion.MV, CaseLabel.CASE3): PrivateAsset(2.0, -1.0, 1.0),
    (Criterion.MV, CaseLabel.CASE2): PrivateAsset(5.0, 2.0, 2.0),
}


@dataclass(frozen=True)
class FigureSpec:
    """Two-manager sweep of manager 1's alpha.

    ``variable`` ("risk_aversion" or "theta") runs over ``grid``; the other own
    parameter of manager 1 takes each value in ``fixed``.  Manager 2 holds the
    same private asset; alpha of manager 1 does not depend on it.
    """

    name: str
    criterion: Criterion
    case: CaseLabel
    variable: str
    grid: tuple[float, ...]
    fixed: tuple[float, ...]
    rival_theta: float = 0.5
    rival_risk_aversion: float = 5.0
    market: MarketParams = FIGURE_MARKET
    asset: PrivateAsset | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        object.__setattr__(self, "case", CaseLabel(self.case))
        if self.variable not in ("risk_aversion", "theta"):
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.grid or not self.fixed:
            raise ValueError("sweep grid and fixed values must be nonempty")
        if self.asset is None:
            key = (self.criterion, self.case)
            if key not in CASE_ASSETS:
                raise ValueError(f"no default asset for {key}")
            object.__setattr__(self, "asset", CASE_ASSETS[key])


def preset_figure_specs(criterion: Criterion, num: int = 200) -> list[FigureSpec]:
    """The two-manager sweeps: risk aversion in (0, 20) for cases 1 and 3 at
    theta_1 = 0.5; theta in (0, 1) and risk aversion for case 2."""
    criterion = Criterion(criterion)
    risk = tuple(np.linspace(0.1, 20.0, num).tolist())
    theta = tuple(np.linspace(0.01, 0.99, num).tolist())
    tag = criterion.value
    return [
        FigureSpec(f"{tag}_case1_risk", criterion, CaseLabel.CASE1, "risk_aversion", risk, (0.5,)),
        FigureSpec(f"{tag}_case3_risk", criterion, CaseLabel.CASE3, "risk_aversion", risk, (0.5,)),
        FigureSpec(f"{tag}_case2_theta", criterion, CaseLabel.CASE2, "theta", theta,
                   (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)),
        FigureSpec(f"{tag}_case2_risk", criterion, CaseLabel.CASE2, "risk_aversion", risk,
                   (0.1, 0.5, 0.9)),
    ]


def figure_sweep(spec: FigureSpec) -> list[dict[str, float]]:
    """Rows ``risk_aversion_1, theta_1, alpha_1, beta_1`` over the sweep."""
    solve = exponential.equilibrium_exp if spec.criterion is Criterion.EXP else meanvariance.equilibrium_mv
    rival = ManagerType(spec.rival_risk_aversion, spec.rival_theta, spec.asset)
    rows = []
    for fixed in spec.fixed:
        for x in spec.grid:
            rho, th = (x, fixed) if spec.variable == "risk_aversion" else (fixed, x)
            pop = Population(spec.market, (ManagerType(rho, th, spec.asset), rival), spec.criterion)
            s = solve(pop).strategies[0]
            rows.append({"risk_aversion_1": rho, "theta_1": th,
                         "alpha_1": s.alpha, "beta_1": s.beta})
    return rows


def sweep_series(spec: FigureSpec, rows: Sequence[dict]) -> dict[float, np.ndarray]:
    """alpha_1 along the grid for each fixed value."""
    fixed_key = "theta_1" if spec.variable == "risk_aversion" else "risk_aversion_1"
    out: dict[float, list] = {}
    for r in rows:
        out.setdefault(r[fixed_key], []).append(r["alpha_1"])
    return {k: np.array(v) for k, v in out.items()}


def strictly_monotone(values: Iterable[float], increasing: bool = True) -> bool:
    d = np.diff(np.asarray(list(values), dtype=float))
    return bool(np.all(d > 0)) if increasing else bool(np.all(d < 0))


def write_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    """Header row, ``.`` decimals, one row per record; floats at full precision."""
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
