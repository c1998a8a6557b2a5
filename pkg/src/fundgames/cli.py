"""Command-line entry point.

Every subcommand reads one JSON experiment file, writes CSV files into the
output directory and prints a short summary on stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np

from . import exponential, meanvariance, mfg, montecarlo, payoff, sensitivity
from .fixedpoint import DEFAULT_TOL
from .market import (
    ConstantStrategy,
    Criterion,
    ManagerType,
    MarketParams,
    Population,
    PrivateAsset,
    excess_law_nplayer,
)

log = logging.getLogger("fundgames")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3

MODELS = ("exp_nplayer", "exp_mfg", "mv_nplayer", "mv_mfg")
DEFAULT_SIZES = tuple(2**j for j in range(1, 11))


class ConfigError(ValueError):
    pass


# --- configuration --------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    variable: str = "risk_aversion"
    start: float = 0.1
    stop: float = 20.0
    num: int = 200
    fixed: tuple[float, ...] = (0.5,)


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    market: MarketParams
    managers: tuple[ManagerType, ...] | None = None
    distribution: tuple[tuple[ManagerType, float], ...] | None = None
    horizon: float = 1.0
    strategies: tuple[ConstantStrategy, ...] | None = None
    simulation: montecarlo.SimConfig = field(default_factory=montecarlo.SimConfig)
    sweep: SweepConfig | None = None
    sizes: tuple[int, ...] = DEFAULT_SIZES
    convergence_seed: int = 0
    output: str = "."

    @property
    def criterion(self) -> Criterion:
        return Criterion(self.model.split("_")[0])

    @property
    def mean_field(self) -> bool:
        return self.model.endswith("_mfg")

    def population(self) -> Population:
        return Population(self.market, self.managers, self.criterion)

    def type_distribution(self) -> mfg.TypeDistribution:
        return mfg.TypeDistribution(self.distribution)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _expect(d, dict, "config")
        _no_extra(d, {"model", "market", "managers", "distribution", "horizon", "strategies",
                      "simulation", "sweep", "convergence", "output"}, "config")
        model = _field(d, "model", str, "model")
        if model not in MODELS:
            raise ConfigError(f"model: expected one of {', '.join(MODELS)}, got {model!r}")
        market = _build("market", lambda: MarketParams(**_numbers(
            _field(d, "market", dict, "market"), ("kappa", "mu", "sigma"), "market")))
        has_m, has_d = "managers" in d, "distribution" in d
        if has_m == has_d:
            raise ConfigError("managers/distribution: exactly one of the two blocks is required")
        mean_field = model.endswith("_mfg")
        if mean_field and not has_d:
            raise ConfigError(f"distribution: model {model} needs a distribution block")
        if not mean_field and not has_m:
            raise ConfigError(f"managers: model {model} needs a managers list")
        managers = distribution = None
        if has_m:
            items = _field(d, "managers", list, "managers")
            if not items:
                raise ConfigError("managers: list must be nonempty")
            managers = tuple(_manager(m, f"managers[{i}]") for i, m in enumerate(items))
        else:
            items = _field(d, "distribution", list, "distribution")
            if not items:
                raise ConfigError("distribution: list must be nonempty")
            distribution = tuple(
                (_manager(a, f"distribution[{i}]", extra={"weight"}),
                 _number(a.get("weight", 1.0), f"distribution[{i}].weight"))
                for i, a in enumerate(items)
            )
            _build("distribution", lambda: mfg.TypeDistribution(distribution))
        horizon = _number(d.get("horizon", 1.0), "horizon")
        if not horizon > 0:
            raise ConfigError("horizon: must be positive")
        strategies = None
        if "strategies" in d:
            items = _field(d, "strategies", list, "strategies")
            expected = len(managers) if managers else len(distribution)
            if len(items) != expected:
                raise ConfigError(f"strategies: expected {expected} entries, got {len(items)}")
            strategies = tuple(
                _build(f"strategies[{i}]", lambda s=s, i=i: ConstantStrategy(
                    **_numbers(s, ("alpha", "beta"), f"strategies[{i}]")))
                for i, s in enumerate(items)
            )
        sim = montecarlo.SimConfig()
        if "simulation" in d:
            s = _field(d, "simulation", dict, "simulation")
            _no_extra(s, {"paths", "steps", "seed", "scheme", "workers"}, "simulation")
            kw = {}
            for key in ("paths", "steps", "seed", "workers"):
                if key in s:
                    kw[key] = _integer(s[key], f"simulation.{key}")
            if "scheme" in s:
                kw["scheme"] = _field(s, "scheme", str, "simulation.scheme")
            sim = _build("simulation", lambda: montecarlo.SimConfig(horizon=horizon, **kw))
        else:
            sim = montecarlo.SimConfig(horizon=horizon)
        sweep = None
        if "sweep" in d:
            s = _field(d, "sweep", dict, "sweep")
            _no_extra(s, {"variable", "start", "stop", "num", "fixed"}, "sweep")
            base = SweepConfig()
            fixed = s.get("fixed", list(base.fixed))
            _expect(fixed, list, "sweep.fixed")
            sweep = SweepConfig(
                variable=s.get("variable", base.variable),
                start=_number(s.get("start", base.start), "sweep.start"),
                stop=_number(s.get("stop", base.stop), "sweep.stop"),
                num=_integer(s.get("num", base.num), "sweep.num"),
                fixed=tuple(_number(x, "sweep.fixed") for x in fixed),
            )
            if sweep.variable not in ("risk_aversion", "theta"):
                raise ConfigError("sweep.variable: expected 'risk_aversion' or 'theta'")
            if sweep.num < 2 or not sweep.fixed:
                raise ConfigError("sweep.num: need at least 2 grid points and one fixed value")
        sizes, cseed = DEFAULT_SIZES, 0
        if "convergence" in d:
            c = _field(d, "convergence", dict, "convergence")
            _no_extra(c, {"sizes", "seed"}, "convergence")
            if "sizes" in c:
                raw = _field(c, "sizes", list, "convergence.sizes")
                sizes = tuple(_integer(x, "convergence.sizes") for x in raw)
                if not sizes or min(sizes) < 1:
                    raise ConfigError("convergence.sizes: need positive population sizes")
            cseed = _integer(c.get("seed", 0), "convergence.seed")
        output = _field(d, "output", str, "output") if "output" in d else "."
        return cls(model, market, managers, distribution, horizon, strategies, sim, sweep,
                   sizes, cseed, output)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"model": self.model, "market": asdict(self.market)}
        if self.managers is not None:
            out["managers"] = [_manager_dict(m) for m in self.managers]
        else:
            out["distribution"] = [dict(_manager_dict(m), weight=w) for m, w in self.distribution]
        out["horizon"] = self.horizon
        if self.strategies is not None:
            out["strategies"] = [asdict(s) for s in self.strategies]
        sim = asdict(self.simulation)
        sim.pop("horizon")
        out["simulation"] = sim
        if self.sweep is not None:
            out["sweep"] = dict(asdict(self.sweep), fixed=list(self.sweep.fixed))
        out["convergence"] = {"sizes": list(self.sizes), "seed": self.convergence_seed}
        out["output"] = self.output
        return out


def _manager_dict(m: ManagerType) -> dict:
    return {"risk_aversion": m.risk_aversion, "theta": m.theta,
            "asset": {"mu": m.asset.mu, "sigma": m.asset.sigma, "nu": m.asset.nu}}


def _expect(value, kind, name):
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        want = kind.__name__ if isinstance(kind, type) else "number"
        raise ConfigError(f"{name}: expected {want}, got {type(value).__name__}")
    return value


def _field(d: dict, key: str, kind, name: str):
    if key not in d:
        raise ConfigError(f"{name}: missing required field")
    return _expect(d[key], kind, name)


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name}: must be finite")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return value


def _numbers(d: dict, keys, name: str) -> dict:
    _no_extra(d, set(keys), name)
    return {k: _number(_field(d, k, (int, float), f"{name}.{k}"), f"{name}.{k}") for k in keys}


def _no_extra(d: dict, allowed: set, name: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{name}.{extra[0]}: unknown field")


def _build(name: str, make):
    try:
        return make()
    except (ValueError, AssertionError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name}: {exc}") from None


def _manager(d, name: str, extra=frozenset()) -> ManagerType:
    _expect(d, dict, name)
    _no_extra(d, {"risk_aversion", "theta", "asset"} | set(extra), name)
    asset = _build(f"{name}.asset", lambda: PrivateAsset(**_numbers(
        _field(d, "asset", dict, f"{name}.asset"), ("mu", "sigma", "nu"), f"{name}.asset")))
    rho = _number(_field(d, "risk_aversion", (int, float), f"{name}.risk_aversion"),
                  f"{name}.risk_aversion")
    theta = _number(_field(d, "theta", (int, float), f"{name}.theta"), f"{name}.theta")
    return _build(name, lambda: ManagerType(rho, theta, asset))


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(raw)


# --- subcommands ----------------------------------------------------------------

def _need_nplayer(cfg: ExperimentConfig, cmd: str) -> None:
    if cfg.mean_field:
        raise ConfigError(f"model: '{cmd}' needs an n-player model, got {cfg.model}")


def _need_mfg(cfg: ExperimentConfig, cmd: str) -> None:
    if not cfg.mean_field:
        raise ConfigError(f"model: '{cmd}' needs a mean-field model, got {cfg.model}")


def _solve(pop: Population):
    if pop.criterion is Criterion.EXP:
        return exponential.equilibrium_exp(pop)
    return meanvariance.equilibrium_mv(pop)


def _fixed_point(pop: Population, tol: float):
    if pop.criterion is Criterion.EXP:
        return exponential.fixed_point_exp(pop, tol=tol)
    return meanvariance.fixed_point_mv(pop, tol=tol)


def cmd_equilibrium(cfg: ExperimentConfig, args) -> int:
    _need_nplayer(cfg, "equilibrium")
    pop = cfg.population()
    eq = _solve(pop)
    fp = _fixed_point(pop, args.tol)
    gap = float(np.max(np.abs(fp.as_array() - eq.as_array())))
    rows = [{"k": k, "alpha": s.alpha, "beta": s.beta, "aggregate": eq.aggregate}
            for k, s in enumerate(eq.strategies)]
    _write(rows, args.output, "equilibrium.csv")
    name = "D" if pop.criterion is Criterion.EXP else "K"
    print(f"{cfg.model}: n={pop.n} aggregate {name}={eq.aggregate:.6f}")
    for r in rows:
        print(f"  k={r['k']} alpha={r['alpha']:.6f} beta={r['beta']:.6f}")
    print(f"fixed-point check: {fp.iterations} iterations, converged={fp.converged}, "
          f"sup gap {gap:.3e}")
    return EXIT_OK


def cmd_mfe(cfg: ExperimentConfig, args) -> int:
    _need_mfg(cfg, "mfe")
    dist = cfg.type_distribution()
    res = mfg.mfe(dist, cfg.market, cfg.criterion)
    fp = mfg.fixed_point_mfg(dist, cfg.market, cfg.criterion, tol=args.tol)
    rows = [{"atom": i, "weight": w, "alpha": s.alpha, "beta": s.beta,
             "aggregate": res.aggregate}
            for i, ((_, w), s) in enumerate(zip(dist.atoms, res.strategies))]
    _write(rows, args.output, "mfe.csv")
    name = "L" if cfg.criterion is Criterion.EXP else "R"
    print(f"{cfg.model}: {len(rows)} atoms aggregate {name}={res.aggregate:.6f} "
          f"mean common loading {res.mean_common:.6f}")
    for r in rows:
        print(f"  atom={r['atom']} alpha={r['alpha']:.6f} beta={r['beta']:.6f}")
    print(f"fixed-point check: {fp.iterations} iterations, converged={fp.converged}")
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    grid = args.deviation_grid
    rows = []
    if cfg.mean_field:
        dist = cfg.type_distribution()
        cands = cfg.strategies or mfg.mfe(dist, cfg.market, cfg.criterion).strategies
        common, drift = mfg.population_statistics(dist, cfg.market, cands)
        for i, (m, s) in enumerate(zip(dist.types, cands)):
            r = payoff.deviation_scan_mfg(m, cfg.market, s, common, drift, cfg.criterion,
                                          grid, cfg.horizon)
            rows.append(_verify_row(i, s, r))
    else:
        pop = cfg.population()
        cands = cfg.strategies or _solve(pop).strategies
        for k, s in enumerate(cands):
            r = payoff.deviation_scan(pop, cands, k, grid, cfg.horizon)
            rows.append(_verify_row(k, s, r))
    _write(rows, args.output, "verify.csv")
    worst = max(r["improvement"] for r in rows)
    ok = worst <= args.verify_tol
    print(f"{cfg.model}: largest deviation gain {worst:.3e} "
          f"({'no profitable deviation' if ok else 'PROFITABLE DEVIATION'}, tol {args.verify_tol:g})")
    return EXIT_OK if ok else EXIT_VERIFY


def _verify_row(k, s, r) -> dict:
    return {"k": k, "alpha": s.alpha, "beta": s.beta, "best_alpha": r.best_deviation.alpha,
            "best_beta": r.best_deviation.beta, "improvement": r.improvement}


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    _need_nplayer(cfg, "simulate")
    pop = cfg.population()
    strategies = cfg.strategies or _solve(pop).strategies
    sim = cfg.simulation
    res = montecarlo.simulate(pop, strategies, sim)
    rows = []
    for k, g in enumerate(pop.managers):
        law = excess_law_nplayer(pop, strategies, k, cfg.horizon)
        rows.append({"k": k, "estimate": float(res.estimates[k]),
                     "std_error": float(res.std_errors[k]),
                     "analytic": payoff.payoff(law, pop.criterion, g.risk_aversion)})
    _write(rows, args.output, "simulate.csv")
    if args.dump_paths:
        _io(lambda: montecarlo.write_paths(res, _out(args.output, args.dump_paths),
                                           args.paths_format))
    print(f"{cfg.model}: {sim.paths} paths, scheme {sim.scheme}, steps {sim.steps}, seed {sim.seed}")
    for r in rows:
        z = (r["estimate"] - r["analytic"]) / r["std_error"] if r["std_error"] > 0 else 0.0
        print(f"  k={r['k']} estimate={r['estimate']:.6f} se={r['std_error']:.2e} "
              f"analytic={r['analytic']:.6f} z={z:+.2f}")
    return EXIT_OK


def cmd_sensitivity(cfg: ExperimentConfig, args) -> int:
    rows = []
    if cfg.mean_field:
        dist = cfg.type_distribution()
        for i, m in enumerate(dist.types):
            for name, value in sensitivity.partials_mfe(m, cfg.market, dist, cfg.criterion).items():
                rows.append({"k": i, "parameter": name, "d_alpha": value, "d_beta": ""})
    else:
        pop = cfg.population()
        for k in range(pop.n):
            p = sensitivity.partials(pop, k)
            for name in sensitivity.OWN_PARAMS:
                rows.append({"k": k, "parameter": name, "d_alpha": p.alpha[name],
                             "d_beta": p.beta[name]})
            for i, v in p.alpha_theta_others.items():
                rows.append({"k": k, "parameter": f"theta_{i}", "d_alpha": v, "d_beta": 0.0})
            for i, v in p.alpha_risk_others.items():
                rows.append({"k": k, "parameter": f"risk_aversion_{i}", "d_alpha": v,
                             "d_beta": 0.0})
            label = sensitivity.classify_case(pop.market, pop.managers[k].asset)
            print(f"  k={k}: {label.value}")
    _write(rows, args.output, "sensitivity.csv")
    print(f"{cfg.model}: {len(rows)} partial derivatives written")
    return EXIT_OK


def cmd_converge(cfg: ExperimentConfig, args) -> int:
    _need_mfg(cfg, "converge")
    table = mfg.convergence_study(cfg.type_distribution(), cfg.market, cfg.sizes,
                                  cfg.convergence_seed, cfg.criterion)
    rows = [asdict(r) for r in table]
    _write(rows, args.output, "converge.csv")
    print(f"{cfg.model}: n, sup distance to the mean-field strategies")
    for r in table:
        print(f"  {r.n:6d} {r.distance:.3e}")
    return EXIT_OK


def cmd_figures(cfg: ExperimentConfig, args) -> int:
    if cfg.sweep is not None:
        _need_nplayer(cfg, "figures")
        if len(cfg.managers) != 2:
            raise ConfigError("managers: a custom sweep needs exactly two managers")
        sw = cfg.sweep
        me, rival = cfg.managers
        specs = [sensitivity.FigureSpec(
            "sweep", cfg.criterion, sensitivity.classify_case(cfg.market, me.asset),
            sw.variable, tuple(np.linspace(sw.start, sw.stop, sw.num).tolist()), sw.fixed,
            rival_theta=rival.theta, rival_risk_aversion=rival.risk_aversion,
            market=cfg.market, asset=me.asset)]
    else:
        specs = sensitivity.preset_figure_specs(cfg.criterion)
    for spec in specs:
        rows = _build("sweep", lambda spec=spec: sensitivity.figure_sweep(spec))
        _write(rows, args.output, f"{spec.name}.csv")
        print(f"  {spec.name}: {spec.case.value}, {len(rows)} rows")
    return EXIT_OK


COMMANDS = {
    "equilibrium": (cmd_equilibrium, "closed-form n-player equilibrium plus fixed-point check"),
    "mfe": (cmd_mfe, "mean-field equilibrium for every atom of the type distribution"),
    "verify": (cmd_verify, "grid search for profitable unilateral deviations"),
    "simulate": (cmd_simulate, "Monte Carlo payoff estimates against the closed forms"),
    "sensitivity": (cmd_sensitivity, "analytic partial derivatives of the equilibrium"),
    "converge": (cmd_converge, "distance between sampled n-player and mean-field strategies"),
    "figures": (cmd_figures, "two-manager alpha sweeps as CSV"),
}


# --- plumbing -------------------------------------------------------------------

class _IOFailure(Exception):
    pass


def _io(action):
    try:
        return action()
    except OSError as exc:
        raise _IOFailure(str(exc)) from None


def _out(directory: str, name: str) -> str:
    return name if os.path.isabs(name) else os.path.join(directory, name)


def _write(rows, directory: str, name: str) -> None:
    def go():
        os.makedirs(directory, exist_ok=True)
        sensitivity.write_csv(rows, _out(directory, name))

    _io(go)


def _grid(text: str) -> payoff.GridSpec:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if len(vals) == 3:
        return payoff.GridSpec(vals[0], vals[1], vals[0], vals[1], vals[2])
    if len(vals) == 5:
        return payoff.GridSpec(*vals)
    raise argparse.ArgumentTypeError("grid is LO,HI,STEP or AMIN,AMAX,BMIN,BMAX,STEP")


EPILOG = """exit codes:
  0  success
  1  verification failure (verify found a deviation gain above --verify-tol)
  2  configuration error (unparsable file, bad field, invalid parameters)
  3  I/O error (config unreadable or output not writable)
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundgames", description="Equilibria of competing fund managers.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="JSON experiment file")
        p.add_argument("--output", help="output directory (overrides the config)")
        p.add_argument("--dump-config", action="store_true",
                       help="print the normalized config as JSON and exit")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="fixed-point tolerance (default %(default)g)")
        p.add_argument("--deviation-grid", type=_grid, default=payoff.GridSpec(),
                       metavar="LO,HI,STEP", help="deviation grid (default -10,10,0.05)")
        p.add_argument("--verify-tol", type=float, default=1e-9,
                       help="largest acceptable deviation gain (default %(default)g)")
        p.add_argument("--paths", type=int, help="Monte Carlo paths")
        p.add_argument("--steps", type=int, help="time steps of the euler scheme")
        p.add_argument("--scheme", choices=("exact", "euler"))
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--workers", type=int, help="Monte Carlo worker threads")
        p.add_argument("--dump-paths", metavar="FILE",
                       help="write the terminal log-return matrix (simulate)")
        p.add_argument("--paths-format", choices=("csv", "bin"), default="csv")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    sim = {k: getattr(args, k) for k in ("paths", "steps", "scheme", "seed", "workers")
           if getattr(args, k) is not None}
    if sim:
        cfg = replace(cfg, simulation=_build("simulation", lambda: replace(cfg.simulation, **sim)))
    if args.output is not None:
        cfg = replace(cfg, output=args.output)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.dump_config:
            print(json.dumps(cfg.to_dict(), indent=2))
            return EXIT_OK
        args.output = cfg.output
        return COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
