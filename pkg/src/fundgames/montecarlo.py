"""Monte Carlo oracle for the coupled log-return dynamics.

Random streams
--------------
Paths are cut into fixed blocks of ``CHUNK`` paths.  Block ``c`` draws the
common shock from ``SeedSequence(seed, spawn_key=(c, 0))`` and manager ``i``'s
idiosyncratic shock from ``SeedSequence(seed, spawn_key=(c, i + 1))``, each
feeding a counter-based Philox generator.  Output therefore depends only on
``(seed, paths, steps, scheme)``, never on the number of workers.

Schemes
-------
``exact``  draws ``B_T`` and ``W^i_T`` and forms ``R_T`` from the Gaussian law.
``euler``  steps the discounted wealth SDE
           ``dX/X = (mu alpha + mu_k beta) dt + common dB + idio dW``
           with Euler-Maruyama and accumulates ``log(1 + increment)``; the bond
           part ``kappa T`` is added exactly.  It also keeps the exact solution
           driven by the same increments (``coupled_exact``) so that the weak
           discretization bias can be measured without sampling noise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import ConstantStrategy, Criterion, Population, exposure

CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 1.0
    steps: int = 1
    paths: int = 100_000
    seed: int = 0
    scheme: str = "exact"
    workers: int = 1

    def __post_init__(self) -> None:
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.paths < 1:
            raise ValueError("paths must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.scheme not in ("exact", "euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class SimResult:
    terminal: np.ndarray               # (paths, n) terminal log-returns
    estimates: np.ndarray              # (n,) payoff estimates under pop.criterion
    std_errors: np.ndarray             # (n,)
    thetas: np.ndarray                 # (n,) competition weights used for Z
    coupled_exact: np.ndarray | None = None  # euler only: exact R_T on the same noise

    @property
    def paths(self) -> int:
        return self.terminal.shape[0]

    @property
    def n(self) -> int:
        return self.terminal.shape[1]

    def excess(self, k: int, theta: float | None = None) -> np.ndarray:
        """Per-path ``Z^k = R^k - (theta_k / n) sum_i R^i``."""
        th = self.thetas[k] if theta is None else theta
        return self.terminal[:, k] - th * self.terminal.mean(axis=1)


def _generator(seed: int, chunk: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk, stream))))


def _simulate_chunk(c: int, size: int, coeffs: np.ndarray, kappa: float, cfg: SimConfig):
    """Terminal log-returns for one block.  ``coeffs`` rows: drift, common, idio, risky drift."""
    n = coeffs.shape[1]
    drift, common, idio, risky_drift = coeffs
    T = cfg.horizon
    if cfg.scheme == "exact":
        b = _generator(cfg.seed, c, 0).standard_normal(size) * math.sqrt(T)
        out = np.empty((size, n))
        for i in range(n):
            w = _generator(cfg.seed, c, i + 1).standard_normal(size) * math.sqrt(T)
            out[:, i] = drift[i] * T + common[i] * b + idio[i] * w
        return out, None
    dt = T / cfg.steps
    sq = math.sqrt(dt)
    db = _generator(cfg.seed, c, 0).standard_normal((size, cfg.steps)) * sq
    out = np.empty((size, n))
    ref = np.empty((size, n))
    for i in range(n):
        dw = _generator(cfg.seed, c, i + 1).standard_normal((size, cfg.steps)) * sq
        growth = risky_drift[i] * dt + common[i] * db + idio[i] * dw
        if np.any(growth <= -1.0):
            raise FloatingPointError(
                f"Euler step ruins manager {i}'s wealth; increase steps")
        out[:, i] = kappa * T + np.log1p(growth).sum(axis=1)
        ref[:, i] = drift[i] * T + common[i] * db.sum(axis=1) + idio[i] * dw.sum(axis=1)
    return out, ref


def simulate(pop: Population, strategies: Sequence[ConstantStrategy], cfg: SimConfig) -> SimResult:
    """Simulate terminal log-returns of all managers and estimate their payoffs."""
    if len(strategies) != pop.n:
        raise ValueError(f"expected {pop.n} strategies, got {len(strategies)}")
    m = pop.market
    rows = []
    for g, s in zip(pop.managers, strategies):
        d, c, e = exposure(s, m, g.asset)
        rows.append((d, c, e, m.mu * s.alpha + g.asset.mu * s.beta))
    coeffs = np.array(rows).T
    bounds = [(c, min(CHUNK, cfg.paths - c * CHUNK)) for c in range(-(-cfg.paths // CHUNK))]

    def run(job):
        return _simulate_chunk(job[0], job[1], coeffs, m.kappa, cfg)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    terminal = np.concatenate([p[0] for p in parts])
    ref = None if cfg.scheme == "exact" else np.concatenate([p[1] for p in parts])

    thetas = np.array([g.theta for g in pop.managers])
    partial = SimResult(terminal, np.empty(0), np.empty(0), thetas, ref)
    est, se = [], []
    for k, g in enumerate(pop.managers):
        if pop.criterion is Criterion.MV and partial.paths < 2:
            est.append(math.nan)
            se.append(math.nan)
            continue
        e_k, s_k = mc_payoff(partial, k, pop.criterion, g.risk_aversion, g.theta)
        est.append(e_k)
        se.append(s_k)
    return SimResult(terminal, np.array(est), np.array(se), thetas, ref)


def mc_payoff(
    result: SimResult,
    k: int,
    criterion: Criterion,
    risk_aversion: float,
    theta: float,
) -> tuple[float, float]:
    """Payoff estimate and standard error for manager ``k``.

    Exponential: sample mean of ``-exp(-Z/delta)``.  Mean-variance: sample
    mean minus ``gamma/2`` times the sample variance, with a delta-method
    standard error from the influence function
    ``(Z - m) - gamma/2 * ((Z - m)^2 - s^2)``.
    """
    if not 0 <= k < result.n:
        raise IndexError(f"manager index {k} out of range for n={result.n}")
    z = result.excess(k, theta)
    N = z.size
    if Criterion(criterion) is Criterion.EXP:
        u = -np.exp(-z / risk_aversion)
        se = float(u.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0
        return float(u.mean()), se
    if N < 2:
        raise ValueError("mean-variance estimate needs at least two paths")
    m = z.mean()
    v = z.var(ddof=1)
    psi = (z - m) - 0.5 * risk_aversion * ((z - m) ** 2 - v)
    return float(m - 0.5 * risk_aversion * v), float(psi.std(ddof=1) / math.sqrt(N))


def moment_errors(sample: np.ndarray) -> tuple[float, float, float, float]:
    """Sample mean, its standard error, sample variance and its standard error."""
    N = sample.size
    m = sample.mean()
    v = sample.var(ddof=1)
    m4 = np.mean((sample - m) ** 4)
    se_v = math.sqrt(max(m4 - v * v, 0.0) / N)
    return float(m), math.sqrt(v / N), float(v), se_v


def weak_error(result: SimResult, k: int) -> float:
    """``|mean(R_euler - R_exact)|`` on shared noise for manager ``k``."""
    if result.coupled_exact is None:
        raise ValueError("weak error needs an euler run")
    return float(abs(np.mean(result.terminal[:, k] - result.coupled_exact[:, k])))


def write_paths(result: SimResult, path, fmt: str = "csv") -> None:
    """Dump the terminal matrix (row = path, column = manager).

    ``csv``: headerless, comma-separated, ``repr``-precision floats.
    ``bin``: headerless little-endian float64, row-major.
    """
    if fmt == "csv":
        np.savetxt(path, result.terminal, delimiter=",", fmt="%.17g")
    elif fmt == "bin":
        result.terminal.astype("<f8").tofile(path)
    else:
        raise ValueError(f"unknown path format {fmt!r}")
