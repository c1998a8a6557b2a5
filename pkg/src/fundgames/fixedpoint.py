"""Synchronous best-response iteration shared by the n-player games."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .market import ConstantStrategy

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class EquilibriumResult:
    """Equilibrium strategies plus the aggregate constant (D or K).

    Fixed-point runs also fill ``iterations``, ``residual`` and ``converged``;
    a run that hits ``max_iter`` comes back with ``converged=False`` and the
    last iterate instead of raising.
    """

    strategies: tuple[ConstantStrategy, ...]
    aggregate: float
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    damped: bool = field(default=False, compare=False)

    def as_array(self) -> np.ndarray:
        """(n, 2) array of (alpha, beta)."""
        return np.array([[s.alpha, s.beta] for s in self.strategies], dtype=float)


ResponseMap = Callable[[np.ndarray], np.ndarray]


def iterate(
    respond: ResponseMap,
    init: np.ndarray,
    aggregate: Callable[[np.ndarray], float],
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EquilibriumResult:
    """Jacobi iteration ``x <- respond(x)`` on an (n, 2) strategy array.

    ``iterations`` counts applied updates; the run stops as soon as the
    returned profile's fixed-point residual ``max|respond(x) - x|`` drops below
    ``tol``.  Once the residual grows between sweeps the update is damped by
    one half for the rest of the run.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    x = np.array(init, dtype=float)
    step = 1.0
    prev_res = np.inf
    res = np.inf
    for it in range(max_iter + 1):
        y = respond(x)
        res = float(np.max(np.abs(y - x))) if x.size else 0.0
        if it > 0 and res < tol:
            return _result(x, aggregate, it, res, True, step < 1.0)
        if it == max_iter:
            break
        if res > prev_res:
            step = 0.5
        prev_res = res
        x = x + step * (y - x) if step < 1.0 else y
    return _result(x, aggregate, max_iter, res, False, step < 1.0)


def _result(x, aggregate, it, res, ok, damped) -> EquilibriumResult:
    strategies = tuple(ConstantStrategy(float(a), float(b)) for a, b in x)
    return EquilibriumResult(strategies, aggregate(x), it, res, ok, damped)
