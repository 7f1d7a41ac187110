"""Exact empirical risk minimizers over partition sieves, plus dispatch.

Partition sieves decouple into independent cells: the squared loss gives
the cell mean, the Huber loss a bisection root of the clipped-residual
balance, and the pinball loss a lower empirical quantile.  ReLU nets go
through the SGD trainer.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .losses import LossSpec
from .noise import CovariateSpec, sample_covariates
from .rng import RngStream
from .sieves import PartitionSieve, ReluNet, SgdSchedule, empirical_risk, sgd_train

#: dedicated stream for L2-error quadrature, never used for training data
EVAL_STREAM = RngStream(0xE7A1, 0xE7A1)


class DataError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass
class FitResult:
    model: object
    empirical_risk: float
    diagnostics: dict
    wall_time: float


def _huber_cell_roots(y_sorted: np.ndarray, starts: np.ndarray, counts: np.ndarray, tau: float, tol: float = 1e-10):
    """Vectorized bisection for the Huber first-order condition per cell.

    sum_i clip(y_i - c, -tau, tau) is continuous, nonincreasing in c, equals
    +k*tau at c = min(y) - tau and -k*tau at c = max(y) + tau, so the
    bracket always contains the unique root.
    """
    n_cells = len(starts)
    lo = np.empty(n_cells)
    hi = np.empty(n_cells)
    mins = np.minimum.reduceat(y_sorted, starts)
    maxs = np.maximum.reduceat(y_sorted, starts)
    lo[:] = mins - tau
    hi[:] = maxs + tau
    cell_of_point = np.repeat(np.arange(n_cells), counts)
    iters = 0
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        s = np.add.reduceat(np.clip(y_sorted - mid[cell_of_point], -tau, tau), starts)
        going_down = s <= 0.0  # root is at or left of mid
        hi = np.where(going_down, mid, hi)
        lo = np.where(going_down, lo, mid)
        iters += 1
        if iters > 200:  # bracket shrinks by half each step; unreachable
            raise RuntimeError("Huber bisection failed to converge")
    return 0.5 * (lo + hi), iters


def _lower_quantiles(y_sorted: np.ndarray, starts: np.ndarray, counts: np.ndarray, level: float):
    """ceil(k * level)-th order statistic within each cell (1-indexed)."""
    ranks = np.maximum(np.ceil(counts * level).astype(int), 1) - 1
    return y_sorted[starts + ranks]


def fit_cellwise(sieve: PartitionSieve, data, loss: LossSpec) -> FitResult:
    """Exact cellwise ERM for Squared / Huber / Quantile losses."""
    t0 = time.perf_counter()
    x, y = np.atleast_2d(np.asarray(data[0], dtype=float)), np.asarray(data[1], dtype=float)
    if y.size == 0:
        raise DataError("empty data")
    if not np.all(np.isfinite(y)):
        raise DataError("non-finite responses")
    if loss.kind not in ("Squared", "Huber", "Quantile"):
        raise ConfigurationError(f"cellwise fitting does not support {loss.kind}")

    cells = sieve.cell_index(x)
    # sort by cell, then by value within the cell (the quantile path reads
    # order statistics straight off the sorted block)
    order = np.lexsort((y, cells))
    cells_sorted = cells[order]
    y_sorted = y[order]
    occupied, starts, counts = np.unique(cells_sorted, return_index=True, return_counts=True)

    iterations = 0
    if loss.kind == "Squared":
        fitted = np.add.reduceat(y_sorted, starts) / counts
    elif loss.kind == "Huber":
        fitted, iterations = _huber_cell_roots(y_sorted, starts, counts, loss.tau)
    else:
        fitted = _lower_quantiles(y_sorted, starts, counts, loss.tau)

    values = np.zeros(sieve.n_cells)
    values[occupied] = fitted
    if math.isfinite(sieve.m_bound):
        values = np.clip(values, -sieve.m_bound, sieve.m_bound)
    model = sieve.with_values(values)

    risk = empirical_risk(model, loss, x, y)
    elapsed = time.perf_counter() - t0
    diagnostics = {
        "cell_counts": dict(zip(occupied.tolist(), counts.tolist())),
        "empty_cells": int(sieve.n_cells - len(occupied)),
        "bisection_iterations": iterations,
    }
    return FitResult(model, risk, diagnostics, elapsed)


def fit(sieve, data, loss: LossSpec, solver_opts: SgdSchedule | None = None) -> FitResult:
    """Dispatch: partition sieves get the exact cellwise solver, ReLU nets SGD."""
    if isinstance(sieve, PartitionSieve):
        return fit_cellwise(sieve, data, loss)
    if isinstance(sieve, ReluNet):
        if solver_opts is None:
            raise ConfigurationError("ReluNet fitting needs an SgdSchedule")
        t0 = time.perf_counter()
        x, y = np.atleast_2d(np.asarray(data[0], dtype=float)), np.asarray(data[1], dtype=float)
        trained = sgd_train(sieve, (x, y), loss, solver_opts)
        risk = empirical_risk(trained, loss, x, y)
        return FitResult(trained, risk, {"epochs": solver_opts.epochs}, time.perf_counter() - t0)
    raise ConfigurationError(f"unsupported sieve type {type(sieve).__name__}")


def l2_error(model, f0, covariate_spec: CovariateSpec, n_eval: int, stream: RngStream = EVAL_STREAM) -> float:
    """Monte-Carlo L2(P) distance between the fitted model and the target.

    Uses a dedicated evaluation stream so the quadrature points never
    overlap training randomness.
    """
    if n_eval < 1_000:
        raise ValueError("n_eval must be >= 1000")
    x = sample_covariates(covariate_spec, stream, n_eval)
    diff = np.asarray(model(x), dtype=float) - np.asarray(f0(x), dtype=float)
    return float(np.sqrt(np.mean(diff**2)))
