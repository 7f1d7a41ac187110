"""Candidate function classes: partition sieves and truncated ReLU nets.

Both carry the complexity metadata (uniform bound M, entropy model,
interpolation exponent s, effective dimension) consumed by the rate
engine, and both evaluate on covariate batches.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ep_bounds import EntropyModel
from .losses import LossSpec, loss_value, loss_subgradient
from .rng import RngStream

SCHEMA_VERSION = 1


class ShapeError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetFunction:
    """Ground-truth regression functions used in simulations.

    Sine/PiecewiseLinear act on the first covariate coordinate; Constant
    ignores the input.
    """

    kind: str  # Sine | PiecewiseLinear | Constant
    amplitude: float = 1.0
    frequency: float = 1.0
    level: float = 0.0
    breakpoints: tuple = ()
    values: tuple = ()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = x[:, 0]
        if self.kind == "Sine":
            return self.amplitude * np.sin(2.0 * math.pi * self.frequency * t)
        if self.kind == "PiecewiseLinear":
            return np.interp(t, self.breakpoints, self.values)
        if self.kind == "Constant":
            return np.full(x.shape[0], self.level)
        raise ValueError(f"unknown target kind {self.kind!r}")

    def sup_norm(self) -> float:
        if self.kind == "Sine":
            return abs(self.amplitude)
        if self.kind == "PiecewiseLinear":
            return float(np.max(np.abs(self.values)))
        return abs(self.level)


# ---------------------------------------------------------------------------
# Partition sieve
# ---------------------------------------------------------------------------


def partition_cell_index(x: np.ndarray, dim: int, cells_per_axis: int) -> np.ndarray:
    """Flat cell index on the regular K^d partition of [0,1]^d.

    The last cell is right-closed, so x=1 is valid.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != dim:
        raise ShapeError(f"expected {dim} columns, got {x.shape[1]}")
    idx = np.minimum((x * cells_per_axis).astype(int), cells_per_axis - 1)
    flat = np.zeros(x.shape[0], dtype=int)
    for j in range(dim):
        flat = flat * cells_per_axis + idx[:, j]
    return flat


@dataclass
class PartitionSieve:
    """Piecewise-constant functions on the regular K^d grid over [0,1]^d."""

    dim: int
    cells_per_axis: int
    values: np.ndarray | None = None
    m_bound: float = math.inf  # truncation bound applied to fitted cell values

    def __post_init__(self):
        n_cells = self.cells_per_axis**self.dim
        if self.values is None:
            self.values = np.zeros(n_cells)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (n_cells,):
            raise ShapeError(f"need {n_cells} cell values, got {self.values.shape}")

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis**self.dim

    def cell_index(self, x: np.ndarray) -> np.ndarray:
        return partition_cell_index(x, self.dim, self.cells_per_axis)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.values[self.cell_index(x)]

    def with_values(self, values: np.ndarray) -> "PartitionSieve":
        return PartitionSieve(self.dim, self.cells_per_axis, np.asarray(values, dtype=float), self.m_bound)


def rate_optimal_cells(n: int, alpha: float = 1.0, dim: int = 1) -> int:
    """K_n = ceil(n^{1/(2 alpha + d)}), the tuning that balances bias/variance."""
    return max(1, math.ceil(n ** (1.0 / (2.0 * alpha + dim))))


def partition_entropy_model(cells: int, m_bound: float) -> EntropyModel:
    # finite-dimensional class: effective dim = #cells, no polynomial exponent
    return EntropyModel(D_F=float(cells), gamma=0.0, gamma_prime=1.0, U_F=max(2.0 * m_bound, 1.0))


# ---------------------------------------------------------------------------
# Truncated ReLU network
# ---------------------------------------------------------------------------


@dataclass
class ReluNet:
    """Fully-connected ReLU net (d, W, ..., W, 1) with output truncated to [-M, M]."""

    input_dim: int
    depth: int
    width: int
    truncation_M: float
    weights: list = field(default_factory=list)  # [(A_1, b_1), ..., (A_{D+1}, b_{D+1})]

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise ShapeError("depth and width must be >= 1")
        if not self.weights:
            dims = [self.input_dim] + [self.width] * self.depth + [1]
            self.weights = [
                (np.zeros((dims[i + 1], dims[i])), np.zeros(dims[i + 1]))
                for i in range(len(dims) - 1)
            ]
        dims = [self.input_dim] + [self.width] * self.depth + [1]
        for i, (A, b) in enumerate(self.weights):
            if A.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ShapeError(f"layer {i}: bad shapes {A.shape}, {b.shape}")

    def raw_forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Untruncated output and per-layer pre-activations (for backprop)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ShapeError(f"expected {self.input_dim} columns, got {x.shape[1]}")
        pre_acts = []
        h = x
        for A, b in self.weights[:-1]:
            z = h @ A.T + b
            pre_acts.append(z)
            h = np.maximum(z, 0.0)
        A, b = self.weights[-1]
        out = (h @ A.T + b).ravel()
        return out, pre_acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raw, _ = self.raw_forward(x)
        return truncate(raw, self.truncation_M)

    def copy(self) -> "ReluNet":
        return ReluNet(
            self.input_dim,
            self.depth,
            self.width,
            self.truncation_M,
            [(A.copy(), b.copy()) for A, b in self.weights],
        )

    def init_random(self, stream: RngStream, scale: float = 0.5) -> "ReluNet":
        rng = stream.generator()
        net = self.copy()
        net.weights = [
            (rng.normal(0.0, scale / math.sqrt(max(A.shape[1], 1)), A.shape), rng.normal(0.0, 0.1, b.shape))
            for A, b in net.weights
        ]
        return net

    def gradients(self, x: np.ndarray, out_grad: np.ndarray) -> list:
        """Backprop: parameter gradients of sum_i out_grad_i * truncated_f(x_i).

        The truncation passes gradient only where the raw output is
        strictly inside [-M, M].
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        raw, pre_acts = self.raw_forward(x)
        gate = (np.abs(raw) < self.truncation_M).astype(float)
        delta = (out_grad * gate)[:, None]  # n x 1
        activations = [x]
        for z in pre_acts:
            activations.append(np.maximum(z, 0.0))
        grads = []
        for layer in range(len(self.weights) - 1, -1, -1):
            A, _ = self.weights[layer]
            h = activations[layer]
            grads.append((delta.T @ h, delta.sum(axis=0)))
            if layer > 0:
                delta = (delta @ A) * (pre_acts[layer - 1] > 0)
        grads.reverse()
        return grads

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "ReluNet",
            "input_dim": self.input_dim,
            "depth": self.depth,
            "width": self.width,
            "truncation_M": self.truncation_M,
            "weights": [[A.tolist(), b.tolist()] for A, b in self.weights],
        }
        return json.dumps(payload)

    @staticmethod
    def from_json(blob: str) -> "ReluNet":
        payload = json.loads(blob)
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported model blob version")
        weights = [(np.array(A), np.array(b)) for A, b in payload["weights"]]
        return ReluNet(
            payload["input_dim"], payload["depth"], payload["width"], payload["truncation_M"], weights
        )


def truncate(raw: np.ndarray, m_bound: float) -> np.ndarray:
    """sgn(f) * (|f| and M), the output truncation of the network class."""
    raw = np.asarray(raw, dtype=float)
    return np.sign(raw) * np.minimum(np.abs(raw), m_bound)


def relu_entropy_model(depth: int, width: int, m_bound: float, n: int) -> EntropyModel:
    """Entropy model of the truncated ReLU class from its pseudo-dimension.

    D_F = (DW)^2 log(DW) with natural log; gamma = 0, gamma' = 1 and
    U_F = e*n*M.
    """
    if depth < 1 or width < 1:
        raise ShapeError("depth and width must be >= 1")
    dw = depth * width
    if dw < 2:
        raise ShapeError("need depth*width >= 2 for a positive effective dimension")
    d_f = dw**2 * math.log(dw)
    return EntropyModel(D_F=d_f, gamma=0.0, gamma_prime=1.0, U_F=math.e * n * m_bound)


def relu_effective_sample_size(n: int, depth: int, width: int) -> float:
    dw = depth * width
    if dw < 2:
        raise ShapeError("need depth*width >= 2")
    return n / (dw**2 * math.log(dw))


# ---------------------------------------------------------------------------
# Sieve metadata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SieveSpec:
    kind: str  # PartitionSieve | FiniteDictionary | ReluNet
    uniform_bound_M: float
    entropy: EntropyModel
    interp_s: float = 0.0
    effective_dim_DF: float = 1.0

    def __post_init__(self):
        if self.uniform_bound_M <= 0:
            raise ValueError("uniform_bound_M must be positive")
        if not 0.0 <= self.interp_s <= 1.0:
            raise ValueError("interp_s must lie in [0, 1]")
        if self.effective_dim_DF <= 0:
            raise ValueError("effective_dim_DF must be positive")

    def n_tilde(self, n: int) -> float:
        return n / self.effective_dim_DF


# ---------------------------------------------------------------------------
# SGD trainer (inexact ERM for ReLU nets)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SgdSchedule:
    epochs: int
    batch_size: int
    step_size: float
    stream: RngStream = RngStream(7, 0)


def _prediction_gradient(loss: LossSpec, pred: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d loss / d prediction."""
    if loss.is_glm:
        return np.asarray(loss_subgradient(loss, pred, y))
    if loss.kind == "Quantile":
        return np.asarray(loss_subgradient(loss, y - pred))
    return -np.asarray(loss_subgradient(loss, y - pred))


def empirical_risk(model, loss: LossSpec, x: np.ndarray, y: np.ndarray) -> float:
    pred = model(x)
    if loss.is_glm:
        return float(np.mean(loss_value(loss, pred, y)))
    return float(np.mean(loss_value(loss, y - pred)))


def sgd_train(net: ReluNet, data: tuple[np.ndarray, np.ndarray], loss: LossSpec, schedule: SgdSchedule) -> ReluNet:
    """Plain mini-batch SGD with constant step and best-iterate checkpointing.

    Training mutates a private copy; the best-so-far network (by full-data
    empirical risk) is returned, so the result never does worse than the
    starting point.
    """
    x, y = np.atleast_2d(np.asarray(data[0], dtype=float)), np.asarray(data[1], dtype=float)
    work = net.copy()
    best = net.copy()
    best_risk = empirical_risk(best, loss, x, y)
    if not math.isfinite(best_risk):
        raise TrainingError("non-finite loss on the initial network")
    rng = schedule.stream.generator()
    n = x.shape[0]
    for _ in range(schedule.epochs):
        order = rng.permutation(n)
        for start in range(0, n, schedule.batch_size):
            batch = order[start : start + schedule.batch_size]
            xb, yb = x[batch], y[batch]
            pred = work(xb)
            g = _prediction_gradient(loss, pred, yb) / len(batch)
            grads = work.gradients(xb, g)
            for (A, b), (gA, gb) in zip(work.weights, grads):
                A -= schedule.step_size * gA
                b -= schedule.step_size * gb
        risk = empirical_risk(work, loss, x, y)
        if not math.isfinite(risk):
            raise TrainingError(
                f"non-finite training loss (step_size={schedule.step_size}, "
                f"batch_size={schedule.batch_size})"
            )
        if risk < best_risk:
            best_risk = risk
            best = work.copy()
    return best
