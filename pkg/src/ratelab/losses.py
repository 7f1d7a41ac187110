"""Convex losses and subgradients: squared, Huber, pinball, GLM likelihoods.

The Huber loss keeps the 1/2 x^2 normalization (quadratic for |x| <= tau,
tau|x| - tau^2/2 beyond); the robustness thresholds used by the rate
engine assume exactly this scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOSS_KINDS = ("Squared", "Huber", "Quantile", "Logistic", "Poisson")


class LossConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LossSpec:
    kind: str
    tau: float = 0.0  # Huber scale (> 0) or quantile level in (0, 1)

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise LossConfigError(f"unknown loss kind {self.kind!r}")
        if self.kind == "Huber" and not self.tau > 0:
            raise LossConfigError("Huber loss needs tau > 0")
        if self.kind == "Quantile" and not 0 < self.tau < 1:
            raise LossConfigError("Quantile loss needs tau in (0, 1)")

    @property
    def is_glm(self) -> bool:
        return self.kind in ("Logistic", "Poisson")


def _psi(kind: str, f):
    if kind == "Logistic":
        return np.logaddexp(0.0, f)
    return np.exp(f)  # Poisson


def _psi_pp(kind: str, f):
    if kind == "Logistic":
        s = 1.0 / (1.0 + np.exp(-np.asarray(f, dtype=float)))
        return s * (1.0 - s)
    return np.exp(f)


def loss_value(spec: LossSpec, residual, y=None):
    """Pointwise loss.

    For Squared/Huber/Quantile the argument is the residual y - f(x).
    For GLM losses the argument is the prediction f(x) and `y` the response:
    -y*f + psi(f).
    """
    x = np.asarray(residual, dtype=float)
    if spec.kind == "Squared":
        return 0.5 * x**2
    if spec.kind == "Huber":
        t = spec.tau
        return np.where(np.abs(x) <= t, 0.5 * x**2, t * np.abs(x) - 0.5 * t**2)
    if spec.kind == "Quantile":
        return x * (spec.tau - (x < 0))
    if y is None:
        raise LossConfigError(f"{spec.kind} loss needs the response y")
    return -np.asarray(y, dtype=float) * x + _psi(spec.kind, x)


def loss_subgradient(spec: LossSpec, residual, y=None):
    """Subgradient of the loss w.r.t. its first argument.

    At the pinball kink (residual 0) the selection I(u<0)=0 is used, so
    the reported value is -tau; for Squared/Huber the derivative is w.r.t.
    the residual, for Quantile it is w.r.t. the prediction.
    """
    x = np.asarray(residual, dtype=float)
    if spec.kind == "Squared":
        return x + 0.0
    if spec.kind == "Huber":
        return np.clip(x, -spec.tau, spec.tau)
    if spec.kind == "Quantile":
        return -(spec.tau - (x < 0)) + 0.0
    if y is None:
        raise LossConfigError(f"{spec.kind} loss needs the response y")
    if spec.kind == "Logistic":
        return -np.asarray(y, dtype=float) + 1.0 / (1.0 + np.exp(-x))
    return -np.asarray(y, dtype=float) + np.exp(x)


def glm_curvature_bounds(spec: LossSpec, value_range: tuple[float, float]) -> tuple[float, float]:
    """Two-sided curvature constants (1/2 min psi'', 1/2 max psi'') on a range.

    These sandwich excess risk / squared L2 distance for the GLM losses.
    """
    if not spec.is_glm:
        raise LossConfigError("curvature bounds are defined for Logistic/Poisson only")
    lo, hi = float(value_range[0]), float(value_range[1])
    if lo > hi:
        raise LossConfigError("empty value range")
    if spec.kind == "Poisson":
        if not math.isfinite(hi):
            raise LossConfigError("Poisson curvature needs a bounded range")
        return 0.5 * math.exp(lo), 0.5 * math.exp(hi)
    # Logistic: psi'' = sigma(1-sigma), unimodal with peak 1/4 at 0.
    far = max(abs(lo), abs(hi))
    near = 0.0 if lo <= 0.0 <= hi else min(abs(lo), abs(hi))
    return 0.5 * float(_psi_pp("Logistic", far)), 0.5 * float(_psi_pp("Logistic", near))
